#include "iswsst/tensor.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "iswsst/error.hpp"

namespace iswsst {

namespace detail {

struct Node {
  Shape shape;
  DType dtype = DType::F64;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool released = false;
  const char* op = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;
};

}  // namespace detail

namespace {

thread_local bool g_grad_mode = true;

void round_to(DType dtype, std::vector<double>& values) {
  if (dtype != DType::F32) return;
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values, DType dtype) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " elements, got " +
                         std::to_string(values.size()));
  }
  for (std::size_t extent : shape) {
    if (extent == 0) throw ContractError("tensor extents must be positive, got " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->dtype = dtype;
  round_to(dtype, values);
  node->values = std::move(values);
  return node;
}

[[maybe_unused]] bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

const char* dtype_name(DType dtype) { return dtype == DType::F32 ? "f32" : "f64"; }

DType promote(DType a, DType b) { return (a == DType::F64 || b == DType::F64) ? DType::F64 : DType::F32; }

Tensor Tensor::zeros(Shape shape, DType dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::ones(Shape shape, DType dtype) { return full(std::move(shape), 1.0, dtype); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  std::vector<double> values(shape_numel(shape), value);
  return Tensor(make_leaf(std::move(shape), std::move(values), dtype));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, DType dtype) {
  return Tensor(make_leaf(std::move(shape), std::move(values), dtype));
}

Tensor Tensor::scalar(double value, DType dtype) { return full({1}, value, dtype); }

const Shape& Tensor::shape() const {
  assert(node_);
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  }
  return shape()[axis];
}

std::size_t Tensor::numel() const { return node_->values.size(); }

DType Tensor::dtype() const { return node_->dtype; }

std::span<const double> Tensor::values() const { return node_->values; }

std::span<double> Tensor::mutable_values() {
  if (!node_->leaf) throw ContractError("mutable_values on a non-leaf tensor");
  return node_->values;
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on non-scalar tensor " + shape_str(shape()));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!node_->leaf) throw ContractError("requires_grad can only be set on leaf tensors");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::is_leaf() const { return node_->leaf; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

void Tensor::backward() const {
  if (numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_str(shape()));
  }
  if (node_->released) throw ContractError("backward on a tape that was already released");
  if (!node_->requires_grad) return;

  // Post-order over the recorded graph; reversing it gives a valid
  // consumer-before-input schedule.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (!node->leaf) node->grad.assign(node->values.size(), 0.0);
  }
  if (node_->grad.empty()) node_->grad.assign(1, 0.0);
  node_->grad[0] += 1.0;

  std::vector<std::span<double>> grad_in;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->leaf || !node->backward) continue;
    grad_in.clear();
    for (auto& input : node->inputs) {
      if (input->requires_grad) {
        if (input->grad.empty()) input->grad.assign(input->values.size(), 0.0);
        grad_in.emplace_back(input->grad);
      } else {
        grad_in.emplace_back();
      }
    }
    node->backward(node->grad, grad_in);
  }

  for (detail::Node* node : order) {
    if (node->leaf) continue;
    node->inputs.clear();
    node->backward = nullptr;
    node->grad.clear();
    node->grad.shrink_to_fit();
    node->released = true;
  }
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->dtype = node_->dtype;
  node->values = node_->values;
  return Tensor(std::move(node));
}

Tensor Tensor::to(DType dtype) const {
  Tensor out = detach();
  out.node_->dtype = dtype;
  round_to(dtype, out.node_->values);
  return out;
}

Tensor Tensor::clone() const {
  Tensor out = detach();
  out.node_->requires_grad = node_->leaf && node_->requires_grad;
  return out;
}

Tensor record_op(const char* op, Shape shape, DType dtype, std::vector<double> values,
                 std::vector<Tensor> inputs, BackwardFn backward) {
  assert(shape_numel(shape) == values.size());
#ifndef NDEBUG
  bool inputs_finite = std::all_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return all_finite(t.values()); });
  assert(!inputs_finite || all_finite(values));
#endif
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->dtype = dtype;
  round_to(dtype, values);
  node->values = std::move(values);
  node->leaf = false;
  node->op = op;
  if (g_grad_mode) {
    bool needs = std::any_of(inputs.begin(), inputs.end(),
                             [](const Tensor& t) { return t.requires_grad(); });
    if (needs) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (auto& t : inputs) node->inputs.push_back(t.node_);
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

std::vector<std::string> tape_ops(const Tensor& root) {
  std::vector<std::string> out;
  if (!root.defined()) return out;
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack{{root.node_.get(), 0}};
  seen.insert(root.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      const detail::Node* child = node->inputs[next++].get();
      if (seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      if (!node->leaf && node->backward) out.emplace_back(node->op);
      stack.pop_back();
    }
  }
  return out;
}

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }

NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

}  // namespace iswsst
