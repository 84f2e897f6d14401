#pragma once

// Dense row-major tensor with a reverse-mode gradient tape.
//
// Values are held in double precision. A tensor tagged F32 has every value
// rounded to the nearest float after each op, so it observes 32-bit storage
// semantics while kernels stay shared between the two element types.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace iswsst {

enum class DType : std::uint8_t { F32, F64 };

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);
const char* dtype_name(DType dtype);
DType promote(DType a, DType b);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::F64);
  static Tensor ones(Shape shape, DType dtype = DType::F64);
  static Tensor full(Shape shape, double value, DType dtype = DType::F64);
  static Tensor from(Shape shape, std::vector<double> values, DType dtype = DType::F64);
  static Tensor scalar(double value, DType dtype = DType::F64);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  DType dtype() const;

  std::span<const double> values() const;
  // Direct write access. Only valid on leaves (parameters, inputs); the
  // caller must hold exclusive access.
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t flat) const { return values()[flat]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  // Reverse sweep from a scalar. Leaf gradients accumulate across calls;
  // the tape behind this tensor is released afterwards.
  void backward() const;

  // Same values, cut from the tape.
  Tensor detach() const;
  Tensor to(DType dtype) const;
  Tensor clone() const;

  // Identity of the underlying node (for graph-structure checks).
  const void* id() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend Tensor record_op(const char*, Shape, DType, std::vector<double>, std::vector<Tensor>,
                          std::function<void(std::span<const double>,
                                             std::span<const std::span<double>>)>);
  friend std::vector<std::string> tape_ops(const Tensor& root);
};

// Backward closure: receives d(loss)/d(output) and one gradient span per
// input. A span is empty when that input does not require a gradient.
using BackwardFn =
    std::function<void(std::span<const double> grad_out, std::span<const std::span<double>> grad_in)>;

// Creates an op result named `op` (a string literal). The closure is recorded only when gradient mode is
// on and some input requires a gradient.
Tensor record_op(const char* op, Shape shape, DType dtype, std::vector<double> values, std::vector<Tensor> inputs,
                 BackwardFn backward);

// Names of the recorded ops reachable from root, in post-order (inputs
// before consumers). Leaves are omitted.
std::vector<std::string> tape_ops(const Tensor& root);

bool grad_mode_enabled();

// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace iswsst
