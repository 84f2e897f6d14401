#include "iswsst/train.hpp"

#include <algorithm>
#include <cmath>

#include "iswsst/error.hpp"

namespace iswsst {

AdamW::AdamW(ParameterSet& params, double weight_decay, double beta1, double beta2, double eps)
    : params_(params), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_.items()) {
    m_.emplace_back(p.tensor.numel(), 0.0);
    v_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& items = params_.items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    Tensor& p = items[i].tensor;
    if (!p.has_grad()) continue;
    const bool decay = p.rank() >= 2;
    const bool single = p.dtype() == DType::F32;
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      double update = (m[j] / c1) / (std::sqrt(v[j] / c2) + eps_);
      if (decay) update += weight_decay_ * w[j];
      w[j] -= lr * update;
      if (single) w[j] = static_cast<double>(static_cast<float>(w[j]));
    }
  }
}

double poly_lr(double base, std::size_t step, std::size_t steps, double power) {
  if (steps == 0) return base;
  const double frac = 1.0 - static_cast<double>(std::min(step, steps)) / static_cast<double>(steps);
  return base * std::pow(frac, power);
}

TrainResult train(Model& model, std::span<const Sample> data, const TrainConfig& config,
                  const TrainProgress& progress) {
  if (!(config.lr > 0.0)) throw ContractError("learning rate must be positive");
  if (config.batch == 0) throw ContractError("batch size must be positive");
  TrainResult result;
  if (config.steps == 0) return result;
  if (data.empty()) throw ContractError("training needs at least one sample");

  std::vector<Tensor> inputs;
  inputs.reserve(data.size());
  for (const auto& s : data) {
    if (s.labels.n_classes > model.config().n_classes) {
      throw ContractError("labels declare " + std::to_string(s.labels.n_classes) + " classes, model has " +
                          std::to_string(model.config().n_classes));
    }
    inputs.push_back(model.input_tensor(s.raster));
  }

  AdamW optimizer(model.parameters(), config.weight_decay);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  const double scale = 1.0 / static_cast<double>(config.batch);

  for (std::size_t step = 0; step < config.steps; ++step) {
    model.parameters().zero_grad();
    double batch_loss = 0.0;
    for (std::size_t b = 0; b < config.batch; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      const auto out = model.forward(inputs[idx]);
      Tensor loss = mul_scalar(model.loss(out, data[idx].labels.labels, config.aux_weight), scale);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + " (sample " + std::to_string(idx) +
                           ")");
      }
      batch_loss += value;
      loss.backward();
    }
    optimizer.step(poly_lr(config.lr, step, config.steps, config.poly_power));
    result.losses.push_back(batch_loss);
    if (progress) progress(step, batch_loss);
  }
  model.parameters().zero_grad();
  return result;
}

MetricsReport evaluate(const Model& model, std::span<const Sample> data) {
  if (data.empty()) throw ContractError("cannot evaluate an empty data set");
  ConfusionMatrix cm(model.config().n_classes);
  for (const auto& s : data) cm.add(s.labels, model.predict(s.raster));
  return compute_metrics(cm);
}

}  // namespace iswsst
