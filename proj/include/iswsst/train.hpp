#pragma once

#include <functional>
#include <span>
#include <vector>

#include "iswsst/config.hpp"
#include "iswsst/metrics.hpp"
#include "iswsst/model.hpp"
#include "iswsst/synth.hpp"

namespace iswsst {

// Adam with decoupled weight decay. Decay applies to matrices only
// (rank >= 2); vectors such as biases, norms and fusion logits are exempt.
class AdamW {
 public:
  AdamW(ParameterSet& params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Parameters without a gradient this step are left untouched.
  void step(double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  ParameterSet& params_;
  double weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// lr * (1 - step / steps)^power
double poly_lr(double base, std::size_t step, std::size_t steps, double power);

struct TrainResult {
  std::vector<double> losses;  // mean batch loss per step
};

using TrainProgress = std::function<void(std::size_t step, double loss)>;

// Throws NumericError naming the step when the loss stops being finite.
TrainResult train(Model& model, std::span<const Sample> data, const TrainConfig& config,
                  const TrainProgress& progress = {});

MetricsReport evaluate(const Model& model, std::span<const Sample> data);

}  // namespace iswsst
