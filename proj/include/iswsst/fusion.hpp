#pragma once

// Channel attention over a domain's feature map, and the fusion of
// per-domain class distributions into one segmentation.

#include <span>
#include <string>
#include <vector>

#include "iswsst/parameter.hpp"
#include "iswsst/raster.hpp"
#include "iswsst/tensor.hpp"

namespace iswsst {

// Largest divisor of `channels` not exceeding `requested`, so narrow
// feature maps (e.g. a single index channel) still get a valid gate path.
std::size_t effective_reduction(std::size_t channels, std::size_t requested);

// gate = sigmoid(W_c relu(W_reduce mean_hw(L))), output = L scaled per
// channel by gate. No biases: zero weights give a gate of exactly 0.5.
class ChannelAttention {
 public:
  ChannelAttention() = default;
  // Throws ContractError unless `reduction` divides `channels`.
  ChannelAttention(ParameterSet& params, const std::string& prefix, std::size_t channels, std::size_t reduction,
                   DType dtype, Rng& rng);

  Tensor gate(const Tensor& features) const;
  Tensor operator()(const Tensor& features) const;

  std::size_t channels() const { return channels_; }
  const Tensor& w_reduce() const { return w_reduce_; }
  const Tensor& w_expand() const { return w_expand_; }

 private:
  std::size_t channels_ = 0;
  Tensor w_reduce_;  // [C/r x C]
  Tensor w_expand_;  // [C x C/r]
};

enum class FusionMode { Adaptive, Majority, Average };

FusionMode parse_fusion_mode(const std::string& text);
std::string fusion_mode_name(FusionMode mode);

// Per-domain class distributions (each K x H x W, summing to one over K)
// plus the free logits whose softmax gives the domain weights.
struct FusionState {
  std::vector<Tensor> domain_probs;
  Tensor lambda_logits;
};

// softmax(lambda_logits)
Tensor fusion_weights(const Tensor& lambda_logits);

// Differentiable weighted sum of the domain distributions.
Tensor superpose_soft(const FusionState& state);
Tensor superpose_soft(std::span<const Tensor> domain_probs, const Tensor& weights);

// Per-pixel argmax of the weighted sum; ties go to the lowest class id.
LabelMap superpose(const FusionState& state);
// Same with explicit non-negative weights, normalized to sum to one.
LabelMap superpose_weighted(std::span<const Tensor> domain_probs, std::span<const double> weights);

// Mode of the per-domain argmaxes (ties -> lowest class id).
LabelMap vote_majority(std::span<const Tensor> domain_probs);
// Superposition with uniform weights.
LabelMap vote_average(std::span<const Tensor> domain_probs);

// Per-pixel argmax of one K x H x W score tensor.
LabelMap argmax_labels(const Tensor& scores);

}  // namespace iswsst
