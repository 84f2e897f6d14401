#include "iswsst/fusion.hpp"

#include <algorithm>

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"

namespace iswsst {

std::size_t effective_reduction(std::size_t channels, std::size_t requested) {
  if (channels == 0 || requested == 0) throw ContractError("channel count and reduction must be positive");
  for (std::size_t r = std::min(channels, requested); r > 1; --r)
    if (channels % r == 0) return r;
  return 1;
}

ChannelAttention::ChannelAttention(ParameterSet& params, const std::string& prefix, std::size_t channels,
                                   std::size_t reduction, DType dtype, Rng& rng)
    : channels_(channels) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ContractError("channel attention reduction " + std::to_string(reduction) + " must divide " +
                        std::to_string(channels) + " channels");
  }
  const std::size_t hidden = channels / reduction;
  w_reduce_ = params.add(prefix + ".w_reduce", fan_in_uniform({hidden, channels}, channels, rng, dtype));
  w_expand_ = params.add(prefix + ".w_c", fan_in_uniform({channels, hidden}, hidden, rng, dtype));
}

Tensor ChannelAttention::gate(const Tensor& features) const {
  if (features.rank() != 3 || features.dim(0) != channels_) {
    throw ContractError("channel attention built for " + std::to_string(channels_) + " channels, got " +
                        shape_str(features.shape()));
  }
  Tensor pooled = reshape(channel_mean(features), {channels_, 1});
  Tensor hidden = relu(matmul(w_reduce_, pooled));
  return reshape(sigmoid(matmul(w_expand_, hidden)), {channels_});
}

Tensor ChannelAttention::operator()(const Tensor& features) const {
  return scale_channels(features, gate(features));
}

FusionMode parse_fusion_mode(const std::string& text) {
  if (text == "adaptive") return FusionMode::Adaptive;
  if (text == "majority") return FusionMode::Majority;
  if (text == "average") return FusionMode::Average;
  throw ContractError("unknown fusion mode: " + text + " (adaptive|majority|average)");
}

std::string fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::Adaptive: return "adaptive";
    case FusionMode::Majority: return "majority";
    case FusionMode::Average: return "average";
  }
  return "adaptive";
}

namespace {

void require_common_extents(std::span<const Tensor> probs) {
  if (probs.empty()) throw ContractError("fusion needs at least one domain");
  for (const auto& p : probs) {
    if (p.rank() != 3) throw ContractError("domain distribution must be K x H x W, got " + shape_str(p.shape()));
    if (p.shape() != probs[0].shape()) {
      throw ContractError("domain distributions differ in extents: " + shape_str(probs[0].shape()) + " vs " +
                          shape_str(p.shape()));
    }
  }
}

LabelMap argmax_values(std::span<const double> scores, std::size_t k, std::size_t h, std::size_t w) {
  const std::size_t hw = h * w;
  LabelMap out{h, w, static_cast<std::uint16_t>(k), std::vector<std::uint8_t>(hw)};
  for (std::size_t p = 0; p < hw; ++p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (scores[c * hw + p] > scores[best * hw + p]) best = c;
    out.labels[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

// Shared by every weighted decision so equal weights give bit-equal maps.
std::vector<double> weighted_scores(std::span<const Tensor> probs, std::span<const double> weights) {
  std::vector<double> acc(probs[0].numel(), 0.0);
  for (std::size_t d = 0; d < probs.size(); ++d) {
    auto v = probs[d].values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights[d] * v[i];
  }
  return acc;
}

}  // namespace

Tensor fusion_weights(const Tensor& lambda_logits) {
  if (lambda_logits.rank() != 1) throw ContractError("lambda logits must be a vector");
  return softmax(lambda_logits, 0);
}

Tensor superpose_soft(std::span<const Tensor> domain_probs, const Tensor& weights) {
  require_common_extents(domain_probs);
  if (weights.numel() != domain_probs.size()) {
    throw ContractError("fusion has " + std::to_string(domain_probs.size()) + " domains but " +
                        std::to_string(weights.numel()) + " weights");
  }
  Tensor total = mul(domain_probs[0], select(weights, 0));
  for (std::size_t d = 1; d < domain_probs.size(); ++d) total = add(total, mul(domain_probs[d], select(weights, d)));
  return total;
}

Tensor superpose_soft(const FusionState& state) {
  return superpose_soft(state.domain_probs, fusion_weights(state.lambda_logits));
}

LabelMap superpose_weighted(std::span<const Tensor> domain_probs, std::span<const double> weights) {
  require_common_extents(domain_probs);
  if (weights.size() != domain_probs.size()) {
    throw ContractError("fusion has " + std::to_string(domain_probs.size()) + " domains but " +
                        std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ContractError("fusion weights must be non-negative");
    total += w;
  }
  if (total <= 0.0) throw ContractError("fusion weights sum to zero");
  std::vector<double> normalized(weights.begin(), weights.end());
  for (double& w : normalized) w /= total;
  const auto& s = domain_probs[0].shape();
  return argmax_values(weighted_scores(domain_probs, normalized), s[0], s[1], s[2]);
}

LabelMap superpose(const FusionState& state) {
  Tensor weights = fusion_weights(state.lambda_logits.detach());
  auto w = weights.values();
  return superpose_weighted(state.domain_probs, w);
}

LabelMap vote_average(std::span<const Tensor> domain_probs) {
  std::vector<double> uniform(domain_probs.size(), 1.0);
  return superpose_weighted(domain_probs, uniform);
}

LabelMap vote_majority(std::span<const Tensor> domain_probs) {
  require_common_extents(domain_probs);
  const auto& s = domain_probs[0].shape();
  const std::size_t k = s[0], hw = s[1] * s[2];
  std::vector<LabelMap> votes;
  for (const auto& p : domain_probs) votes.push_back(argmax_labels(p));
  LabelMap out{s[1], s[2], static_cast<std::uint16_t>(k), std::vector<std::uint8_t>(hw)};
  std::vector<std::size_t> counts(k);
  for (std::size_t p = 0; p < hw; ++p) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& v : votes) ++counts[v.labels[p]];
    out.labels[p] = static_cast<std::uint8_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return out;
}

LabelMap argmax_labels(const Tensor& scores) {
  if (scores.rank() != 3) throw ContractError("scores must be K x H x W, got " + shape_str(scores.shape()));
  return argmax_values(scores.values(), scores.dim(0), scores.dim(1), scores.dim(2));
}

}  // namespace iswsst
