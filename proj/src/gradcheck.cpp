#include "iswsst/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iswsst/error.hpp"
#include "iswsst/fusion.hpp"
#include "iswsst/index_bank.hpp"
#include "iswsst/model.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/space_branch.hpp"
#include "iswsst/synth.hpp"
#include "iswsst/wave_branch.hpp"
#include "iswsst/wavelet.hpp"

namespace iswsst {

GradCheckResult check_gradients(const std::string& block, const std::function<Tensor()>& loss,
                                const std::vector<Tensor>& leaves, const GradCheckOptions& options) {
  for (const auto& leaf : leaves) {
    if (!leaf.is_leaf() || !leaf.requires_grad()) throw ContractError(block + ": gradient check needs grad leaves");
    if (leaf.dtype() != DType::F64) throw ContractError(block + ": gradient check runs in 64-bit");
  }
  std::vector<Tensor> targets = leaves;
  for (auto& leaf : targets) leaf.zero_grad();
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& leaf : targets) {
    if (leaf.has_grad()) analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
    else analytic.emplace_back(leaf.numel(), 0.0);
  }

  GradCheckResult result{block, 0.0, 0, true};
  Rng rng(options.seed);
  NoGradGuard guard;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    Tensor& leaf = targets[l];
    std::vector<std::size_t> idx(leaf.numel());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_per_leaf != 0 && idx.size() > options.max_per_leaf) {
      for (std::size_t i = 0; i < options.max_per_leaf; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
      idx.resize(options.max_per_leaf);
    }
    for (std::size_t i : idx) {
      auto values = leaf.mutable_values();
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = loss().item();
      values[i] = saved - options.step;
      const double down = loss().item();
      values[i] = saved;
      const double fd = (up - down) / (2.0 * options.step);
      const double err = std::abs(analytic[l][i] - fd) / std::max(1.0, std::abs(fd));
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.checked;
    }
  }
  result.passed = result.max_rel_error <= options.tolerance;
  return result;
}

namespace {

Tensor random_leaf(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v)).set_requires_grad(true);
}

Tensor random_const(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v));
}

// Moves every parameter away from its structured initialisation (zero
// projections, unit norm scales) so no gradient is trivially zero.
void jitter(ParameterSet& params, Rng& rng, double amount) {
  for (auto& p : params.items()) {
    for (auto& v : p.tensor.mutable_values()) v += rng.uniform(-amount, amount);
  }
}

std::vector<Tensor> leaves_of(ParameterSet& params) {
  std::vector<Tensor> out;
  for (auto& p : params.items()) out.push_back(p.tensor);
  return out;
}

}  // namespace

std::vector<GradCheckResult> run_block_gradchecks(std::uint64_t seed) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);

  {
    ParameterSet params;
    WaveBlock block(params, "wave_block", 4, 3, PhaseMode::Content, DType::F64, rng);
    jitter(params, rng, 0.5);
    Tensor x = random_leaf({4, 3}, rng);
    Tensor r = random_const({4, 3}, rng);
    auto leaves = leaves_of(params);
    leaves.push_back(x);
    results.push_back(check_gradients("wave_block", [&] { return sum(mul(block.forward(x), r)); }, leaves));
  }
  {
    ParameterSet params;
    MhsaBlock block(params, "mhsa_block", 8, 2, DType::F64, rng);
    jitter(params, rng, 0.2);
    Tensor x = random_leaf({4, 8}, rng);
    Tensor r = random_const({4, 8}, rng);
    auto leaves = leaves_of(params);
    leaves.push_back(x);
    results.push_back(check_gradients("mhsa_block", [&] { return sum(mul(block.forward(x), r)); }, leaves));
  }
  {
    ParameterSet params;
    ChannelAttention attention(params, "channel_attend", 4, 2, DType::F64, rng);
    Tensor x = random_leaf({4, 3, 3}, rng, 0.0, 1.0);
    Tensor r = random_const({4, 3, 3}, rng);
    auto leaves = leaves_of(params);
    leaves.push_back(x);
    results.push_back(check_gradients("channel_attend", [&] { return sum(mul(attention(x), r)); }, leaves));
  }
  {
    std::vector<Tensor> logits;
    for (int d = 0; d < 3; ++d) logits.push_back(random_leaf({4, 2, 3}, rng, -2.0, 2.0));
    Tensor lambda = random_leaf({3}, rng);
    std::vector<std::uint8_t> labels(6);
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.index(4));
    auto loss = [&] {
      std::vector<Tensor> probs;
      for (const auto& l : logits) probs.push_back(softmax(l, 0));
      return nll_loss(superpose_soft(probs, fusion_weights(lambda)), labels);
    };
    auto leaves = logits;
    leaves.push_back(lambda);
    results.push_back(check_gradients("superpose_soft", loss, leaves));
  }
  {
    Tensor index = random_leaf({1, 4, 4}, rng);
    Tensor weight = random_leaf({6}, rng, -2.0, 2.0);
    Tensor bias = random_leaf({6}, rng);
    Tensor r = random_const({6, 4, 4}, rng);
    results.push_back(check_gradients(
        "index_logits", [&] { return sum(mul(softmax(index_logits(index, weight, bias), 0), r)); },
        {index, weight, bias}));
  }
  {
    Tensor x = random_leaf({2, 8, 8}, rng);
    Tensor r = random_const({2, 8, 8}, rng);
    auto loss = [&] {
      const auto pyramid = encode_pyramid(x, 2);
      return sum(mul(decode_pyramid(pyramid, sigmoid(pyramid.coarsest())), r));
    };
    results.push_back(check_gradients("lwped", loss, {x}));
  }
  {
    ModelConfig config;
    config.size = 16;
    config.dtype = DType::F64;
    Model model(config, seed);
    jitter(model.parameters(), rng, 0.05);
    const auto data = synth_dataset(seed, 1, 16);
    const Tensor x = model.input_tensor(data[0].raster);
    const auto& labels = data[0].labels.labels;
    GradCheckOptions options;
    options.max_per_leaf = 6;
    options.seed = seed;
    results.push_back(check_gradients(
        "full_model", [&] { return model.loss(model.forward(x), labels, 0.4); }, leaves_of(model.parameters()),
        options));
  }
  return results;
}

}  // namespace iswsst
