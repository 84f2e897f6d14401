#include <gtest/gtest.h>

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/fusion.hpp"
#include "iswsst/ops.hpp"

using namespace iswsst;

namespace {

Tensor random_probs(std::size_t k, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  return softmax(uniform_tensor({k, h, w}, 3.0, rng), 0);
}

// One-pixel distribution.
Tensor pixel(std::vector<double> p) {
  const std::size_t k = p.size();
  return Tensor::from({k, 1, 1}, std::move(p));
}

// One-pixel distribution with its maximum at class `c`.
Tensor peaked(std::size_t k, std::size_t c) {
  std::vector<double> p(k, 0.5 / static_cast<double>(k));
  p[c] += 0.5;
  return pixel(p);
}

}  // namespace

TEST(ChannelMean, ConstantAndHandExample) {
  const Tensor m = channel_mean(Tensor::full({3, 4, 5}, 0.25));
  for (double v : m.values()) EXPECT_EQ(v, 0.25);
  EXPECT_EQ(channel_mean(Tensor::from({1, 2, 2}, {1, 2, 3, 4})).item(), 2.5);
}

TEST(ChannelMean, Linear) {
  Rng rng(1);
  const Tensor x = uniform_tensor({2, 3, 3}, 1.0, rng), y = uniform_tensor({2, 3, 3}, 1.0, rng);
  const Tensor a = channel_mean(add(x, y));
  const Tensor b = add(channel_mean(x), channel_mean(y));
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(ChannelAttention, ZeroWeightsHalveTheInput) {
  ParameterSet params;
  Rng rng(2);
  ChannelAttention attn(params, "a", 4, 2, DType::F64, rng);
  for (const char* name : {"a.w_reduce", "a.w_c"})
    for (double& v : params.get(name).mutable_values()) v = 0.0;
  Rng data(3);
  const Tensor x = uniform_tensor({4, 3, 3}, 1.0, data);
  const Tensor y = attn(x);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(y[i], 0.5 * x[i]);
}

TEST(ChannelAttention, GateIsSpatiallyUniformAndInsideTheUnitInterval) {
  ParameterSet params;
  Rng rng(4);
  ChannelAttention attn(params, "a", 4, 2, DType::F64, rng);
  Rng data(5);
  const Tensor x = add_scalar(uniform_tensor({4, 3, 3}, 1.0, data), 2.0);
  const Tensor y = attn(x);
  const Tensor g = attn.gate(x);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_GT(g[c], 0.0);
    EXPECT_LT(g[c], 1.0);
    for (std::size_t p = 0; p < 9; ++p) EXPECT_NEAR(y[c * 9 + p] / x[c * 9 + p], g[c], 1e-14);
  }
}

TEST(ChannelAttention, ContractViolations) {
  ParameterSet params;
  Rng rng(6);
  EXPECT_THROW(ChannelAttention(params, "a", 6, 4, DType::F64, rng), ContractError);
  ChannelAttention attn(params, "b", 4, 2, DType::F64, rng);
  EXPECT_THROW(attn(Tensor::zeros({3, 2, 2})), ContractError);
  EXPECT_EQ(effective_reduction(1, 4), 1u);
  EXPECT_EQ(effective_reduction(6, 4), 3u);
  EXPECT_EQ(effective_reduction(32, 4), 4u);
}

TEST(Superpose, SingleDomainIsItsOwnArgmax) {
  const Tensor p = random_probs(5, 4, 4, 7);
  const FusionState state{{p}, Tensor::from({1}, {3.7})};
  EXPECT_EQ(superpose(state), argmax_labels(p));
}

TEST(Superpose, IdenticalDomainsIgnoreLambda) {
  const Tensor p = random_probs(4, 3, 5, 8);
  const FusionState state{{p, p}, Tensor::from({2}, {-2.0, 5.0})};
  EXPECT_EQ(superpose(state), argmax_labels(p));
  const std::vector<Tensor> three{p, p, p};
  EXPECT_EQ(vote_majority(three), argmax_labels(p));
  EXPECT_EQ(vote_average(three), argmax_labels(p));
}

TEST(Superpose, HandArithmetic) {
  const std::vector<Tensor> probs{pixel({0.9, 0.1}), pixel({0.2, 0.8})};
  const std::vector<double> lambda{0.3, 0.7};
  EXPECT_EQ(superpose_weighted(probs, lambda).labels[0], 1);
  const Tensor soft = superpose_soft(probs, Tensor::from({2}, {0.3, 0.7}));
  EXPECT_NEAR(soft[0], 0.41, 1e-15);
  EXPECT_NEAR(soft[1], 0.59, 1e-15);
  // Same weights through the softmax parameterization.
  const FusionState state{probs, Tensor::from({2}, {std::log(0.3), std::log(0.7)})};
  EXPECT_EQ(superpose(state).labels[0], 1);
}

TEST(Superpose, PositiveRescalingOfWeightsKeepsTheDecision) {
  const std::vector<Tensor> probs{random_probs(6, 8, 8, 9), random_probs(6, 8, 8, 10), random_probs(6, 8, 8, 11)};
  const std::vector<double> w{0.2, 0.5, 0.3};
  const std::vector<double> scaled{0.2 * 7.5, 0.5 * 7.5, 0.3 * 7.5};
  EXPECT_EQ(superpose_weighted(probs, w), superpose_weighted(probs, scaled));
}

TEST(Superpose, TiesGoToTheLowestClass) {
  EXPECT_EQ(argmax_labels(pixel({0.25, 0.25, 0.5, 0.0})).labels[0], 2);
  EXPECT_EQ(argmax_labels(pixel({0.4, 0.2, 0.4})).labels[0], 0);
}

TEST(Superpose, ExtentMismatchIsContractError) {
  const std::vector<Tensor> probs{random_probs(3, 2, 2, 12), random_probs(3, 2, 3, 13)};
  EXPECT_THROW(vote_average(probs), ContractError);
  EXPECT_THROW(vote_majority(probs), ContractError);
  EXPECT_THROW(superpose_soft(probs, Tensor::from({2}, {0.5, 0.5})), ContractError);
  const std::vector<Tensor> ok{random_probs(3, 2, 2, 12), random_probs(3, 2, 2, 13)};
  EXPECT_THROW(superpose_soft(ok, Tensor::from({3}, {0.2, 0.3, 0.5})), ContractError);
}

TEST(SuperposeSoft, OneHotWeightsSelectADomain) {
  const std::vector<Tensor> probs{random_probs(3, 4, 4, 14), random_probs(3, 4, 4, 15)};
  const Tensor out = superpose_soft(probs, Tensor::from({2}, {0.0, 1.0}));
  for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_EQ(out[i], probs[1][i]);
}

TEST(SuperposeSoft, OutputIsAPixelwiseDistribution) {
  const std::vector<Tensor> probs{random_probs(6, 5, 5, 16), random_probs(6, 5, 5, 17), random_probs(6, 5, 5, 18)};
  const Tensor out = superpose_soft(FusionState{probs, Tensor::from({3}, {0.3, -1.2, 2.0})});
  for (std::size_t p = 0; p < 25; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < 6; ++k) s += out[k * 25 + p];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(SuperposeSoft, LambdaGradientIsNonzeroWhenDomainsDisagree) {
  Tensor logits = Tensor::zeros({2});
  logits.set_requires_grad(true);
  const std::vector<Tensor> probs{pixel({0.9, 0.1}), pixel({0.2, 0.8})};
  const std::vector<std::uint8_t> truth{1};
  const FusionState state{probs, logits};
  nll_loss(superpose_soft(state), truth).backward();
  EXPECT_GT(std::abs(logits.grad()[0]), 1e-3);
  // Moving weight toward the agreeing domain lowers the loss.
  EXPECT_GT(logits.grad()[0], 0.0);
  EXPECT_LT(logits.grad()[1], 0.0);
}

TEST(Votes, StrictMajority) {
  const std::vector<Tensor> probs{peaked(6, 2), peaked(6, 2), peaked(6, 5)};
  EXPECT_EQ(vote_majority(probs).labels[0], 2);
}

TEST(Votes, TieGoesToTheLowestClass) {
  const std::vector<Tensor> probs{peaked(4, 3), peaked(4, 1)};
  EXPECT_EQ(vote_majority(probs).labels[0], 1);
}

TEST(Votes, AverageEqualsUniformSuperposition) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<Tensor> probs{random_probs(6, 9, 7, seed), random_probs(6, 9, 7, seed + 100),
                                    random_probs(6, 9, 7, seed + 200)};
    const LabelMap avg = vote_average(probs);
    EXPECT_EQ(avg, superpose(FusionState{probs, Tensor::zeros({3})}));
    EXPECT_EQ(avg, superpose_weighted(probs, std::vector<double>{1.0, 1.0, 1.0}));
  }
}

TEST(FusionModes, ParseAndName) {
  EXPECT_EQ(parse_fusion_mode("adaptive"), FusionMode::Adaptive);
  EXPECT_EQ(parse_fusion_mode("majority"), FusionMode::Majority);
  EXPECT_EQ(fusion_mode_name(FusionMode::Average), "average");
  EXPECT_THROW(parse_fusion_mode("median"), ContractError);
}

TEST(FusionWeights, SoftmaxOfLogits) {
  const Tensor w = fusion_weights(Tensor::zeros({4}));
  for (double v : w.values()) EXPECT_EQ(v, 0.25);
}
