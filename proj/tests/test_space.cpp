#include <gtest/gtest.h>

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/model.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/space_branch.hpp"

using namespace iswsst;

namespace {

Tensor random(Shape shape, std::uint64_t seed, double bound = 1.0) {
  Rng rng(seed);
  return uniform_tensor(std::move(shape), bound, rng);
}

void zero(Tensor& t) {
  for (double& v : t.mutable_values()) v = 0.0;
}

}  // namespace

TEST(Patchify, RoundTripAndLayout) {
  const Tensor x = random({2, 8, 8}, 1);
  const Tensor p = patchify(x, 4);
  EXPECT_EQ(p.shape(), (Shape{4, 32}));
  // Patch 1 is the top-right block; feature (c=1, r=2, q=3).
  EXPECT_EQ(p[1 * 32 + 1 * 16 + 2 * 4 + 3], x[1 * 64 + 2 * 8 + 4 + 3]);
  const Tensor back = unpatchify(p, 2, 8, 8, 4);
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back[i], x[i]);
  EXPECT_THROW(patchify(x, 3), ContractError);
}

TEST(PatchEmbed, TokenCount) {
  ParameterSet params;
  Rng rng(2);
  PatchEmbed embed(params, "e", 4, 8, 8, 4, 16, DType::F64, rng);
  EXPECT_EQ(embed.tokens(), 4u);
  EXPECT_EQ(embed(random({4, 8, 8}, 3)).shape(), (Shape{4, 16}));
  EXPECT_THROW(PatchEmbed(params, "bad", 4, 10, 8, 4, 16, DType::F64, rng), ContractError);
}

TEST(PatchEmbed, ZeroImageGivesPositionsOnly) {
  ParameterSet params;
  Rng rng(4);
  PatchEmbed embed(params, "e", 3, 8, 8, 4, 6, DType::F64, rng);
  const Tensor t = embed(Tensor::zeros({3, 8, 8}));
  for (std::size_t i = 0; i < t.numel(); ++i) EXPECT_EQ(t[i], embed.positions()[i]);
}

TEST(PatchEmbed, OneHotPixelSelectsWeightRow) {
  ParameterSet params;
  Rng rng(5);
  PatchEmbed embed(params, "e", 2, 4, 4, 2, 5, DType::F64, rng);
  Tensor x = Tensor::zeros({2, 4, 4});
  // Channel 1, pixel (3, 2): patch (1, 1) = token 3, feature 1*4 + 1*2 + 0 = 6.
  x.mutable_values()[16 + 3 * 4 + 2] = 1.0;
  const Tensor t = embed(x);
  for (std::size_t d = 0; d < 5; ++d)
    EXPECT_NEAR(t[3 * 5 + d] - embed.positions()[3 * 5 + d], embed.weight()[6 * 5 + d], 1e-15);
}

TEST(MhsaBlock, SingleTokenAttendsToItselfThroughTheValuePath) {
  ParameterSet params;
  Rng rng(6);
  MhsaBlock block(params, "m", 8, 2, DType::F64, rng);
  for (const char* name : {"m.ffn.w1", "m.ffn.w2"}) zero(params.get(name));
  const Tensor x = random({1, 8}, 7);
  std::vector<Tensor> attention;
  const Tensor y = block.forward(x, &attention);
  ASSERT_EQ(attention.size(), 2u);
  for (const Tensor& a : attention) EXPECT_EQ(a.item(), 1.0);
  const Tensor expect =
      add(x, add_row_vector(matmul(matmul(standardize_rows(x), block.w_value()), block.w_out()), block.b_out()));
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(y[i], expect[i], 1e-12);
}

TEST(MhsaBlock, IdenticalTokensGiveUniformAttention) {
  ParameterSet params;
  Rng rng(8);
  MhsaBlock block(params, "m", 8, 2, DType::F64, rng);
  const Tensor row = random({1, 8}, 9);
  std::vector<double> values;
  for (int i = 0; i < 5; ++i) values.insert(values.end(), row.values().begin(), row.values().end());
  std::vector<Tensor> attention;
  block.forward(Tensor::from({5, 8}, values), &attention);
  for (const Tensor& a : attention)
    for (double v : a.values()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(MhsaBlock, AttentionRowsSumToOne) {
  ParameterSet params;
  Rng rng(10);
  MhsaBlock block(params, "m", 8, 4, DType::F64, rng);
  std::vector<Tensor> attention;
  block.forward(random({7, 8}, 11, 3.0), &attention);
  ASSERT_EQ(attention.size(), 4u);
  for (const Tensor& a : attention) {
    ASSERT_EQ(a.shape(), (Shape{7, 7}));
    for (std::size_t r = 0; r < 7; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 7; ++c) s += a[r * 7 + c];
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(MhsaBlock, PermutationEquivariant) {
  ParameterSet params;
  Rng rng(12);
  MhsaBlock block(params, "m", 8, 2, DType::F64, rng);
  const Tensor x = random({3, 8}, 13);
  const Tensor perm = Tensor::from({3, 3}, {0, 1, 0, 0, 0, 1, 1, 0, 0});
  const Tensor a = block.forward(matmul(perm, x));
  const Tensor b = matmul(perm, block.forward(x));
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(MhsaBlock, HeadsMustDivideDim) {
  ParameterSet params;
  Rng rng(14);
  EXPECT_THROW(MhsaBlock(params, "m", 8, 3, DType::F64, rng), ContractError);
}

TEST(SpaceBranch, FreshBranchIsTheIdentity) {
  ParameterSet params;
  Rng rng(15);
  SpaceBranchConfig cfg;
  cfg.grid_height = 8;
  cfg.grid_width = 8;
  cfg.encoder.dim = 8;
  SpaceBranch branch(params, "space", cfg, DType::F64, rng);
  const Tensor ll = random({4, 8, 8}, 16);
  const Tensor y = branch.forward(ll);
  for (std::size_t i = 0; i < ll.numel(); ++i) EXPECT_EQ(y[i], ll[i]);
  EXPECT_EQ(branch.features(ll).shape(), (Shape{4, 8}));
}

TEST(SpaceLogits, FullResolutionAndUniformUnderZeroHead) {
  ModelConfig cfg;
  cfg.dtype = DType::F64;
  cfg.wave = false;
  cfg.indices.clear();
  Model model(cfg, 17);
  const Tensor x = random({4, 32, 32}, 18, 0.5);
  ModelOutput out = model.forward(add_scalar(x, 0.5));
  ASSERT_EQ(out.domains.size(), 1u);
  EXPECT_EQ(out.domains[0].name, "space");
  EXPECT_EQ(out.domains[0].logits.shape(), (Shape{6, 32, 32}));
  EXPECT_EQ(out.domains[0].coarse_logits.shape(), (Shape{6, 8, 8}));

  zero(model.parameters().get("space.head.w"));
  out = model.forward(add_scalar(x, 0.5));
  for (double v : out.domains[0].probs.values()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-12);
}

TEST(SpaceLogits, GridMismatchIsContractError) {
  ModelConfig cfg;
  cfg.size = 24;  // coarse grid 6 is not divisible by the patch size 4
  EXPECT_THROW(Model(cfg, 0), ContractError);
  cfg.size = 32;
  Model model(cfg, 0);
  EXPECT_THROW(model.forward(Tensor::zeros({4, 16, 16})), ContractError);
}
