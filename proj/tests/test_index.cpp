#include <gtest/gtest.h>

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/index_bank.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/parameter.hpp"

using namespace iswsst;

TEST(NormalizedDifference, EqualBandsGiveZero) {
  const std::vector<double> a{0.3, 0.7, 0.0, 1.0};
  const IndexMap m = normalized_difference(a, a, 2, 2);
  for (double v : m.values) EXPECT_EQ(v, 0.0);
}

TEST(NormalizedDifference, HandArithmetic) {
  const std::vector<double> a{0.5}, b{0.25};
  const IndexMap m = normalized_difference(a, b, 1, 1);
  EXPECT_NEAR(m.values[0], 1.0 / 3.0, 1e-8);
  EXPECT_EQ(m.values[0], 0.25 / (0.75 + kIndexEpsilon));
}

TEST(NormalizedDifference, ZeroRadianceMapsToZero) {
  const std::vector<double> z{0.0};
  EXPECT_EQ(normalized_difference(z, z, 1, 1).values[0], 0.0);
}

TEST(NormalizedDifference, BoundedAndAntisymmetric) {
  Rng rng(1);
  std::vector<double> a(400), b(400);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform(0.0, 1.0) * (i % 7 == 0 ? 0.0 : 1.0);
    b[i] = rng.uniform(0.0, 1.0) * (i % 11 == 0 ? 0.0 : 1.0);
  }
  const IndexMap ab = normalized_difference(a, b, 20, 20);
  const IndexMap ba = normalized_difference(b, a, 20, 20);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LE(std::abs(ab.values[i]), 1.0);
    EXPECT_EQ(ab.values[i], -ba.values[i]);
  }
}

TEST(NormalizedDifference, ContractViolations) {
  const std::vector<double> a(4, 0.5), b(6, 0.5), neg{-0.1, 0.2, 0.2, 0.2};
  EXPECT_THROW(normalized_difference(a, b, 2, 2), ContractError);
  EXPECT_THROW(normalized_difference(neg, a, 2, 2), ContractError);
}

TEST(ComputeIndex, NdviAndNdwiUseTaggedBands) {
  // Bands stored out of the usual order to check tag lookup.
  const Raster r = make_raster(1, 1, parse_band_list("red,green,nir"), {0.2f, 0.3f, 0.6f});
  const double red = 0.2f, green = 0.3f, nir = 0.6f;
  EXPECT_EQ(compute_index(r, ndvi_spec()).values[0], (nir - red) / (nir + red + kIndexEpsilon));
  EXPECT_EQ(compute_index(r, ndwi_spec()).values[0], (green - nir) / (green + nir + kIndexEpsilon));
  EXPECT_EQ(compute_index(r, ndvi_spec()).kind, IndexKind::Ndvi);
}

TEST(ComputeIndex, MissingBandIsContractError) {
  const Raster r = make_raster(1, 1, parse_band_list("red,green,blue"), {0.2f, 0.3f, 0.6f});
  EXPECT_THROW(compute_index(r, ndvi_spec()), ContractError);
  const Raster ok = make_raster(1, 1, parse_band_list("other2,green"), {0.1f, 0.3f});
  EXPECT_NO_THROW(compute_index(ok, custom_index_spec(BandTag{BandKind::Other, 2}, BandTag{BandKind::Green, 0})));
}

TEST(IndexNames, ParseKnownNames) {
  EXPECT_EQ(parse_index_name("ndvi"), ndvi_spec());
  EXPECT_EQ(parse_index_name("NDWI"), ndwi_spec());
  EXPECT_THROW(parse_index_name("ndsi"), ContractError);
}

TEST(IndexLogits, ZeroProjectionGivesUniformSoftmax) {
  const std::vector<double> a(12, 0.7), b(12, 0.1);
  const IndexMap m = normalized_difference(a, b, 3, 4);
  const Tensor logits = index_logits(m, Tensor::zeros({6}), Tensor::zeros({6}));
  EXPECT_EQ(logits.shape(), (Shape{6, 3, 4}));
  const Tensor p = softmax(logits, 0);
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(IndexLogits, ArgmaxFlipsAtTheLearnedThreshold) {
  // Class 1 ("vegetation") logit w*ndvi + b against class 0 at 0: threshold -b/w = 0.3.
  const double w = 5.0, b = -1.5;
  const std::size_t n = 41;
  IndexMap m;
  m.height = 1;
  m.width = n;
  for (std::size_t i = 0; i < n; ++i) m.values.push_back(-1.0 + 2.0 * static_cast<double>(i) / (n - 1));
  const Tensor logits = index_logits(m, Tensor::from({2}, {0.0, w}), Tensor::from({2}, {0.0, b}));
  for (std::size_t i = 0; i < n; ++i) {
    const bool veg = logits[n + i] > logits[i];
    EXPECT_EQ(veg, m.values[i] > -b / w) << "ndvi " << m.values[i];
  }
}

TEST(IndexLogits, ResolutionIsPreserved) {
  for (std::size_t s : {1u, 7u, 16u, 33u}) {
    const std::vector<double> a(s * s, 0.4), b(s * s, 0.2);
    const Tensor logits = index_logits(normalized_difference(a, b, s, s), Tensor::ones({3}), Tensor::zeros({3}));
    EXPECT_EQ(logits.shape(), (Shape{3, s, s}));
  }
}

TEST(IndexLogits, AffineValuesAndGradients) {
  Tensor w = Tensor::from({2}, {2.0, -1.0});
  Tensor b = Tensor::from({2}, {0.5, 0.25});
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  const Tensor idx = Tensor::from({1, 1, 2}, {0.5, -0.25});
  const Tensor logits = index_logits(idx, w, b);
  EXPECT_EQ(logits[0], 1.5);
  EXPECT_EQ(logits[3], 0.5);
  sum(logits).backward();
  EXPECT_EQ(w.grad()[0], 0.25);
  EXPECT_EQ(b.grad()[1], 2.0);
  EXPECT_THROW(index_logits(idx, Tensor::zeros({2}), Tensor::zeros({3})), ContractError);
}
