#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "iswsst/error.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/parameter.hpp"

using namespace iswsst;

namespace {

Tensor leaf(Shape shape, std::vector<double> values) {
  Tensor t = Tensor::from(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  const Tensor b = Tensor::from({2, 2}, {3, 4, 5, 6});
  const Tensor c = matmul(identity_matrix(2), b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c[i], b[i]);
}

TEST(Matmul, HandArithmetic) {
  const Tensor c = matmul(Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_EQ(c.item(), 11.0);
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  Tensor a = leaf({2, 3}, {1, -2, 3, 0.5, 4, -1});
  const Tensor b = Tensor::from({3, 2}, {2, 7, -1, 3, 5, 0.25});
  sum(matmul(a, b)).backward();
  // d/da_ij sum_k (ab)_ik = sum_n b_jn
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(a.grad()[i * 3 + j], b[j * 2] + b[j * 2 + 1]);
  }
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find(shape_str(a.shape())), std::string::npos) << what;
  }
}

TEST(Elementwise, SigmoidOfZeroIsHalf) { EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5); }

TEST(Elementwise, PhaseZeroIdentity) {
  const Tensor x = Tensor::from({3}, {1.5, -2, 0.25});
  const Tensor y = Tensor::from({3}, {9, 8, 7});
  const Tensor zero = Tensor::zeros({3});
  const Tensor r = add(mul(cos(zero), x), mul(sin(zero), y));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r[i], x[i]);
}

TEST(Elementwise, AbsValueAndGradient) {
  Tensor x = leaf({3}, {-3, 0, 2});
  const Tensor y = abs(x);
  EXPECT_EQ(y[0], 3.0);
  sum(y).backward();
  EXPECT_EQ(x.grad()[0], -1.0);
  EXPECT_EQ(x.grad()[1], 0.0);
  EXPECT_EQ(x.grad()[2], 1.0);
}

TEST(Elementwise, ScalarBroadcastAndMismatch) {
  const Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor r = mul(x, Tensor::scalar(2.0));
  EXPECT_EQ(r[3], 8.0);
  EXPECT_THROW(add(x, Tensor::zeros({3})), DimensionError);
}

TEST(Elementwise, UnaryGradients) {
  Tensor x = leaf({2}, {0.3, -0.7});
  sum(add(add(sigmoid(x), relu(x)), add(cos(x), mul(sin(x), neg(x))))).backward();
  for (std::size_t i = 0; i < 2; ++i) {
    const double v = x[i];
    const double s = 1.0 / (1.0 + std::exp(-v));
    const double expected = s * (1 - s) + (v > 0 ? 1.0 : 0.0) - std::sin(v) - (std::cos(v) * v + std::sin(v));
    EXPECT_NEAR(x.grad()[i], expected, 1e-14);
  }
}

TEST(Softmax, UniformInput) {
  const Tensor p = softmax(Tensor::zeros({3}), 0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsStayFinite) {
  const Tensor p = softmax(Tensor::from({2}, {1000, 0}), 0);
  EXPECT_TRUE(std::isfinite(p[0]) && std::isfinite(p[1]));
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
}

TEST(Softmax, ShiftInvariance) {
  const Tensor x = Tensor::from({4}, {0.1, -2, 3, 0.5});
  const Tensor a = softmax(x, 0);
  const Tensor b = softmax(add_scalar(x, 123.25), 0);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
}

TEST(Softmax, SumsToOneAlongAxisUpToLargeExtents) {
  Rng rng(5);
  const Tensor x = uniform_tensor({1000, 3}, 50.0, rng);
  const Tensor p = softmax(x, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < 1000; ++r) s += p[r * 3 + c];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
  const Tensor q = softmax(x, 1);
  for (std::size_t r = 0; r < 1000; ++r) EXPECT_NEAR(q[r * 3] + q[r * 3 + 1] + q[r * 3 + 2], 1.0, 1e-6);
}

TEST(Softmax, InvalidAxisIsContractError) { EXPECT_THROW(softmax(Tensor::zeros({2, 2}), 2), ContractError); }

TEST(Backward, SumGivesOnes) {
  Tensor w = leaf({3}, {4, 5, 6});
  sum(w).backward();
  for (double g : w.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, HalfSquaredNorm) {
  Tensor w = leaf({2}, {1, 2});
  mul_scalar(sum(mul(w, w)), 0.5).backward();
  EXPECT_EQ(w.grad()[0], 1.0);
  EXPECT_EQ(w.grad()[1], 2.0);
}

TEST(Backward, NonScalarLossIsContractError) {
  Tensor w = leaf({2}, {1, 2});
  EXPECT_THROW(mul(w, w).backward(), ContractError);
}

TEST(Backward, RepeatedCallsAccumulate) {
  Tensor w = leaf({2}, {1, 2});
  sum(mul(w, w)).backward();
  sum(mul(w, w)).backward();
  EXPECT_EQ(w.grad()[0], 4.0);
  EXPECT_EQ(w.grad()[1], 8.0);
}

TEST(Backward, ZeroingBetweenRunsIsDeterministic) {
  Rng rng(3);
  Tensor a = uniform_tensor({4, 5}, 1.0, rng);
  Tensor b = uniform_tensor({5, 2}, 1.0, rng);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  auto run = [&] {
    a.zero_grad();
    b.zero_grad();
    sum(softmax(matmul(a, b), 1)).backward();
    sum(mul(softmax(matmul(a, b), 0), matmul(a, b))).backward();
    return std::vector<double>(a.grad().begin(), a.grad().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, TapeIsReleasedAfterBackward) {
  Tensor w = leaf({2}, {1, 2});
  const Tensor loss = sum(mul(w, w));
  EXPECT_FALSE(tape_ops(loss).empty());
  loss.backward();
  EXPECT_TRUE(tape_ops(loss).empty());
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor w = leaf({2}, {1, 2});
  NoGradGuard guard;
  const Tensor y = sum(mul(w, w));
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(tape_ops(y).empty());
}

TEST(Backward, DetachCutsTheTape) {
  Tensor w = leaf({2}, {1, 2});
  const Tensor y = mul(w, w).detach();
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.is_leaf());
}

TEST(DType, F32ValuesAreRoundedAfterEveryOp) {
  const Tensor x = Tensor::from({1}, {0.1}, DType::F32);
  EXPECT_EQ(x[0], static_cast<double>(0.1f));
  const Tensor y = mul_scalar(x, 3.0);
  EXPECT_EQ(y[0], static_cast<double>(static_cast<float>(static_cast<double>(0.1f) * 3.0)));
  EXPECT_EQ(add(x, Tensor::from({1}, {0.2})).dtype(), DType::F64);
}

TEST(Ops, ReshapeAndTransposeGradients) {
  Tensor x = leaf({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor t = transpose(x);
  EXPECT_EQ(t.shape(), (Shape{3, 2}));
  EXPECT_EQ(t[1], 4.0);
  sum(mul(reshape(t, {6}), Tensor::from({6}, {1, 2, 3, 4, 5, 6}))).backward();
  // t flat order is x00 x10 x01 x11 x02 x12
  EXPECT_EQ(x.grad()[0], 1.0);
  EXPECT_EQ(x.grad()[3], 2.0);
  EXPECT_EQ(x.grad()[1], 3.0);
  EXPECT_THROW(reshape(x, {4}), ContractError);
}

TEST(Ops, NllLossOfPerfectPrediction) {
  const Tensor p = Tensor::from({2, 1, 2}, {1, 0, 0, 1});
  const std::vector<std::uint8_t> labels{0, 1};
  EXPECT_NEAR(nll_loss(p, labels).item(), 0.0, 1e-15);
  const Tensor u = Tensor::full({2, 1, 2}, 0.5);
  EXPECT_NEAR(nll_loss(u, labels).item(), std::log(2.0), 1e-15);
}

TEST(Parameters, DuplicateNameIsContractError) {
  ParameterSet params;
  params.add("a", Tensor::zeros({2}));
  EXPECT_THROW(params.add("a", Tensor::zeros({2})), ContractError);
  EXPECT_TRUE(params.get("a").requires_grad());
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ParameterSet params;
  Rng rng(11);
  params.add("layer.w", uniform_tensor({3, 4}, 1.0, rng));
  params.add("layer.b", Tensor::from({2}, {std::numeric_limits<double>::denorm_min(), -0.0}));
  params.add("scalar", Tensor::from({1}, {1.0 / 3.0}));
  const auto bytes = encode_checkpoint(params.items());
  ASSERT_GE(bytes.size(), 10u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ISWT");
  const auto decoded = decode_checkpoint(bytes);
  ASSERT_EQ(decoded.size(), 3u);
  EXPECT_EQ(decoded[0].name, "layer.w");
  EXPECT_EQ(decoded[0].tensor.shape(), (Shape{3, 4}));
  EXPECT_EQ(encode_checkpoint(decoded), bytes);
  EXPECT_TRUE(std::signbit(decoded[1].tensor[1]));
}

TEST(Checkpoint, MalformedBytesAreFormatErrors) {
  ParameterSet params;
  params.add("w", Tensor::ones({2, 2}));
  auto bytes = encode_checkpoint(params.items());
  EXPECT_THROW(decode_checkpoint(std::span(bytes.data(), bytes.size() - 3)), FormatError);
  EXPECT_THROW(decode_checkpoint(std::span<const std::uint8_t>{}), FormatError);
  bytes[0] = 'X';
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Checkpoint, LoadRejectsShapeMismatch) {
  const auto path = std::filesystem::temp_directory_path() / "iswsst_ckpt_mismatch.bin";
  ParameterSet a;
  a.add("w", Tensor::ones({2, 2}));
  save_checkpoint(a, path);
  ParameterSet b;
  b.add("w", Tensor::ones({2, 3}));
  EXPECT_THROW(load_checkpoint(b, path), ContractError);
  ParameterSet c;
  c.add("w", Tensor::zeros({2, 2}));
  load_checkpoint(c, path);
  EXPECT_EQ(c.get("w")[3], 1.0);
  std::filesystem::remove(path);
}
