#include <gtest/gtest.h>

#include <set>

#include "iswsst/gradcheck.hpp"
#include "iswsst/ops.hpp"
#include "iswsst/parameter.hpp"

using namespace iswsst;

TEST(GradCheck, EveryBlockPasses) {
  const auto results = run_block_gradchecks(0);
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.block);
    EXPECT_TRUE(r.passed) << r.block << " max rel error " << r.max_rel_error;
    EXPECT_LE(r.max_rel_error, 1e-4) << r.block;
    EXPECT_GT(r.checked, 0u) << r.block;
  }
  for (const char* required :
       {"wave_block", "mhsa_block", "channel_attend", "superpose_soft", "index_logits", "lwped", "full_model"})
    EXPECT_TRUE(names.count(required)) << required;
}

TEST(GradCheck, DetectsAWrongBackward) {
  Rng rng(1);
  Tensor x = uniform_tensor({5}, 1.0, rng);
  x.set_requires_grad(true);
  // Squares its input but reports twice the true derivative.
  auto broken_square = [](const Tensor& in) {
    std::vector<double> out(in.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * in[i];
    return record_op("broken_square", in.shape(), in.dtype(), std::move(out), {in},
                     [in](std::span<const double> g, std::span<const std::span<double>> gin) {
                       for (std::size_t i = 0; i < g.size(); ++i) gin[0][i] += 4.0 * in[i] * g[i];
                     });
  };
  const auto bad = check_gradients("broken", [&] { return sum(broken_square(x)); }, {x});
  EXPECT_FALSE(bad.passed);
  const auto good = check_gradients("square", [&] { return sum(mul(x, x)); }, {x});
  EXPECT_TRUE(good.passed);
  EXPECT_EQ(good.checked, 5u);
}

TEST(GradCheck, SamplingLimitsCheckedElements) {
  Rng rng(2);
  Tensor x = uniform_tensor({40}, 1.0, rng);
  x.set_requires_grad(true);
  GradCheckOptions options;
  options.max_per_leaf = 6;
  const auto r = check_gradients("sampled", [&] { return sum(sigmoid(x)); }, {x}, options);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.checked, 6u);
}
