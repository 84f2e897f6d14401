#include <gtest/gtest.h>

#include <cmath>

#include "iswsst/error.hpp"
#include "iswsst/metrics.hpp"
#include "iswsst/parameter.hpp"
#include "oracles.hpp"

using namespace iswsst;

namespace {

LabelMap labels(std::size_t h, std::size_t w, std::uint16_t k, std::vector<std::uint8_t> v) {
  return make_label_map(h, w, k, std::move(v));
}

}  // namespace

TEST(Metrics, HandExample) {
  const std::vector<LabelMap> truth{labels(2, 2, 2, {0, 0, 1, 1})};
  const std::vector<LabelMap> pred{labels(2, 2, 2, {0, 1, 1, 1})};
  const MetricsReport r = evaluate_labels(truth, pred, 2);
  EXPECT_EQ(r.oa, 0.75);
  EXPECT_EQ(r.per_class_iou[0], 0.5);
  EXPECT_EQ(r.per_class_iou[1], 2.0 / 3.0);
  EXPECT_EQ(r.miou, (0.5 + 2.0 / 3.0) / 2.0);
  EXPECT_NEAR(r.miou, 7.0 / 12.0, 1e-15);
  EXPECT_EQ(r.confusion, (std::vector<std::uint64_t>{1, 1, 0, 2}));
}

TEST(Metrics, PerfectPrediction) {
  const std::vector<LabelMap> truth{labels(2, 3, 4, {0, 1, 2, 3, 3, 0})};
  const MetricsReport r = evaluate_labels(truth, truth, 4);
  EXPECT_EQ(r.oa, 1.0);
  EXPECT_EQ(r.miou, 1.0);
}

TEST(Metrics, AbsentClassIsExcludedWithoutNan) {
  const std::vector<LabelMap> truth{labels(1, 4, 4, {0, 0, 1, 1})};
  const std::vector<LabelMap> pred{labels(1, 4, 4, {0, 1, 1, 1})};
  const MetricsReport r = evaluate_labels(truth, pred, 4);
  EXPECT_TRUE(std::isnan(r.per_class_iou[2]));
  EXPECT_TRUE(std::isnan(r.per_class_iou[3]));
  EXPECT_FALSE(std::isnan(r.miou));
  EXPECT_NEAR(r.miou, 7.0 / 12.0, 1e-15);
}

TEST(Metrics, ClassOnlyPredictedCountsAsZero) {
  const std::vector<LabelMap> truth{labels(1, 2, 3, {0, 0})};
  const std::vector<LabelMap> pred{labels(1, 2, 3, {0, 2})};
  const MetricsReport r = evaluate_labels(truth, pred, 3);
  EXPECT_EQ(r.per_class_iou[2], 0.0);
  EXPECT_EQ(r.miou, 0.25);
}

TEST(Metrics, ConfusionSumsMatchPixelCounts) {
  Rng rng(3);
  ConfusionMatrix cm(5);
  std::vector<std::uint8_t> t(300), p(300);
  std::vector<std::uint64_t> truth_count(5, 0), pred_count(5, 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<std::uint8_t>(rng.index(5));
    p[i] = static_cast<std::uint8_t>(rng.index(5));
    ++truth_count[t[i]];
    ++pred_count[p[i]];
  }
  cm.add(t, p);
  EXPECT_EQ(cm.total(), 300u);
  for (std::size_t c = 0; c < 5; ++c) {
    EXPECT_EQ(cm.row_sum(c), truth_count[c]);
    EXPECT_EQ(cm.col_sum(c), pred_count[c]);
  }
}

TEST(Metrics, ContractViolations) {
  const std::vector<LabelMap> a{labels(2, 2, 2, {0, 0, 1, 1})};
  const std::vector<LabelMap> b{labels(1, 4, 2, {0, 0, 1, 1})};
  EXPECT_THROW(evaluate_labels(a, b, 2), ContractError);
  EXPECT_THROW(evaluate_labels({}, {}, 2), ContractError);
  ConfusionMatrix cm(2);
  const std::vector<std::uint8_t> t{0, 3}, p{0, 1};
  EXPECT_THROW(cm.add(t, p), ContractError);
}

TEST(MetricsCsv, HeaderAndRow) {
  EXPECT_EQ(metrics_csv_header(3), "split,oa,miou,iou_0,iou_1,iou_2");
  const std::vector<LabelMap> truth{labels(1, 4, 3, {0, 0, 1, 1})};
  const std::vector<LabelMap> pred{labels(1, 4, 3, {0, 1, 1, 1})};
  EXPECT_EQ(metrics_csv_row("test", evaluate_labels(truth, pred, 3)), "test,0.750000,0.583333,0.500000,0.666667,nan");
}

TEST(Metrics, MatchesBruteForceRecount) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    const std::size_t h = 1 + rng.index(64), w = 1 + rng.index(64);
    // Restrict the drawn classes sometimes so absent classes occur.
    const std::size_t drawn = trial % 3 == 0 ? std::max<std::size_t>(1, k - 2) : k;
    std::vector<std::uint8_t> t(h * w), p(h * w);
    for (auto& v : t) v = static_cast<std::uint8_t>(rng.index(drawn));
    for (auto& v : p) v = rng.uniform(0.0, 1.0) < 0.6 ? t[&v - p.data()] : static_cast<std::uint8_t>(rng.index(drawn));
    const std::vector<LabelMap> truth{make_label_map(h, w, static_cast<std::uint16_t>(k), t)};
    const std::vector<LabelMap> pred{make_label_map(h, w, static_cast<std::uint16_t>(k), p)};
    const MetricsReport r = evaluate_labels(truth, pred, k);
    const oracle::Metrics o = oracle::brute_force_metrics(truth, pred, k);
    EXPECT_EQ(r.oa, o.oa);
    EXPECT_EQ(r.miou, o.miou);
    for (std::size_t c = 0; c < k; ++c) EXPECT_TRUE(oracle::same_value(r.per_class_iou[c], o.iou[c]));
  }
}
