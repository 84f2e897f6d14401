#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iswsst/raster.hpp"

namespace iswsst {

// Counts stored truth-major: at(truth, pred).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes);

  void add(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred);
  void add(const LabelMap& truth, const LabelMap& pred);

  std::size_t n_classes() const { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * n_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t pred) const;
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

struct MetricsReport {
  double oa = 0.0;
  // NaN for classes absent from both truth and prediction; those are
  // excluded from the mean.
  std::vector<double> per_class_iou;
  double miou = 0.0;
  std::vector<std::uint64_t> confusion;  // truth-major, n_classes^2
  std::size_t n_classes = 0;
};

MetricsReport compute_metrics(const ConfusionMatrix& cm);
MetricsReport evaluate_labels(std::span<const LabelMap> truth, std::span<const LabelMap> pred, std::size_t n_classes);

// `split,oa,miou,iou_0..iou_{k-1}`; excluded classes print as "nan".
std::string metrics_csv_header(std::size_t n_classes);
std::string metrics_csv_row(const std::string& split, const MetricsReport& report);

}  // namespace iswsst
