#include "iswsst/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "iswsst/error.hpp"

namespace iswsst {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {
  if (n_classes == 0) throw ContractError("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred) {
  if (truth.size() != pred.size()) {
    throw ContractError("prediction has " + std::to_string(pred.size()) + " pixels, truth has " +
                        std::to_string(truth.size()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= n_ || pred[i] >= n_) {
      throw ContractError("class id " + std::to_string(std::max(truth[i], pred[i])) + " outside [0, " +
                          std::to_string(n_) + ")");
    }
    ++counts_[truth[i] * n_ + pred[i]];
  }
}

void ConfusionMatrix::add(const LabelMap& truth, const LabelMap& pred) {
  if (truth.height != pred.height || truth.width != pred.width) {
    throw ContractError("prediction extents " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                        " differ from truth " + std::to_string(truth.height) + "x" + std::to_string(truth.width));
  }
  add(truth.labels, pred.labels);
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < n_; ++p) t += at(truth, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
  std::uint64_t t = 0;
  for (std::size_t g = 0; g < n_; ++g) t += at(g, pred);
  return t;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  const std::size_t n = cm.n_classes();
  MetricsReport r;
  r.n_classes = n;
  r.confusion = cm.counts();
  const std::uint64_t total = cm.total();
  if (total == 0) throw ContractError("cannot evaluate an empty prediction set");
  std::uint64_t diag = 0;
  for (std::size_t c = 0; c < n; ++c) diag += cm.at(c, c);
  r.oa = static_cast<double>(diag) / static_cast<double>(total);

  double sum = 0.0;
  std::size_t counted = 0;
  r.per_class_iou.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t uni = cm.row_sum(c) + cm.col_sum(c) - tp;
    if (uni == 0) continue;
    r.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
    sum += r.per_class_iou[c];
    ++counted;
  }
  r.miou = counted ? sum / static_cast<double>(counted) : 0.0;
  return r;
}

MetricsReport evaluate_labels(std::span<const LabelMap> truth, std::span<const LabelMap> pred, std::size_t n_classes) {
  if (truth.size() != pred.size()) throw ContractError("prediction and truth counts differ");
  if (truth.empty()) throw ContractError("cannot evaluate an empty data set");
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return compute_metrics(cm);
}

std::string metrics_csv_header(std::size_t n_classes) {
  std::string out = "split,oa,miou";
  for (std::size_t c = 0; c < n_classes; ++c) out += ",iou_" + std::to_string(c);
  return out;
}

std::string metrics_csv_row(const std::string& split, const MetricsReport& report) {
  auto fmt = [](double v) -> std::string {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  std::string out = split + "," + fmt(report.oa) + "," + fmt(report.miou);
  for (double v : report.per_class_iou) out += "," + fmt(v);
  return out;
}

}  // namespace iswsst
