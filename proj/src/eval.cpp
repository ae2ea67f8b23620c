#include "mcdal/eval.hpp"

#include <cmath>
#include <limits>

#include "mcdal/format.hpp"

namespace mcdal {

ConfusionMatrix::ConfusionMatrix(int classes, std::optional<int> ignore_label)
    : ignore_label_(ignore_label) {
  require(classes >= 1, "confusion matrix needs at least one class");
  counts_ = Counts::Zero(classes, classes);
}

void ConfusionMatrix::check_pair(long gt, long pred) const {
  if (ignore_label_ && gt == *ignore_label_) return;
  const long n = counts_.rows();
  if (gt < 0 || gt >= n) {
    fail(ErrorCode::kValueRange, "ground-truth class " + std::to_string(gt) + " out of range");
  }
  if (pred < 0 || pred >= n) {
    fail(ErrorCode::kValueRange, "predicted class " + std::to_string(pred) + " out of range");
  }
}

ConfusionMatrix& ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes() != classes() || other.ignore_label_ != ignore_label_) {
    fail(ErrorCode::kShapeMismatch, "cannot merge confusion matrices with different layouts");
  }
  counts_ += other.counts_;
  return *this;
}

SegEvalReport iou_report(const ConfusionMatrix& cm) {
  const auto& counts = cm.counts();
  const int n = cm.classes();
  SegEvalReport report;
  report.per_class_iou.resize(n);
  report.gt_pixels.resize(n);
  report.pred_pixels.resize(n);
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < n; ++c) {
    const std::int64_t tp = counts(c, c);
    const std::int64_t gt = counts.row(c).sum();
    const std::int64_t pred = counts.col(c).sum();
    report.gt_pixels[c] = gt;
    report.pred_pixels[c] = pred;
    const std::int64_t uni = gt + pred - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    report.per_class_iou[c] = iou;
    sum += iou;
    ++defined;
  }
  report.mean_iou = defined ? sum / defined : std::numeric_limits<double>::quiet_NaN();
  return report;
}

std::string report_csv_header(int classes) {
  std::string out = "iteration,pct_data";
  for (int c = 0; c < classes; ++c) out += ",iou_" + std::to_string(c);
  out += ",mean_iou";
  return out;
}

std::string report_csv_row(int iteration, double pct_data, const SegEvalReport& report) {
  std::string out = std::to_string(iteration) + "," + format_g9(pct_data);
  for (const auto& iou : report.per_class_iou) {
    out += ",";
    if (iou) out += format_g9(*iou);
  }
  out += "," + format_g9(report.mean_iou);
  return out;
}

}  // namespace mcdal
