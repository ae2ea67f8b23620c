#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcdal/error.hpp"
#include "mcdal/tensor.hpp"

namespace mcdal {

/// Pooled confusion matrix: rows are ground truth, columns prediction.
/// Counts are 64-bit; pixels whose ground truth equals `ignore_label` are
/// skipped.
class ConfusionMatrix {
 public:
  using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

  explicit ConfusionMatrix(int classes, std::optional<int> ignore_label = std::nullopt);

  int classes() const { return static_cast<int>(counts_.rows()); }
  std::optional<int> ignore_label() const { return ignore_label_; }
  const Counts& counts() const { return counts_; }
  std::int64_t total() const { return counts_.sum(); }

  template <typename GtDerived, typename PredDerived>
  ConfusionMatrix& accumulate(const Eigen::ArrayBase<GtDerived>& gt,
                              const Eigen::ArrayBase<PredDerived>& pred) {
    if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) {
      fail(ErrorCode::kShapeMismatch, "ground truth and prediction maps differ in shape");
    }
    // Validate before touching counts so a bad map leaves the matrix unchanged.
    for (Index r = 0; r < gt.rows(); ++r) {
      for (Index c = 0; c < gt.cols(); ++c) check_pair(static_cast<long>(gt(r, c)),
                                                       static_cast<long>(pred(r, c)));
    }
    for (Index r = 0; r < gt.rows(); ++r) {
      for (Index c = 0; c < gt.cols(); ++c) {
        const long g = static_cast<long>(gt(r, c));
        if (ignore_label_ && g == *ignore_label_) continue;
        ++counts_(g, static_cast<long>(pred(r, c)));
      }
    }
    return *this;
  }

  /// Entrywise sum; both matrices must agree on classes and ignore label.
  ConfusionMatrix& merge(const ConfusionMatrix& other);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other) { return merge(other); }

  bool operator==(const ConfusionMatrix& other) const {
    return ignore_label_ == other.ignore_label_ && counts_ == other.counts_;
  }

  /// Direct count access for assembling fixtures.
  std::int64_t& at(int gt, int pred) { return counts_(gt, pred); }

 private:
  void check_pair(long gt, long pred) const;

  Counts counts_;
  std::optional<int> ignore_label_;
};

struct SegEvalReport {
  /// IoU per class; empty where the class is absent from both ground truth
  /// and prediction.
  std::vector<std::optional<double>> per_class_iou;
  /// Mean over classes with a defined IoU; NaN when none is defined.
  double mean_iou = 0.0;
  /// Ground-truth pixel count per class.
  std::vector<std::int64_t> gt_pixels;
  std::vector<std::int64_t> pred_pixels;
};

SegEvalReport iou_report(const ConfusionMatrix& cm);

/// One CSV row: iteration, pct_data, iou_0..iou_{C-1}, mean_iou. Absent
/// classes render as empty fields; numbers use 9 significant digits.
std::string report_csv_header(int classes);
std::string report_csv_row(int iteration, double pct_data, const SegEvalReport& report);

}  // namespace mcdal
