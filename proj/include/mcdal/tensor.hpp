#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "mcdal/error.hpp"

namespace mcdal {

using Index = Eigen::Index;

/// Row-major H x W map of per-pixel values.
template <typename Scalar>
using Map2D = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using PixelMap = Map2D<double>;
using ClassMap = Map2D<int>;
using LabelMap = Map2D<std::uint8_t>;

/// T stochastic forward passes of one image: probabilities laid out
/// [T, C, H, W] in row-major order. Storage is a (T*C) x (H*W) row-major
/// array, so row `t*C + c` is the probability plane of class c in pass t
/// and the memory order matches the on-disk tensor layout.
template <typename Scalar>
class BasicPredictionStack {
 public:
  using Planes = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  static constexpr double kSumTolerance = 1e-4;
  static constexpr double kRangeSlack = 1e-6;

  BasicPredictionStack() = default;

  BasicPredictionStack(std::string image_id, Index passes, Index classes, Index height,
                       Index width)
      : image_id_(std::move(image_id)),
        passes_(passes),
        classes_(classes),
        height_(height),
        width_(width) {
    check_dims();
    planes_ = Planes::Zero(passes * classes, height * width);
  }

  BasicPredictionStack(std::string image_id, Index passes, Index classes, Index height,
                       Index width, Planes planes)
      : image_id_(std::move(image_id)),
        passes_(passes),
        classes_(classes),
        height_(height),
        width_(width),
        planes_(std::move(planes)) {
    check_dims();
    if (planes_.rows() != passes * classes || planes_.cols() != height * width) {
      fail(ErrorCode::kShapeMismatch, "plane storage does not match [T, C, H, W] dims");
    }
  }

  const std::string& image_id() const { return image_id_; }
  void set_image_id(std::string id) { image_id_ = std::move(id); }

  Index passes() const { return passes_; }
  Index classes() const { return classes_; }
  Index height() const { return height_; }
  Index width() const { return width_; }
  Index pixels() const { return height_ * width_; }
  bool empty() const { return planes_.size() == 0; }

  Scalar& operator()(Index t, Index c, Index h, Index w) {
    return planes_(t * classes_ + c, h * width_ + w);
  }
  Scalar operator()(Index t, Index c, Index h, Index w) const {
    return planes_(t * classes_ + c, h * width_ + w);
  }

  /// Probability of class c in pass t at flat pixel index n = h*W + w.
  Scalar at(Index t, Index c, Index n) const { return planes_(t * classes_ + c, n); }
  Scalar& at(Index t, Index c, Index n) { return planes_(t * classes_ + c, n); }

  Planes& planes() { return planes_; }
  const Planes& planes() const { return planes_; }

  Scalar* data() { return planes_.data(); }
  const Scalar* data() const { return planes_.data(); }

  /// The first `count` passes as a new stack.
  BasicPredictionStack first_passes(Index count) const {
    require(count >= 1 && count <= passes_, "requested pass count out of range");
    return BasicPredictionStack(image_id_, count, classes_, height_, width_,
                                planes_.topRows(count * classes_));
  }

  template <typename Other>
  BasicPredictionStack<Other> cast() const {
    return BasicPredictionStack<Other>(image_id_, passes_, classes_, height_, width_,
                                       planes_.template cast<Other>());
  }

  /// Checks finiteness, value range and per-(pass, pixel) sums, then clamps
  /// values into [0, 1]. With `renormalize`, sums are rescaled to one
  /// instead of being rejected.
  void validate(bool renormalize = false, double sum_tolerance = kSumTolerance) {
    const Index n_pixels = pixels();
    for (Index t = 0; t < passes_; ++t) {
      for (Index n = 0; n < n_pixels; ++n) {
        double sum = 0.0;
        for (Index c = 0; c < classes_; ++c) {
          const double v = static_cast<double>(at(t, c, n));
          if (!std::isfinite(v) || v < -kRangeSlack || v > 1.0 + kRangeSlack) {
            fail(ErrorCode::kValueRange, "value " + std::to_string(v) + " out of [0,1] at " +
                                             coordinate(t, c, n));
          }
          sum += v;
        }
        if (renormalize) {
          if (!(sum > 0.0)) {
            fail(ErrorCode::kProbabilitySum,
                 "cannot renormalize zero-sum pixel at " + pixel_coordinate(t, n));
          }
          for (Index c = 0; c < classes_; ++c) {
            planes_(t * classes_ + c, n) = static_cast<Scalar>(at(t, c, n) / sum);
          }
        } else if (std::abs(sum - 1.0) > sum_tolerance) {
          fail(ErrorCode::kProbabilitySum, "probabilities sum to " + std::to_string(sum) +
                                               " at " + pixel_coordinate(t, n));
        }
      }
    }
    planes_ = planes_.max(Scalar(0)).min(Scalar(1));
  }

  std::string pixel_coordinate(Index t, Index n) const {
    return "(t=" + std::to_string(t) + ", h=" + std::to_string(n / width_) +
           ", w=" + std::to_string(n % width_) + ")";
  }

 private:
  void check_dims() const {
    if (passes_ < 1 || classes_ < 1 || height_ < 1 || width_ < 1) {
      fail(ErrorCode::kShapeMismatch, "stack dims must all be >= 1");
    }
  }

  std::string coordinate(Index t, Index c, Index n) const {
    return "(t=" + std::to_string(t) + ", c=" + std::to_string(c) +
           ", h=" + std::to_string(n / width_) + ", w=" + std::to_string(n % width_) + ")";
  }

  std::string image_id_;
  Index passes_ = 0;
  Index classes_ = 0;
  Index height_ = 0;
  Index width_ = 0;
  Planes planes_;
};

using PredictionStack = BasicPredictionStack<float>;

}  // namespace mcdal
