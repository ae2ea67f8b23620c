#pragma once

// Monte-Carlo-dropout epistemic uncertainty measures over a stack of T
// stochastic forward passes. Every reduction over the pass axis goes through
// an exact fixed-point accumulator, so results depend only on the multiset
// of passes and are bit-for-bit invariant under pass permutation.
// Accumulation is at least double precision whatever the storage scalar.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcdal/error.hpp"
#include "mcdal/tensor.hpp"

namespace mcdal {

enum class Measure {
  kVariationRatio,
  kTotalVariance,
  kPredictiveEntropy,
  kMutualInformation,
  kMarginOfConfidence,
};

inline constexpr std::array<Measure, 5> kAllMeasures = {
    Measure::kVariationRatio, Measure::kTotalVariance, Measure::kPredictiveEntropy,
    Measure::kMutualInformation, Measure::kMarginOfConfidence};

constexpr std::string_view to_string(Measure m) {
  switch (m) {
    case Measure::kVariationRatio: return "variation-ratio";
    case Measure::kTotalVariance: return "total-variance";
    case Measure::kPredictiveEntropy: return "predictive-entropy";
    case Measure::kMutualInformation: return "mutual-information";
    case Measure::kMarginOfConfidence: return "margin";
  }
  return "unknown";
}

/// Accepts the canonical names plus the short forms vr, tv, pe/entropy, mi.
inline std::optional<Measure> parse_measure(std::string_view name) {
  if (name == "variation-ratio" || name == "vr") return Measure::kVariationRatio;
  if (name == "total-variance" || name == "tv") return Measure::kTotalVariance;
  if (name == "predictive-entropy" || name == "entropy" || name == "pe")
    return Measure::kPredictiveEntropy;
  if (name == "mutual-information" || name == "mi") return Measure::kMutualInformation;
  if (name == "margin" || name == "margin-of-confidence") return Measure::kMarginOfConfidence;
  return std::nullopt;
}

struct MeanPrediction {
  /// C x (H*W), row c is the averaged probability plane of class c.
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> probs;
  ClassMap predicted_class;

  double prob(Index c, Index h, Index w) const {
    return probs(c, h * predicted_class.cols() + w);
  }
};

struct VoteStats {
  /// T x (H*W) per-pass argmax classes, in the stack's pass order.
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> votes;
  ClassMap modal_class;
  ClassMap modal_frequency;
};

struct UncertaintyScores {
  Measure measure = Measure::kMutualInformation;
  bool normalized = false;
  PixelMap per_pixel;
  double per_image = 0.0;
};

/// Inclusive bounds of a measure for a class count, before slack.
struct MeasureBounds {
  double lower;
  double upper;
};

inline MeasureBounds measure_bounds(Measure measure, Index classes, bool normalized = true) {
  const double log_c = std::log2(static_cast<double>(classes));
  switch (measure) {
    case Measure::kVariationRatio: return {0.0, 1.0 - 1.0 / static_cast<double>(classes)};
    case Measure::kTotalVariance: return {0.0, std::numeric_limits<double>::infinity()};
    case Measure::kPredictiveEntropy:
    case Measure::kMutualInformation: return {0.0, normalized ? 1.0 : log_c};
    case Measure::kMarginOfConfidence: return {-1.0, 1.0};
  }
  return {0.0, 0.0};
}

namespace detail {

inline constexpr double kLogFloor = 1e-12;

inline double plog2p(double p) {
  return p > 0.0 ? p * std::log2(std::max(p, kLogFloor)) : 0.0;
}

template <typename T>
Index argmax_lowest(const T* values, Index count, Index stride = 1) {
  Index best = 0;
  for (Index c = 1; c < count; ++c) {
    if (values[c * stride] > values[best * stride]) best = c;
  }
  return best;
}

// Terms are rounded to multiples of 2^-56 and summed as 128-bit integers.
// Integer addition is associative, so the total does not depend on the
// order of the passes. Terms must satisfy |x| < 64.
using FixedSum = __int128;
inline constexpr double kFixedScale = 0x1p56;

inline FixedSum to_fixed(double x) { return static_cast<FixedSum>(std::llrint(x * kFixedScale)); }
inline double from_fixed(FixedSum v) { return static_cast<double>(v) / kFixedScale; }

template <typename Scalar>
void check_stack(const BasicPredictionStack<Scalar>& stack) {
  if (stack.passes() < 1 || stack.empty()) {
    fail(ErrorCode::kInvalidArgument, "stack has no passes (T = 0)");
  }
  if (stack.classes() < 2) fail(ErrorCode::kInvalidArgument, "stack needs C >= 2 classes");
}

using MeanProbs = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// C x (H*W) mean over passes.
template <typename Scalar>
MeanProbs mean_probs(const BasicPredictionStack<Scalar>& stack) {
  check_stack(stack);
  const Index T = stack.passes();
  const Index C = stack.classes();
  const Index N = stack.pixels();
  std::vector<FixedSum> acc(static_cast<std::size_t>(C * N), 0);
  for (Index t = 0; t < T; ++t) {
    for (Index c = 0; c < C; ++c) {
      const Scalar* row = stack.data() + (t * C + c) * N;
      FixedSum* out = acc.data() + c * N;
      for (Index n = 0; n < N; ++n) out[n] += to_fixed(static_cast<double>(row[n]));
    }
  }
  MeanProbs mean(C, N);
  for (Index i = 0; i < C * N; ++i) mean.data()[i] = from_fixed(acc[i]) / static_cast<double>(T);
  return mean;
}

/// Per-pixel mean over passes of term(t, n).
template <typename Scalar, typename Term>
PixelMap average_over_passes(const BasicPredictionStack<Scalar>& stack, Term&& term) {
  const Index T = stack.passes();
  const Index N = stack.pixels();
  std::vector<FixedSum> acc(static_cast<std::size_t>(N), 0);
  for (Index t = 0; t < T; ++t) {
    for (Index n = 0; n < N; ++n) acc[n] += to_fixed(term(t, n));
  }
  PixelMap out(stack.height(), stack.width());
  for (Index n = 0; n < N; ++n) out(n) = from_fixed(acc[n]) / static_cast<double>(T);
  return out;
}

/// Entropy in bits of pass t at pixel n, capped at log2(C) like mean_entropy().
template <typename Scalar>
double pass_entropy(const BasicPredictionStack<Scalar>& stack, Index t, Index n) {
  const Index C = stack.classes();
  const Index N = stack.pixels();
  const Scalar* p = stack.data() + t * C * N + n;
  double h = 0.0;
  for (Index c = 0; c < C; ++c) h -= plog2p(static_cast<double>(p[c * N]));
  return std::min(h, std::log2(static_cast<double>(C)));
}

/// Entropy in bits of the mean prediction at every pixel, capped at log2(C):
/// float passes whose sums drift above 1 would otherwise overshoot it.
inline Eigen::ArrayXd mean_entropy(const MeanProbs& mean) {
  Eigen::ArrayXd h = Eigen::ArrayXd::Zero(mean.cols());
  for (Index c = 0; c < mean.rows(); ++c) {
    for (Index n = 0; n < mean.cols(); ++n) h(n) -= plog2p(mean(c, n));
  }
  return h.min(std::log2(static_cast<double>(mean.rows())));
}

inline UncertaintyScores finish(Measure m, bool normalized, PixelMap per_pixel);

}  // namespace detail

/// Per-pixel mean over T passes; predicted class is the argmax with ties
/// going to the lowest class index.
template <typename Scalar>
MeanPrediction mean_prediction(const BasicPredictionStack<Scalar>& stack) {
  MeanPrediction out;
  out.probs = detail::mean_probs(stack);
  out.predicted_class.resize(stack.height(), stack.width());
  for (Index n = 0; n < stack.pixels(); ++n) {
    out.predicted_class(n) = static_cast<int>(
        detail::argmax_lowest(out.probs.data() + n, stack.classes(), stack.pixels()));
  }
  return out;
}

template <typename Scalar>
VoteStats vote_stats(const BasicPredictionStack<Scalar>& stack) {
  detail::check_stack(stack);
  const Index T = stack.passes();
  const Index C = stack.classes();
  VoteStats out;
  out.votes.resize(T, stack.pixels());
  out.modal_class.resize(stack.height(), stack.width());
  out.modal_frequency.resize(stack.height(), stack.width());
  const Index N = stack.pixels();
  std::vector<int> counts(C);
  for (Index n = 0; n < N; ++n) {
    std::fill(counts.begin(), counts.end(), 0);
    for (Index t = 0; t < T; ++t) {
      const Index vote = detail::argmax_lowest(stack.data() + t * C * N + n, C, N);
      out.votes(t, n) = static_cast<int>(vote);
      ++counts[vote];
    }
    const auto mode = std::max_element(counts.begin(), counts.end()) - counts.begin();
    out.modal_class(n) = static_cast<int>(mode);
    out.modal_frequency(n) = counts[mode];
  }
  return out;
}

/// Mean of a per-pixel map over all H*W pixels.
inline double image_uncertainty(const PixelMap& per_pixel) {
  if (per_pixel.size() == 0) fail(ErrorCode::kInvalidArgument, "empty pixel map");
  if (!per_pixel.isFinite().all()) {
    fail(ErrorCode::kInvalidArgument, "pixel map contains non-finite values");
  }
  return per_pixel.sum() / static_cast<double>(per_pixel.size());
}

/// 1 - f_cm / T, where f_cm counts the modal per-pass vote.
template <typename Scalar>
UncertaintyScores variation_ratio(const BasicPredictionStack<Scalar>& stack) {
  const VoteStats votes = vote_stats(stack);
  PixelMap per_pixel =
      1.0 - votes.modal_frequency.cast<double>() / static_cast<double>(stack.passes());
  return detail::finish(Measure::kVariationRatio, false, std::move(per_pixel));
}

/// (1/T) sum_c sum_t (p_ct - p*_c)^2.
template <typename Scalar>
UncertaintyScores total_variance(const BasicPredictionStack<Scalar>& stack) {
  const detail::MeanProbs mean = detail::mean_probs(stack);
  const Index C = stack.classes();
  PixelMap per_pixel = detail::average_over_passes(stack, [&](Index t, Index n) {
    double sum = 0.0;
    for (Index c = 0; c < C; ++c) {
      const double d = static_cast<double>(stack.at(t, c, n)) - mean(c, n);
      sum += d * d;
    }
    return sum;
  });
  return detail::finish(Measure::kTotalVariance, false, std::move(per_pixel));
}

/// Shannon entropy of the mean prediction in bits, divided by log2(C) when
/// normalized.
template <typename Scalar>
UncertaintyScores predictive_entropy(const BasicPredictionStack<Scalar>& stack,
                                     bool normalized = true) {
  const detail::MeanProbs mean = detail::mean_probs(stack);
  const double scale = normalized ? 1.0 / std::log2(static_cast<double>(stack.classes())) : 1.0;
  PixelMap per_pixel(stack.height(), stack.width());
  per_pixel.reshaped<Eigen::RowMajor>() = (detail::mean_entropy(mean) * scale).min(
      measure_bounds(Measure::kPredictiveEntropy, stack.classes(), normalized).upper);
  return detail::finish(Measure::kPredictiveEntropy, normalized, std::move(per_pixel));
}

/// H(p*) - mean_t H(p_t), accumulated as the mean of per-pass gaps so that
/// identical passes give exactly zero. Float noise can push the value a
/// hair outside [0, log2 C]; reported values are clamped to that range.
template <typename Scalar>
UncertaintyScores mutual_information(const BasicPredictionStack<Scalar>& stack,
                                     bool normalized = true) {
  const Eigen::ArrayXd h_mean = detail::mean_entropy(detail::mean_probs(stack));
  const double scale = normalized ? 1.0 / std::log2(static_cast<double>(stack.classes())) : 1.0;
  PixelMap per_pixel = detail::average_over_passes(stack, [&](Index t, Index n) {
    return h_mean(n) - detail::pass_entropy(stack, t, n);
  });
  per_pixel = (per_pixel * scale)
                  .max(0.0)
                  .min(measure_bounds(Measure::kMutualInformation, stack.classes(), normalized).upper);
  return detail::finish(Measure::kMutualInformation, normalized, std::move(per_pixel));
}

/// (1/T) sum_t (p_jt - max_{c != j} p_ct) with j the argmax of the mean
/// prediction. A confidence: 1 is certain, see to_acquisition().
template <typename Scalar>
UncertaintyScores margin_of_confidence(const BasicPredictionStack<Scalar>& stack) {
  const MeanPrediction mean = mean_prediction(stack);
  const Index C = stack.classes();
  PixelMap per_pixel = detail::average_over_passes(stack, [&](Index t, Index n) {
    const Index j = mean.predicted_class(n);
    double runner_up = -1.0;
    for (Index c = 0; c < C; ++c) {
      if (c != j) runner_up = std::max(runner_up, static_cast<double>(stack.at(t, c, n)));
    }
    return static_cast<double>(stack.at(t, j, n)) - runner_up;
  });
  return detail::finish(Measure::kMarginOfConfidence, false, std::move(per_pixel));
}

/// Entropy and mutual information are normalized by log2(C) when
/// `normalized` is set; the other measures ignore the flag.
template <typename Scalar>
UncertaintyScores compute_measure(const BasicPredictionStack<Scalar>& stack, Measure measure,
                                  bool normalized = true) {
  switch (measure) {
    case Measure::kVariationRatio: return variation_ratio(stack);
    case Measure::kTotalVariance: return total_variance(stack);
    case Measure::kPredictiveEntropy: return predictive_entropy(stack, normalized);
    case Measure::kMutualInformation: return mutual_information(stack, normalized);
    case Measure::kMarginOfConfidence: return margin_of_confidence(stack);
  }
  fail(ErrorCode::kInvalidArgument, "unknown measure");
}

/// Maps a measure value onto "higher = more uncertain". Margin becomes
/// (1 - M) / 2 in [0, 1]; the rest pass through.
constexpr double to_acquisition(Measure measure, double value) {
  return measure == Measure::kMarginOfConfidence ? (1.0 - value) / 2.0 : value;
}

/// Per-image acquisition score (normalized entropy/MI, transformed margin).
template <typename Scalar>
double acquisition_score(const BasicPredictionStack<Scalar>& stack, Measure measure) {
  return to_acquisition(measure, compute_measure(stack, measure, true).per_image);
}

/// Acquisition-oriented per-pixel map and per-image score.
template <typename Scalar>
UncertaintyScores acquisition_map(const BasicPredictionStack<Scalar>& stack, Measure measure) {
  UncertaintyScores scores = compute_measure(stack, measure, true);
  if (measure == Measure::kMarginOfConfidence) {
    scores.per_pixel = (1.0 - scores.per_pixel) / 2.0;
    scores.per_image = image_uncertainty(scores.per_pixel);
  }
  return scores;
}

namespace detail {

inline UncertaintyScores finish(Measure m, bool normalized, PixelMap per_pixel) {
  UncertaintyScores out;
  out.measure = m;
  out.normalized = normalized;
  out.per_image = image_uncertainty(per_pixel);
  out.per_pixel = std::move(per_pixel);
  return out;
}

}  // namespace detail

}  // namespace mcdal
