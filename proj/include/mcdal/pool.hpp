#pragma once

// Pool-based acquisition loop: labeled / unlabeled / discarded partitions of
// the train and val splits, threshold selection with a shuffle-and-scan pass,
// the low-uncertainty discard rule, the count-matched random baseline and the
// stopping conditions.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcdal/manifest.hpp"
#include "mcdal/metrics.hpp"

namespace mcdal {

enum class Split { kTrain = 0, kVal = 1 };

inline constexpr std::array<Split, 2> kPoolSplits = {Split::kTrain, Split::kVal};

constexpr std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "val"; }

template <typename T>
struct PerSplit {
  T train{};
  T val{};

  T& operator[](Split s) { return s == Split::kTrain ? train : val; }
  const T& operator[](Split s) const { return s == Split::kTrain ? train : val; }

  bool operator==(const PerSplit&) const = default;
};

using SplitIds = PerSplit<std::vector<std::string>>;

/// Train and val ids of a manifest, in manifest order.
SplitIds pool_ids(const Manifest& manifest);

struct SplitPool {
  std::vector<std::string> labeled;
  std::vector<std::string> unlabeled;
  std::vector<std::string> discarded;

  std::size_t size() const { return labeled.size() + unlabeled.size() + discarded.size(); }
  bool operator==(const SplitPool&) const = default;
};

/// TR = mean + S * std over the labeled pool's per-image scores.
struct ThresholdSpec {
  Split split = Split::kTrain;
  double s_factor = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double threshold = 0.0;
  std::size_t count = 0;

  bool operator==(const ThresholdSpec&) const = default;
};

enum class SelectionMode { kUncertainty, kRandom };

constexpr std::string_view to_string(SelectionMode m) {
  return m == SelectionMode::kUncertainty ? "uncertainty" : "random";
}

struct SplitRound {
  std::optional<ThresholdSpec> threshold;
  std::vector<std::string> selected;
  std::vector<std::string> discarded;
  std::size_t scanned = 0;
  std::size_t pool_size = 0;  // unlabeled pool size when the round began

  bool operator==(const SplitRound&) const = default;
};

struct SelectionRound {
  int iteration = 0;
  SelectionMode mode = SelectionMode::kUncertainty;
  std::optional<Measure> measure;
  PerSplit<SplitRound> splits;
  std::optional<int> cap;
  std::uint64_t seed = 0;

  bool operator==(const SelectionRound&) const = default;
};

struct PoolState {
  PerSplit<SplitPool> pools;
  int iteration = 0;
  std::uint64_t rng_seed = 0;
  std::vector<SelectionRound> history;

  /// Throws kStateInconsistent when partitions overlap, ids repeat or the
  /// history length disagrees with the iteration counter.
  void check() const;

  bool operator==(const PoolState&) const = default;
};

struct ScoreRecord {
  std::string image_id;
  Split split = Split::kTrain;
  double eu_img = 0.0;
  Measure measure = Measure::kMutualInformation;
  int iteration_scored = 0;
};

/// Per-image acquisition scores for a batch of ids of one split, returned
/// in input order.
using BatchScorer = std::function<std::vector<double>(Split, std::span<const std::string>)>;
using Scorer = std::function<double(const std::string&, Split)>;

BatchScorer batched(Scorer scorer);

/// Seeds ceil(P/100 * n) labeled ids per split, sampled uniformly without
/// replacement. Labeled and unlabeled keep manifest order.
PoolState seed_initial(const SplitIds& ids, double p_percent, std::uint64_t rng_seed);

/// Pool at iteration 0 from an explicit labeled set; used to start the
/// random-baseline trajectory from the uncertainty trajectory's seed set.
PoolState pool_from_labeled(const SplitIds& ids, const SplitIds& labeled, std::uint64_t rng_seed);

/// The labeled ids a trajectory started from (labeled minus everything
/// acquired in its history).
SplitIds initial_labeled(const PoolState& state);

ThresholdSpec compute_thresholds(std::span<const ScoreRecord> scores, double s_factor);
ThresholdSpec compute_thresholds(Split split, std::span<const double> scores, double s_factor);

/// Scores every labeled id of both splits and builds TR_t and TR_v.
PerSplit<ThresholdSpec> labeled_thresholds(const PoolState& state, const BatchScorer& scorer,
                                           double s_factor,
                                           std::vector<ScoreRecord>* records = nullptr,
                                           Measure measure = Measure::kMutualInformation);

/// True iff eu_img < mean - 1.5 std.
bool discard_rule(double eu_img, double mean, double std);

struct ScanOptions {
  std::optional<int> cap;
  /// Images scored per scorer call; larger batches let the scorer run in
  /// parallel without changing the outcome.
  std::size_t batch_size = 1;
  Measure measure = Measure::kMutualInformation;
};

/// Scans each split's unlabeled ids in the given order. Selected iff
/// eu_img > TR, discarded iff the discard rule fires, and a split's scan
/// stops once `cap` ids have been selected. Advances the state.
SelectionRound scan_ordered(PoolState& state, const PerSplit<ThresholdSpec>& thresholds,
                            const SplitIds& order, const BatchScorer& scorer,
                            const ScanOptions& options, std::uint64_t round_seed = 0);

/// Shuffles each unlabeled pool from `round_seed`, then scan_ordered().
SelectionRound scan_and_select(PoolState& state, const PerSplit<ThresholdSpec>& thresholds,
                               const BatchScorer& scorer, const ScanOptions& options,
                               std::uint64_t round_seed);

/// Seed used by scan_and_select / random_baseline_round for the next round
/// of `state` when callers do not override it.
std::uint64_t next_round_seed(const PoolState& state, SelectionMode mode);

/// Uniformly selects exactly `counts` unlabeled ids per split. No discard.
SelectionRound random_baseline_round(PoolState& state, const PerSplit<std::size_t>& counts,
                                     std::uint64_t round_seed);

/// Count-matched to `paired`, which must be an uncertainty round.
SelectionRound random_baseline_round(PoolState& state, const SelectionRound& paired,
                                     std::uint64_t round_seed);

struct StopConfig {
  /// Stop when the last round selected fewer than this in both splits; 0
  /// disables the rule.
  std::size_t min_selected_per_round = 0;
  /// Stop when the best test meanIoU has not improved by more than
  /// `miou_epsilon` for this many rounds; 0 disables the rule.
  int patience_rounds = 0;
  double miou_epsilon = 0.0;
};

enum class StopReason { kNone, kExhausted, kFewUncertain, kNoImprovement };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::kNone: return "none";
    case StopReason::kExhausted: return "exhausted";
    case StopReason::kFewUncertain: return "few_uncertain";
    case StopReason::kNoImprovement: return "no_improvement";
  }
  return "unknown";
}

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::kNone;
};

/// First matching reason wins: exhausted, few uncertain, no improvement.
/// `test_miou` is the per-iteration test meanIoU sequence, oldest first.
StopDecision check_stop(const PoolState& state, const StopConfig& config,
                        std::span<const double> test_miou);

}  // namespace mcdal
