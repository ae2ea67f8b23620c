#include "mcdal/pool.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "mcdal/error.hpp"
#include "mcdal/random.hpp"

namespace mcdal {

namespace {

constexpr std::uint64_t kSeedStream = 0x5eed;
constexpr std::uint64_t kScanStream = 0x5ca7;
constexpr std::uint64_t kRandomStream = 0xba5e;

std::uint64_t split_tag(Split s) { return static_cast<std::uint64_t>(s); }

void remove_ids(std::vector<std::string>& from, const std::vector<std::string>& a,
                const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return;
  std::unordered_set<std::string> drop(a.begin(), a.end());
  drop.insert(b.begin(), b.end());
  std::erase_if(from, [&](const std::string& id) { return drop.contains(id); });
}

void require_finite_score(double s, const std::string& id) {
  if (!std::isfinite(s)) fail(ErrorCode::kInvalidArgument, "non-finite score for " + id);
}

}  // namespace

SplitIds pool_ids(const Manifest& manifest) {
  return {manifest.ids(DatasetSplit::kTrain), manifest.ids(DatasetSplit::kVal)};
}

void PoolState::check() const {
  if (iteration < 0 || history.size() != static_cast<std::size_t>(iteration)) {
    fail(ErrorCode::kStateInconsistent,
         "history holds " + std::to_string(history.size()) + " rounds at iteration " +
             std::to_string(iteration));
  }
  for (Split s : kPoolSplits) {
    const SplitPool& pool = pools[s];
    std::unordered_set<std::string> seen;
    for (const auto* part : {&pool.labeled, &pool.unlabeled, &pool.discarded}) {
      for (const auto& id : *part) {
        if (!seen.insert(id).second) {
          fail(ErrorCode::kStateInconsistent,
               "id '" + id + "' appears twice in the " + std::string(to_string(s)) + " pools");
        }
      }
    }
  }
}

BatchScorer batched(Scorer scorer) {
  return [scorer = std::move(scorer)](Split split, std::span<const std::string> ids) {
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(scorer(id, split));
    return out;
  };
}

PoolState seed_initial(const SplitIds& ids, double p_percent, std::uint64_t rng_seed) {
  if (!(p_percent > 0.0 && p_percent < 100.0)) {
    fail(ErrorCode::kInvalidArgument, "p_percent must lie in (0, 100)");
  }
  SplitIds labeled;
  for (Split s : kPoolSplits) {
    const auto& all = ids[s];
    if (all.empty()) {
      fail(ErrorCode::kEmptySplit, std::string(to_string(s)) + " split is empty");
    }
    const auto n = all.size();
    auto count = static_cast<std::size_t>(std::ceil(p_percent * static_cast<double>(n) / 100.0));
    count = std::clamp<std::size_t>(count, 1, n);
    Rng rng(derive_seed(rng_seed, {kSeedStream, split_tag(s)}));
    auto picks = sample_indices(n, count, rng);
    std::sort(picks.begin(), picks.end());
    for (auto i : picks) labeled[s].push_back(all[i]);
  }
  return pool_from_labeled(ids, labeled, rng_seed);
}

PoolState pool_from_labeled(const SplitIds& ids, const SplitIds& labeled, std::uint64_t rng_seed) {
  PoolState state;
  state.rng_seed = rng_seed;
  for (Split s : kPoolSplits) {
    std::unordered_set<std::string> chosen(labeled[s].begin(), labeled[s].end());
    std::unordered_set<std::string> known(ids[s].begin(), ids[s].end());
    if (known.size() != ids[s].size()) {
      fail(ErrorCode::kDuplicateId, std::string(to_string(s)) + " split repeats an id");
    }
    for (const auto& id : labeled[s]) {
      if (!known.contains(id)) {
        fail(ErrorCode::kStateInconsistent, "labeled id '" + id + "' is not in the manifest");
      }
    }
    SplitPool& pool = state.pools[s];
    for (const auto& id : ids[s]) {
      (chosen.contains(id) ? pool.labeled : pool.unlabeled).push_back(id);
    }
  }
  state.check();
  return state;
}

SplitIds initial_labeled(const PoolState& state) {
  SplitIds out;
  for (Split s : kPoolSplits) {
    std::size_t acquired = 0;
    for (const auto& round : state.history) acquired += round.splits[s].selected.size();
    const auto& labeled = state.pools[s].labeled;
    if (acquired > labeled.size()) {
      fail(ErrorCode::kStateInconsistent, "history acquired more ids than are labeled");
    }
    out[s].assign(labeled.begin(), labeled.end() - static_cast<std::ptrdiff_t>(acquired));
  }
  return out;
}

ThresholdSpec compute_thresholds(Split split, std::span<const double> scores, double s_factor) {
  if (scores.empty()) fail(ErrorCode::kInvalidArgument, "no labeled scores to threshold");
  if (!std::isfinite(s_factor)) fail(ErrorCode::kInvalidArgument, "S must be finite");
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kInvalidArgument, "non-finite labeled score");
    sum += s;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  ThresholdSpec spec;
  spec.split = split;
  spec.s_factor = s_factor;
  spec.mean = mean;
  spec.std = std::sqrt(ss / n);
  spec.threshold = spec.mean + s_factor * spec.std;
  spec.count = scores.size();
  return spec;
}

ThresholdSpec compute_thresholds(std::span<const ScoreRecord> scores, double s_factor) {
  if (scores.empty()) fail(ErrorCode::kInvalidArgument, "no labeled scores to threshold");
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& r : scores) {
    if (r.split != scores.front().split) {
      fail(ErrorCode::kInvalidArgument, "score records mix train and val");
    }
    values.push_back(r.eu_img);
  }
  return compute_thresholds(scores.front().split, values, s_factor);
}

PerSplit<ThresholdSpec> labeled_thresholds(const PoolState& state, const BatchScorer& scorer,
                                           double s_factor, std::vector<ScoreRecord>* records,
                                           Measure measure) {
  PerSplit<ThresholdSpec> out;
  for (Split s : kPoolSplits) {
    const auto& ids = state.pools[s].labeled;
    const std::vector<double> scores = scorer(s, ids);
    if (scores.size() != ids.size()) {
      fail(ErrorCode::kInvalidArgument, "scorer returned the wrong number of scores");
    }
    out[s] = compute_thresholds(s, scores, s_factor);
    if (records) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        records->push_back({ids[i], s, scores[i], measure, state.iteration});
      }
    }
  }
  return out;
}

bool discard_rule(double eu_img, double mean, double std) { return eu_img < mean - 1.5 * std; }

SelectionRound scan_ordered(PoolState& state, const PerSplit<ThresholdSpec>& thresholds,
                            const SplitIds& order, const BatchScorer& scorer,
                            const ScanOptions& options, std::uint64_t round_seed) {
  if (options.cap && *options.cap <= 0) fail(ErrorCode::kInvalidArgument, "cap must be > 0");
  const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);

  SelectionRound round;
  round.iteration = state.iteration + 1;
  round.mode = SelectionMode::kUncertainty;
  round.measure = options.measure;
  round.cap = options.cap;
  round.seed = round_seed;

  for (Split s : kPoolSplits) {
    const ThresholdSpec& th = thresholds[s];
    if (th.split != s || th.count == 0) {
      fail(ErrorCode::kInvalidArgument,
           "missing threshold for the " + std::string(to_string(s)) + " split");
    }
    SplitPool& pool = state.pools[s];
    const auto& ids = order[s];
    {
      std::unordered_set<std::string> pending(pool.unlabeled.begin(), pool.unlabeled.end());
      if (ids.size() != pool.unlabeled.size() ||
          !std::all_of(ids.begin(), ids.end(),
                       [&](const std::string& id) { return pending.erase(id) == 1; })) {
        fail(ErrorCode::kInvalidArgument, "scan order is not a permutation of the unlabeled pool");
      }
    }

    SplitRound& out = round.splits[s];
    out.threshold = th;
    out.pool_size = ids.size();
    const auto cap_reached = [&] {
      return options.cap && out.selected.size() >= static_cast<std::size_t>(*options.cap);
    };
    for (std::size_t begin = 0; begin < ids.size() && !cap_reached(); begin += batch) {
      const std::size_t len = std::min(batch, ids.size() - begin);
      const std::span<const std::string> chunk(ids.data() + begin, len);
      const std::vector<double> scores = scorer(s, chunk);
      if (scores.size() != len) {
        fail(ErrorCode::kInvalidArgument, "scorer returned the wrong number of scores");
      }
      for (std::size_t i = 0; i < len && !cap_reached(); ++i) {
        require_finite_score(scores[i], chunk[i]);
        ++out.scanned;
        if (scores[i] > th.threshold) {
          out.selected.push_back(chunk[i]);
        } else if (discard_rule(scores[i], th.mean, th.std)) {
          out.discarded.push_back(chunk[i]);
        }
      }
    }
    remove_ids(pool.unlabeled, out.selected, out.discarded);
    pool.labeled.insert(pool.labeled.end(), out.selected.begin(), out.selected.end());
    pool.discarded.insert(pool.discarded.end(), out.discarded.begin(), out.discarded.end());
  }

  state.iteration += 1;
  state.history.push_back(round);
  return round;
}

SelectionRound scan_and_select(PoolState& state, const PerSplit<ThresholdSpec>& thresholds,
                               const BatchScorer& scorer, const ScanOptions& options,
                               std::uint64_t round_seed) {
  SplitIds order;
  for (Split s : kPoolSplits) {
    order[s] = state.pools[s].unlabeled;
    Rng rng(derive_seed(round_seed, {split_tag(s)}));
    shuffle_ids(order[s], rng);
  }
  return scan_ordered(state, thresholds, order, scorer, options, round_seed);
}

std::uint64_t next_round_seed(const PoolState& state, SelectionMode mode) {
  const std::uint64_t stream = mode == SelectionMode::kUncertainty ? kScanStream : kRandomStream;
  return derive_seed(state.rng_seed, {stream, static_cast<std::uint64_t>(state.iteration + 1)});
}

SelectionRound random_baseline_round(PoolState& state, const PerSplit<std::size_t>& counts,
                                     std::uint64_t round_seed) {
  for (Split s : kPoolSplits) {
    if (counts[s] > state.pools[s].unlabeled.size()) {
      fail(ErrorCode::kInvalidArgument,
           "baseline asked for " + std::to_string(counts[s]) + " " + std::string(to_string(s)) +
               " ids but only " + std::to_string(state.pools[s].unlabeled.size()) +
               " are unlabeled");
    }
  }
  SelectionRound round;
  round.iteration = state.iteration + 1;
  round.mode = SelectionMode::kRandom;
  round.seed = round_seed;
  for (Split s : kPoolSplits) {
    SplitPool& pool = state.pools[s];
    SplitRound& out = round.splits[s];
    out.pool_size = pool.unlabeled.size();
    Rng rng(derive_seed(round_seed, {split_tag(s)}));
    for (auto i : sample_indices(pool.unlabeled.size(), counts[s], rng)) {
      out.selected.push_back(pool.unlabeled[i]);
    }
    out.scanned = out.selected.size();
    remove_ids(pool.unlabeled, out.selected, {});
    pool.labeled.insert(pool.labeled.end(), out.selected.begin(), out.selected.end());
  }
  state.iteration += 1;
  state.history.push_back(round);
  return round;
}

SelectionRound random_baseline_round(PoolState& state, const SelectionRound& paired,
                                     std::uint64_t round_seed) {
  if (paired.mode != SelectionMode::kUncertainty) {
    fail(ErrorCode::kInvalidArgument, "baseline must pair with an uncertainty round");
  }
  return random_baseline_round(
      state, PerSplit<std::size_t>{paired.splits.train.selected.size(),
                                   paired.splits.val.selected.size()},
      round_seed);
}

StopDecision check_stop(const PoolState& state, const StopConfig& config,
                        std::span<const double> test_miou) {
  if (state.pools.train.unlabeled.empty() && state.pools.val.unlabeled.empty()) {
    return {true, StopReason::kExhausted};
  }
  if (config.min_selected_per_round > 0 && !state.history.empty()) {
    const auto& last = state.history.back();
    if (last.splits.train.selected.size() < config.min_selected_per_round &&
        last.splits.val.selected.size() < config.min_selected_per_round) {
      return {true, StopReason::kFewUncertain};
    }
  }
  if (config.patience_rounds > 0 && !test_miou.empty()) {
    double best = test_miou.front();
    std::size_t best_at = 0;
    for (std::size_t i = 1; i < test_miou.size(); ++i) {
      if (test_miou[i] > best + config.miou_epsilon) {
        best = test_miou[i];
        best_at = i;
      }
    }
    if (test_miou.size() - 1 - best_at >= static_cast<std::size_t>(config.patience_rounds)) {
      return {true, StopReason::kNoImprovement};
    }
  }
  return {};
}

}  // namespace mcdal
