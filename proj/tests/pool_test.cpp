#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "mcdal/error.hpp"
#include "mcdal/pool.hpp"
#include "pool_properties.hpp"

using namespace mcdal;

namespace {

SplitIds make_ids(int n_train, int n_val) {
  SplitIds ids;
  for (int i = 0; i < n_train; ++i) ids.train.push_back("t" + std::to_string(i));
  for (int i = 0; i < n_val; ++i) ids.val.push_back("v" + std::to_string(i));
  return ids;
}

BatchScorer table(std::map<std::string, double> scores) {
  return batched([scores = std::move(scores)](const std::string& id, Split) { return scores.at(id); });
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an mcdal::Error";
  return ErrorCode::kSchema;
}

PerSplit<ThresholdSpec> fixed_thresholds(double tr, double mean, double std) {
  PerSplit<ThresholdSpec> th;
  for (Split s : kPoolSplits) {
    th[s] = {.split = s, .s_factor = 0.0, .mean = mean, .std = std, .threshold = tr, .count = 1};
  }
  return th;
}

}  // namespace

TEST(SeedInitial, CeilOfPercentage) {
  const PoolState s = seed_initial(make_ids(367, 40), 10.0, 7);
  EXPECT_EQ(s.pools.train.labeled.size(), 37u);
  EXPECT_EQ(s.pools.train.unlabeled.size(), 330u);
  EXPECT_EQ(s.pools.val.labeled.size(), 4u);
  EXPECT_EQ(s.iteration, 0);
  EXPECT_TRUE(s.history.empty());
}

TEST(SeedInitial, NeverSeedsZero) {
  const PoolState s = seed_initial(make_ids(3, 1), 0.5, 1);
  EXPECT_EQ(s.pools.train.labeled.size(), 1u);
  EXPECT_EQ(s.pools.val.labeled.size(), 1u);
  EXPECT_TRUE(s.pools.val.unlabeled.empty());
}

TEST(SeedInitial, WholeSplitLeavesUnlabeledEmpty) {
  const PoolState s = seed_initial(make_ids(3, 2), 90.0, 3);
  EXPECT_EQ(s.pools.train.labeled.size(), 3u);
  EXPECT_TRUE(s.pools.train.unlabeled.empty());
  EXPECT_TRUE(s.pools.val.unlabeled.empty());
}

TEST(SeedInitial, DeterministicAndSeedSensitive) {
  const SplitIds ids = make_ids(200, 50);
  EXPECT_EQ(seed_initial(ids, 5, 11), seed_initial(ids, 5, 11));
  EXPECT_NE(seed_initial(ids, 5, 11).pools, seed_initial(ids, 5, 12).pools);
}

TEST(SeedInitial, KeepsManifestOrder) {
  const SplitIds ids = make_ids(50, 20);
  const PoolState s = seed_initial(ids, 30, 5);
  for (Split sp : kPoolSplits) {
    for (const auto* part : {&s.pools[sp].labeled, &s.pools[sp].unlabeled}) {
      auto pos = [&](const std::string& id) {
        return std::find(ids[sp].begin(), ids[sp].end(), id) - ids[sp].begin();
      };
      for (std::size_t i = 1; i < part->size(); ++i) {
        EXPECT_LT(pos((*part)[i - 1]), pos((*part)[i]));
      }
    }
  }
}

TEST(SeedInitial, Errors) {
  const SplitIds ids = make_ids(10, 10);
  EXPECT_EQ(code_of([&] { seed_initial(ids, 0.0, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { seed_initial(ids, 100.0, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { seed_initial(ids, -3.0, 1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { seed_initial(make_ids(10, 0), 5.0, 1); }), ErrorCode::kEmptySplit);
  EXPECT_EQ(code_of([&] { seed_initial(make_ids(0, 4), 5.0, 1); }), ErrorCode::kEmptySplit);
}

TEST(Thresholds, Examples) {
  const std::vector<double> scores = {0.1, 0.2, 0.3};
  EXPECT_NEAR(compute_thresholds(Split::kTrain, scores, 0.0).threshold, 0.2, 1e-15);
  const ThresholdSpec one = compute_thresholds(Split::kTrain, scores, 1.0);
  EXPECT_NEAR(one.threshold, 0.2816496580927726, 1e-15);
  EXPECT_NEAR(one.std, std::sqrt(0.02 / 3.0), 1e-15);
  EXPECT_EQ(one.threshold, one.mean + one.s_factor * one.std);
  EXPECT_EQ(one.count, 3u);

  const std::vector<double> single = {0.5};
  for (double s : {0.0, 1.5, 42.0}) {
    EXPECT_EQ(compute_thresholds(Split::kVal, single, s).threshold, 0.5);
  }
}

TEST(Thresholds, FromRecordsAndErrors) {
  std::vector<ScoreRecord> recs = {{"a", Split::kVal, 0.1}, {"b", Split::kVal, 0.3}};
  const ThresholdSpec th = compute_thresholds(recs, 1.0);
  EXPECT_EQ(th.split, Split::kVal);
  EXPECT_NEAR(th.threshold, 0.3, 1e-15);

  EXPECT_THROW(compute_thresholds(Split::kTrain, std::vector<double>{}, 1.0), Error);
  EXPECT_THROW(compute_thresholds(std::vector<ScoreRecord>{}, 1.0), Error);
  recs.push_back({"c", Split::kTrain, 0.2});
  EXPECT_THROW(compute_thresholds(recs, 1.0), Error);
}

TEST(Thresholds, BiggerSQueriesFewer) {
  const std::vector<double> scores = {0.1, 0.4, 0.2, 0.7};
  double last = -1.0;
  for (double s : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const double tr = compute_thresholds(Split::kTrain, scores, s).threshold;
    EXPECT_GT(tr, last);
    last = tr;
  }
}

TEST(DiscardRule, Examples) {
  EXPECT_TRUE(discard_rule(0.05, 0.4, 0.2));
  EXPECT_FALSE(discard_rule(0.1, 0.4, 0.2));
  EXPECT_FALSE(discard_rule(0.3, 0.3, 0.0));
  EXPECT_FALSE(discard_rule(0.4 - 1.5 * 0.2, 0.4, 0.2));
}

TEST(Scan, NothingAboveOrBelow) {
  SplitIds ids = make_ids(6, 2);
  PoolState s = pool_from_labeled(ids, SplitIds{{"t0"}, {"v0"}}, 1);
  std::map<std::string, double> scores;
  for (const auto& id : ids.train) scores[id] = 0.5;
  for (const auto& id : ids.val) scores[id] = 0.5;
  const SelectionRound r =
      scan_and_select(s, fixed_thresholds(0.8, 0.5, 0.1), table(scores), {}, 9);
  EXPECT_TRUE(r.splits.train.selected.empty());
  EXPECT_TRUE(r.splits.train.discarded.empty());
  EXPECT_EQ(r.splits.train.scanned, 5u);
  EXPECT_EQ(r.splits.train.pool_size, 5u);
  EXPECT_EQ(r.splits.val.scanned, 1u);
  EXPECT_EQ(s.iteration, 1);
  EXPECT_EQ(s.history.size(), 1u);
}

TEST(Scan, HandTraceWithCap) {
  SplitIds ids{{"seed", "a", "b", "c"}, {"vseed"}};
  PoolState s = pool_from_labeled(ids, SplitIds{{"seed"}, {"vseed"}}, 1);
  ScanOptions opt;
  opt.cap = 1;
  const SplitIds order{{"a", "b", "c"}, {}};
  const SelectionRound r = scan_ordered(s, fixed_thresholds(0.8, 0.5, 0.1), order,
                                        table({{"a", 0.9}, {"b", 0.5}, {"c", 0.95}}), opt);
  EXPECT_EQ(r.splits.train.selected, std::vector<std::string>{"a"});
  EXPECT_EQ(r.splits.train.scanned, 1u);
  EXPECT_EQ(s.pools.train.labeled, (std::vector<std::string>{"seed", "a"}));
  EXPECT_EQ(s.pools.train.unlabeled, (std::vector<std::string>{"b", "c"}));
}

TEST(Scan, SelectsAndDiscardsStrictly) {
  SplitIds ids{{"seed", "hi", "at", "lo", "edge"}, {"vseed"}};
  PoolState s = pool_from_labeled(ids, SplitIds{{"seed"}, {"vseed"}}, 1);
  // TR = 0.6, discard line = 0.4 - 1.5 * 0.1 = 0.25
  const double line = 0.4 - 1.5 * 0.1;
  const SplitIds order{{"hi", "at", "lo", "edge"}, {}};
  const SelectionRound r = scan_ordered(
      s, fixed_thresholds(0.6, 0.4, 0.1), order,
      table({{"hi", 0.61}, {"at", 0.6}, {"lo", 0.1}, {"edge", line}}), {});
  EXPECT_EQ(r.splits.train.selected, std::vector<std::string>{"hi"});
  EXPECT_EQ(r.splits.train.discarded, std::vector<std::string>{"lo"});
  EXPECT_EQ(r.splits.train.scanned, 4u);
  EXPECT_EQ(s.pools.train.discarded, std::vector<std::string>{"lo"});
  EXPECT_EQ(s.pools.train.unlabeled, (std::vector<std::string>{"at", "edge"}));
}

TEST(Scan, BatchSizeDoesNotChangeOutcome) {
  const SplitIds ids = make_ids(80, 30);
  int iteration = 0;
  const BatchScorer scorer = poolprops::synthetic_scorer(5, iteration);
  PoolState base = seed_initial(ids, 10, 4);
  const auto th = labeled_thresholds(base, scorer, 0.5);
  std::optional<SelectionRound> first;
  for (std::size_t batch : {1u, 4u, 64u}) {
    PoolState s = base;
    ScanOptions opt;
    opt.cap = 5;
    opt.batch_size = batch;
    const SelectionRound r = scan_and_select(s, th, scorer, opt, 17);
    if (!first) first = r;
    EXPECT_EQ(r, *first);
  }
}

TEST(Scan, Errors) {
  SplitIds ids = make_ids(4, 2);
  PoolState s = seed_initial(ids, 25, 1);
  const BatchScorer scorer = batched([](const std::string&, Split) { return 0.5; });
  ScanOptions zero;
  zero.cap = 0;
  EXPECT_THROW(scan_and_select(s, fixed_thresholds(0.8, 0.5, 0.1), scorer, zero, 1), Error);
  PerSplit<ThresholdSpec> missing = fixed_thresholds(0.8, 0.5, 0.1);
  missing.val = {};
  EXPECT_THROW(scan_and_select(s, missing, scorer, {}, 1), Error);
  SplitIds bad_order{{"t0"}, {}};
  EXPECT_THROW(scan_ordered(s, fixed_thresholds(0.8, 0.5, 0.1), bad_order, scorer, {}), Error);
  EXPECT_EQ(s.iteration, 0);
}

TEST(Baseline, MatchesPairedCounts) {
  const SplitIds ids = make_ids(40, 10);
  PoolState b = seed_initial(ids, 10, 3);
  const SelectionRound r = random_baseline_round(b, PerSplit<std::size_t>{5, 2}, 99);
  EXPECT_EQ(r.mode, SelectionMode::kRandom);
  EXPECT_EQ(r.splits.train.selected.size(), 5u);
  EXPECT_EQ(r.splits.val.selected.size(), 2u);
  EXPECT_TRUE(r.splits.train.discarded.empty());
  EXPECT_FALSE(r.splits.train.threshold.has_value());
  EXPECT_EQ(b.pools.train.labeled.size(), 9u);

  PoolState again = seed_initial(ids, 10, 3);
  EXPECT_EQ(random_baseline_round(again, PerSplit<std::size_t>{5, 2}, 99), r);
}

TEST(Baseline, ZeroStillAdvances) {
  PoolState b = seed_initial(make_ids(10, 10), 10, 3);
  random_baseline_round(b, PerSplit<std::size_t>{0, 0}, 1);
  EXPECT_EQ(b.iteration, 1);
  EXPECT_EQ(b.pools.train.unlabeled.size(), 9u);
}

TEST(Baseline, Errors) {
  PoolState b = seed_initial(make_ids(10, 10), 10, 3);
  EXPECT_THROW(random_baseline_round(b, PerSplit<std::size_t>{10, 0}, 1), Error);
  SelectionRound not_uncertainty;
  not_uncertainty.mode = SelectionMode::kRandom;
  EXPECT_THROW(random_baseline_round(b, not_uncertainty, 1), Error);
  EXPECT_EQ(b.iteration, 0);
}

TEST(Baseline, InitialLabeledRecovered) {
  const SplitIds ids = make_ids(30, 12);
  PoolState a = seed_initial(ids, 20, 8);
  const SplitIds seed_set{a.pools.train.labeled, a.pools.val.labeled};
  random_baseline_round(a, PerSplit<std::size_t>{3, 1}, 5);
  EXPECT_EQ(initial_labeled(a), seed_set);
  EXPECT_EQ(pool_from_labeled(ids, seed_set, 0).pools.train.labeled, seed_set.train);
}

TEST(CheckStop, Examples) {
  PoolState s = seed_initial(make_ids(4, 4), 50, 1);
  StopConfig cfg{.min_selected_per_round = 2, .patience_rounds = 2, .miou_epsilon = 0.005};
  EXPECT_FALSE(check_stop(s, cfg, {}).stop);

  random_baseline_round(s, PerSplit<std::size_t>{1, 1}, 2);
  const StopDecision few = check_stop(s, cfg, {});
  EXPECT_TRUE(few.stop);
  EXPECT_EQ(few.reason, StopReason::kFewUncertain);

  StopConfig patience{.patience_rounds = 2, .miou_epsilon = 0.005};
  const std::vector<double> flat = {0.60, 0.601, 0.602};
  EXPECT_EQ(check_stop(s, patience, flat).reason, StopReason::kNoImprovement);
  const std::vector<double> rising = {0.60, 0.61, 0.62};
  EXPECT_FALSE(check_stop(s, patience, rising).stop);
  const std::vector<double> short_run = {0.60, 0.601};
  EXPECT_FALSE(check_stop(s, patience, short_run).stop);

  random_baseline_round(s, PerSplit<std::size_t>{1, 1}, 3);
  const StopDecision done = check_stop(s, cfg, flat);
  EXPECT_EQ(done.reason, StopReason::kExhausted);
}

TEST(PoolState, CheckRejectsOverlap) {
  PoolState s = seed_initial(make_ids(4, 4), 50, 1);
  s.check();
  s.pools.train.discarded.push_back(s.pools.train.labeled.front());
  EXPECT_THROW(s.check(), Error);
}

TEST(PoolProperties, RandomTrajectories) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const poolprops::Report rep = poolprops::check(seed);
    EXPECT_TRUE(rep.conservation) << rep.detail;
    EXPECT_TRUE(rep.monotonic) << rep.detail;
    EXPECT_TRUE(rep.pairing) << rep.detail;
    EXPECT_TRUE(rep.discard_final) << rep.detail;
    EXPECT_TRUE(rep.deterministic) << rep.detail;
    EXPECT_TRUE(rep.resume_equivalent) << rep.detail;
    if (!rep.ok() && ++failures > 5) break;
  }
}
