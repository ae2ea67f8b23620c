#pragma once

// Synthetic segmentation world and a stochastic mock predictor whose pass-to-
// pass spread shrinks as it sees more images of a pattern family. Drives the
// full uncertainty-vs-random acquisition experiment without a network.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcdal/io.hpp"
#include "mcdal/manifest.hpp"
#include "mcdal/metrics.hpp"
#include "mcdal/pool.hpp"
#include "mcdal/study.hpp"
#include "mcdal/tensor.hpp"

namespace mcdal {

enum class PatternKind {
  kStriped,   // background with one slanted band
  kLayered,   // three horizontal layers with wavy boundaries
  kBlob,      // band plus a few discs
  kSpeckle,   // many small discs plus one larger disc
};

struct PatternFamily {
  std::string name;
  PatternKind kind = PatternKind::kStriped;
  /// Classes painted by the template: background first.
  std::vector<int> classes;
  double frequency = 0.0;
};

struct SyntheticWorld {
  int classes = 5;
  std::vector<PatternFamily> families;
  int height = 64;
  int width = 64;
  /// Log-normal spread of per-image quality; the predictor's noise scale is
  /// multiplied by each image's quality. 0 makes all images equally hard.
  double quality_spread = 0.35;
  std::uint64_t seed = 0;

  /// Frequencies sum to one, every class reachable, templates well formed.
  void check() const;
  /// Families rarer than a uniform share (frequency < 1 / family count).
  std::vector<bool> rare_families() const;
};

/// Five classes over four unbalanced families; class presence falls from
/// ~100% for the background to under 10% for the rarest class.
SyntheticWorld default_world(std::uint64_t seed, int height = 64, int width = 64);

struct SyntheticImage {
  std::string id;
  DatasetSplit split = DatasetSplit::kTrain;
  int family = 0;
  std::uint64_t index = 0;
  double quality = 1.0;
  LabelMap labels;
};

struct SyntheticDataset {
  SyntheticWorld world;
  Manifest manifest;
  std::vector<SyntheticImage> images;

  const SyntheticImage& image(const std::string& id) const;
  std::vector<int> family_histogram(std::span<const std::string> ids) const;

  std::unordered_map<std::string, std::size_t> by_id;
};

/// Deterministic in the world seed. Manifest entries carry label_path
/// "labels/<id>.mcds" and the family in meta.
SyntheticDataset generate_dataset(const SyntheticWorld& world, std::size_t n_train,
                                  std::size_t n_val, std::size_t n_test);

/// Label maps under <dir>/labels plus <dir>/manifest.json.
void write_dataset(const SyntheticDataset& dataset, const fs::path& dir);

struct PredictorParams {
  double noise_floor = 0.3;
  double noise_gain = 30.0;
  /// Logit advantage of the true class.
  double margin = 3.0;
};

/// Logits are margin * onehot(true class) + sigma * (bias + pass noise),
/// where bias is a fixed per-image Gaussian field (the model's systematic
/// error), pass noise is fresh per forward pass (dropout), and
/// sigma = noise_floor + noise_gain / (1 + familiarity(family)).
class MockPredictor {
 public:
  MockPredictor(const SyntheticWorld& world, PredictorParams params, std::uint64_t seed);

  /// "Training": familiarity becomes the family histogram of `labeled`.
  void fit(const SyntheticDataset& dataset, std::span<const std::string> labeled);
  void set_familiarity(std::vector<int> familiarity);
  const std::vector<int>& familiarity() const { return familiarity_; }

  double noise_scale(int family) const;

  /// T stochastic passes; `pass_seed` selects the dropout noise.
  PredictionStack forward(const SyntheticImage& image, int passes, std::uint64_t pass_seed) const;

  /// Deterministic forward pass (no pass noise), argmax per pixel.
  ClassMap predict(const SyntheticImage& image) const;

 private:
  Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> base_logits(
      const SyntheticImage& image, float sigma) const;

  int classes_;
  PredictorParams params_;
  std::uint64_t seed_;
  std::vector<int> familiarity_;
};

/// Test meanIoU of the predictor's deterministic output.
double evaluate_miou(const MockPredictor& predictor, const SyntheticDataset& dataset,
                     std::size_t jobs = 1);

StackSource mock_stack_source(const SyntheticDataset& dataset, const MockPredictor& predictor);

struct ExperimentConfig {
  SyntheticWorld world = default_world(0);
  std::size_t n_train = 2000;
  std::size_t n_val = 600;
  std::size_t n_test = 400;
  double p_percent = 5.0;
  double s_factor = 1.5;
  /// Per-split selection cap per round (2.5% of the default train split).
  std::optional<int> cap = 50;
  Measure measure = Measure::kMutualInformation;
  int passes = 50;
  int rounds = 8;
  StopConfig stop = {.min_selected_per_round = 1};
  PredictorParams predictor;
  std::uint64_t pool_seed = 1;
  std::uint64_t baseline_seed = 2;
  std::uint64_t predictor_seed = 3;
  std::size_t jobs = 1;
};

struct ExperimentRound {
  SelectionRound uncertainty;
  SelectionRound random;
  /// Rare-family ids the uncertainty round selected, and the count expected
  /// if it had sampled its unlabeled pools at their family frequencies.
  std::size_t rare_selected = 0;
  double rare_expected = 0.0;
  std::vector<int> selected_families;
};

struct ExperimentLog {
  std::vector<RunLogRecord> records;
  std::vector<ExperimentRound> rounds;
  StopReason stop = StopReason::kNone;
  double final_miou_uncertainty = 0.0;
  double final_miou_random = 0.0;
  PoolState uncertainty_state;
  PoolState random_state;

  std::size_t rare_selected() const;
  double rare_expected() const;
};

/// Derives the world, pool, baseline and predictor seeds from one seed.
ExperimentConfig seeded_experiment(ExperimentConfig config, std::uint64_t seed);

/// Runs the paired trajectories (models A and B) from one shared seed pool.
ExperimentLog run_experiment(const ExperimentConfig& config);

}  // namespace mcdal
