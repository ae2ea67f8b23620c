#pragma once

// Forward-pass-count stability study: for each T in a grid, repeat the
// dataset-average per-image uncertainty with fresh stochastic passes and
// summarise the spread across repeats.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mcdal/error.hpp"
#include "mcdal/metrics.hpp"

namespace mcdal {

/// {1..10} followed by {20, 30, ..., 200}.
std::vector<int> default_t_grid();

struct StabilityConfig {
  std::vector<int> t_grid = default_t_grid();
  int repeats = 5;
  Measure measure = Measure::kMutualInformation;
  std::vector<std::string> image_ids;
  std::uint64_t rng_seed = 0;
  std::size_t jobs = 1;
};

/// Produces T fresh stochastic passes for an image. `seed` is unique per
/// (config seed, T, repeat, image).
using StackSource = std::function<PredictionStack(const std::string& image_id, int passes,
                                                  int repeat, std::uint64_t seed)>;

struct StabilityRow {
  int passes = 0;
  double mean = 0.0;
  /// Sample standard deviation across repeats; 0 with a single repeat.
  double std = 0.0;
  bool single_sample = false;
  std::vector<double> raw;
};

struct StabilityReport {
  Measure measure = Measure::kMutualInformation;
  std::vector<StabilityRow> rows;

  const StabilityRow& at(int passes) const;
};

/// Failure inside the source or the metrics, tagged with its coordinate.
class StudyError : public Error {
 public:
  StudyError(int passes, int repeat, std::string image_id, const std::string& what)
      : Error(ErrorCode::kSourceFailure,
              "T=" + std::to_string(passes) + " repeat=" + std::to_string(repeat) + " image='" +
                  image_id + "': " + what),
        passes_(passes), repeat_(repeat), image_id_(std::move(image_id)) {}

  int passes() const { return passes_; }
  int repeat() const { return repeat_; }
  const std::string& image_id() const { return image_id_; }

 private:
  int passes_;
  int repeat_;
  std::string image_id_;
};

std::uint64_t stability_seed(std::uint64_t base, int passes, int repeat,
                             const std::string& image_id);

/// Source over recorded stacks: each request draws T of the stored passes
/// without replacement, seeded by the request seed. Requests for more passes
/// than stored fail.
StackSource subsampling_source(std::function<PredictionStack(const std::string&)> load);

StabilityReport run_stability(const StabilityConfig& config, const StackSource& source);

/// Columns T,mean,std.
std::string stability_csv(const StabilityReport& report);

}  // namespace mcdal
