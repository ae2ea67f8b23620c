#include "mcdal/study.hpp"

#include <cmath>
#include <numeric>

#include "mcdal/format.hpp"
#include "mcdal/parallel.hpp"
#include "mcdal/random.hpp"

namespace mcdal {

std::vector<int> default_t_grid() {
  std::vector<int> grid;
  for (int t = 1; t <= 10; ++t) grid.push_back(t);
  for (int t = 20; t <= 200; t += 10) grid.push_back(t);
  return grid;
}

const StabilityRow& StabilityReport::at(int passes) const {
  for (const auto& row : rows) {
    if (row.passes == passes) return row;
  }
  fail(ErrorCode::kInvalidArgument, "T=" + std::to_string(passes) + " not in the report");
}

std::uint64_t stability_seed(std::uint64_t base, int passes, int repeat,
                             const std::string& image_id) {
  return derive_seed(base, {static_cast<std::uint64_t>(passes), static_cast<std::uint64_t>(repeat),
                            stable_hash(image_id)});
}

StackSource subsampling_source(std::function<PredictionStack(const std::string&)> load) {
  return [load = std::move(load)](const std::string& id, int passes, int, std::uint64_t seed) {
    const PredictionStack full = load(id);
    if (passes > full.passes()) {
      fail(ErrorCode::kInvalidArgument, "stack '" + id + "' holds " +
                                            std::to_string(full.passes()) + " passes, " +
                                            std::to_string(passes) + " requested");
    }
    Rng rng(seed);
    const auto picks = sample_indices(static_cast<std::size_t>(full.passes()),
                                      static_cast<std::size_t>(passes), rng);
    const Index C = full.classes();
    PredictionStack out(id, passes, C, full.height(), full.width());
    for (Index t = 0; t < passes; ++t) {
      out.planes().middleRows(t * C, C) =
          full.planes().middleRows(static_cast<Index>(picks[t]) * C, C);
    }
    return out;
  };
}

StabilityReport run_stability(const StabilityConfig& config, const StackSource& source) {
  require(!config.t_grid.empty(), "empty T grid");
  require(config.repeats >= 1, "repeats must be >= 1");
  require(!config.image_ids.empty(), "stability study needs at least one image");
  for (int t : config.t_grid) require(t >= 1, "T values must be >= 1");

  StabilityReport report;
  report.measure = config.measure;
  const auto& ids = config.image_ids;
  std::vector<double> scores(ids.size());

  for (int passes : config.t_grid) {
    StabilityRow row;
    row.passes = passes;
    for (int repeat = 0; repeat < config.repeats; ++repeat) {
      parallel_for(ids.size(), config.jobs, [&](std::size_t i) {
        try {
          const PredictionStack stack =
              source(ids[i], passes, repeat, stability_seed(config.rng_seed, passes, repeat, ids[i]));
          if (stack.passes() != passes) {
            fail(ErrorCode::kSourceFailure, "source returned " + std::to_string(stack.passes()) +
                                                " passes");
          }
          scores[i] = acquisition_score(stack, config.measure);
        } catch (const StudyError&) {
          throw;
        } catch (const std::exception& e) {
          throw StudyError(passes, repeat, ids[i], e.what());
        }
      });
      // fixed reduction order over images
      row.raw.push_back(std::accumulate(scores.begin(), scores.end(), 0.0) /
                        static_cast<double>(scores.size()));
    }
    const double n = static_cast<double>(row.raw.size());
    row.mean = std::accumulate(row.raw.begin(), row.raw.end(), 0.0) / n;
    row.single_sample = row.raw.size() == 1;
    if (!row.single_sample) {
      double ss = 0.0;
      for (double v : row.raw) ss += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(ss / (n - 1.0));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string stability_csv(const StabilityReport& report) {
  std::string out = "T,mean,std\n";
  for (const auto& row : report.rows) {
    out += std::to_string(row.passes) + "," + format_g9(row.mean) + "," + format_g9(row.std) + "\n";
  }
  return out;
}

}  // namespace mcdal
