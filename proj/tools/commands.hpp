#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcdal::cli {

/// Bad flags or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  /// Empty: MCDAL_DATA_ROOT, then the manifest's directory.
  std::string data_root;
  bool json = false;
  std::size_t jobs = 1;
  bool force = false;
  std::vector<std::string> argv;
};

struct UncertaintyOptions {
  std::string manifest;
  std::string out;
  std::string measure = "mutual-information";
  std::optional<int> passes;
  std::vector<std::string> splits = {"train", "val"};
  int iteration = 0;
  bool pixel_maps = false;
  bool strict = false;
  bool renormalize = false;
};

struct SelectOptions {
  std::string manifest;
  std::string state;
  std::string state_out;
  std::string out;
  std::string scores;
  std::string measure = "mutual-information";
  bool init = false;
  std::optional<double> p_percent;
  std::uint64_t seed = 0;
  std::optional<double> s_factor;
  std::optional<int> cap;
};

struct BaselineOptions {
  std::string manifest;
  std::string state;
  std::string state_out;
  std::string paired;
  std::string out;
  bool init = false;
  std::uint64_t seed = 0;
};

struct EvaluateOptions {
  std::string manifest;
  std::string out;
  std::string predictions;
  bool from_stacks = false;
  int classes = 0;
  std::optional<int> ignore_label;
  std::string split = "test";
  int iteration = 0;
  double pct_data = 0.0;
};

struct StabilityOptions {
  std::string out;
  std::string source = "sim";
  std::string manifest;
  std::string measure = "mutual-information";
  std::vector<int> t_grid;
  int repeats = 5;
  std::uint64_t seed = 0;
  int images = 20;
  int size = 64;
};

struct SimulateOptions {
  std::string out;
  std::string measure = "mutual-information";
  std::uint64_t seed = 0;
  int size = 64;
  std::size_t n_train = 2000;
  std::size_t n_val = 600;
  std::size_t n_test = 400;
  double p_percent = 5.0;
  double s_factor = 1.5;
  int cap = 50;
  int passes = 50;
  int rounds = 8;
  std::size_t min_selected = 1;
  int patience = 0;
  bool write_dataset = false;
};

int run_uncertainty(const UncertaintyOptions& options, const Common& common);
int run_select(const SelectOptions& options, const Common& common);
int run_baseline(const BaselineOptions& options, const Common& common);
int run_evaluate(const EvaluateOptions& options, const Common& common);
int run_stability(const StabilityOptions& options, const Common& common);
int run_simulate(const SimulateOptions& options, const Common& common);

}  // namespace mcdal::cli
