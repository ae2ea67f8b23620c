#pragma once

// File formats: the MCDS binary tensor container (prediction stacks, label
// maps, per-pixel maps), the JSON manifest, JSON pool-state snapshots and
// the CSV run log. Everything on disk is little-endian and written through
// a temp file plus rename.

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcdal/manifest.hpp"
#include "mcdal/metrics.hpp"
#include "mcdal/pool.hpp"
#include "mcdal/tensor.hpp"

namespace mcdal {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// MCDS tensor container
//
//   offset 0  magic    "MCDS"
//   offset 4  version  u16 LE (= 1)
//   offset 6  dtype    u8   (1 = float32, 2 = uint8)
//   offset 7  ndim     u8
//   offset 8  dims     ndim x u32 LE
//   then      payload  row-major values, little-endian

inline constexpr std::array<char, 4> kTensorMagic = {'M', 'C', 'D', 'S'};
inline constexpr std::uint16_t kTensorVersion = 1;

enum class Dtype : std::uint8_t { kFloat32 = 1, kUInt8 = 2 };

struct RawTensor {
  Dtype dtype = Dtype::kFloat32;
  std::vector<std::uint32_t> dims;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;

  std::uint64_t element_count() const;
  bool operator==(const RawTensor&) const = default;
};

std::string encode_tensor(const RawTensor& tensor);
RawTensor decode_tensor(std::string_view bytes);

RawTensor read_tensor(const fs::path& path);
void write_tensor(const RawTensor& tensor, const fs::path& path);

struct ReadStackOptions {
  bool validate = true;
  bool renormalize = false;
  double sum_tolerance = PredictionStack::kSumTolerance;
};

/// The image id defaults to the file stem.
PredictionStack read_stack(const fs::path& path, const ReadStackOptions& options = {},
                           std::optional<std::string> image_id = std::nullopt);
void write_stack(const PredictionStack& stack, const fs::path& path);

PredictionStack stack_from_tensor(const RawTensor& tensor, std::string image_id,
                                  const ReadStackOptions& options = {});
RawTensor stack_to_tensor(const PredictionStack& stack);

LabelMap read_label_map(const fs::path& path);
void write_label_map(const LabelMap& labels, const fs::path& path);

/// Per-pixel maps are persisted as float32 [H, W].
void write_pixel_map(const PixelMap& map, const fs::path& path);
Map2D<float> read_pixel_map(const fs::path& path);

// ---------------------------------------------------------------------------
// Files and paths

std::string read_file(const fs::path& path);
void write_file_atomic(const fs::path& path, std::string_view bytes);

/// Relative paths resolve against `root`; absolute paths pass through.
fs::path resolve_data_path(const fs::path& root, const std::string& path);

// ---------------------------------------------------------------------------
// Manifest

Manifest parse_manifest(const nlohmann::json& doc);
nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest load_manifest(const fs::path& path);
void save_manifest(const Manifest& manifest, const fs::path& path);

// ---------------------------------------------------------------------------
// Pool state

inline constexpr int kPoolStateVersion = 1;

nlohmann::json round_to_json(const SelectionRound& round);
SelectionRound round_from_json(const nlohmann::json& doc);
nlohmann::json pool_state_to_json(const PoolState& state);
PoolState pool_state_from_json(const nlohmann::json& doc);
void save_pool_state(const PoolState& state, const fs::path& path);
PoolState load_pool_state(const fs::path& path);

// ---------------------------------------------------------------------------
// Run log and score CSV

struct RunLogRecord {
  int iteration = 0;
  SelectionMode mode = SelectionMode::kUncertainty;
  double pct_train = 0.0;
  double pct_val = 0.0;
  std::size_t selected_train = 0;
  std::size_t selected_val = 0;
  std::size_t discarded_train = 0;
  std::size_t discarded_val = 0;
  std::optional<double> tr_train;
  std::optional<double> tr_val;
  std::optional<double> mean_train;
  std::optional<double> std_train;
  std::optional<double> mean_val;
  std::optional<double> std_val;
  std::optional<double> test_miou;
};

/// Record describing `state` after its latest round (or its seed pool when
/// the history is empty).
RunLogRecord run_log_record(const PoolState& state, SelectionMode mode,
                            std::optional<double> test_miou);

std::string run_log_header();
std::string run_log_row(const RunLogRecord& record);

/// Appends rows; writes the header first when the file is new or empty.
void append_run_log(const fs::path& path, const std::vector<RunLogRecord>& records);

struct ScoreRow {
  std::string image_id;
  std::string split;
  Measure measure = Measure::kMutualInformation;
  std::optional<double> eu_img;
  int iteration_scored = 0;
  std::string error;
};

/// Scores use 17 significant digits so they parse back to the same double.
std::string score_csv_header();
std::string score_csv_row(const ScoreRow& row);
/// Parses a document written with score_csv_header() / score_csv_row().
std::vector<ScoreRow> parse_score_csv(std::string_view text);

}  // namespace mcdal
