#include "mcdal/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "mcdal/error.hpp"
#include "mcdal/format.hpp"

namespace mcdal {

using nlohmann::json;

namespace {

constexpr std::size_t kFixedHeader = 8;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::size_t dtype_size(Dtype d) { return d == Dtype::kFloat32 ? 4 : 1; }

}  // namespace

std::uint64_t RawTensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_tensor(const RawTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 255) {
    fail(ErrorCode::kShapeMismatch, "tensor rank must lie in [1, 255]");
  }
  const std::uint64_t n = tensor.element_count();
  const std::size_t have = tensor.dtype == Dtype::kFloat32 ? tensor.f32.size() : tensor.u8.size();
  if (have != n) fail(ErrorCode::kShapeMismatch, "tensor values do not match its dims");

  std::string out(kTensorMagic.begin(), kTensorMagic.end());
  put_u16(out, kTensorVersion);
  out.push_back(static_cast<char>(tensor.dtype));
  out.push_back(static_cast<char>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  out.reserve(out.size() + n * dtype_size(tensor.dtype));
  if (tensor.dtype == Dtype::kFloat32) {
    for (float v : tensor.f32) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    out.append(reinterpret_cast<const char*>(tensor.u8.data()), tensor.u8.size());
  }
  return out;
}

RawTensor decode_tensor(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kTensorMagic.size() ||
      std::memcmp(p, kTensorMagic.data(), kTensorMagic.size()) != 0) {
    if (bytes.size() < kTensorMagic.size() &&
        std::memcmp(p, kTensorMagic.data(), bytes.size()) == 0) {
      fail(ErrorCode::kTruncatedHeader, "file ends inside the magic");
    }
    fail(ErrorCode::kBadMagic, "not an MCDS tensor file");
  }
  if (bytes.size() < kFixedHeader) fail(ErrorCode::kTruncatedHeader, "header is incomplete");
  const std::uint16_t version = static_cast<std::uint16_t>(p[4] | (p[5] << 8));
  if (version != kTensorVersion) {
    fail(ErrorCode::kVersionMismatch, "tensor version " + std::to_string(version) +
                                          ", expected " + std::to_string(kTensorVersion));
  }
  RawTensor tensor;
  if (p[6] != static_cast<unsigned char>(Dtype::kFloat32) &&
      p[6] != static_cast<unsigned char>(Dtype::kUInt8)) {
    fail(ErrorCode::kBadDtype, "unknown dtype code " + std::to_string(p[6]));
  }
  tensor.dtype = static_cast<Dtype>(p[6]);
  const std::size_t ndim = p[7];
  if (ndim == 0) fail(ErrorCode::kShapeMismatch, "tensor rank is zero");
  const std::size_t header = kFixedHeader + 4 * ndim;
  if (bytes.size() < header) fail(ErrorCode::kTruncatedHeader, "dims are incomplete");
  for (std::size_t i = 0; i < ndim; ++i) tensor.dims.push_back(get_u32(p + kFixedHeader + 4 * i));

  const std::uint64_t n = tensor.element_count();
  const std::uint64_t expected = n * dtype_size(tensor.dtype);
  const std::uint64_t payload = bytes.size() - header;
  if (payload < expected) {
    fail(ErrorCode::kTruncatedPayload, "truncated payload: " + std::to_string(payload) +
                                           " of " + std::to_string(expected) + " bytes");
  }
  if (payload > expected) {
    fail(ErrorCode::kTrailingData,
         std::to_string(payload - expected) + " bytes after the payload");
  }
  const unsigned char* data = p + header;
  if (tensor.dtype == Dtype::kFloat32) {
    tensor.f32.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) tensor.f32[i] = std::bit_cast<float>(get_u32(data + 4 * i));
  } else {
    tensor.u8.assign(data, data + n);
  }
  return tensor;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIo, "read failed for " + path.string());
  return std::move(buf).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

fs::path resolve_data_path(const fs::path& root, const std::string& path) {
  const fs::path p(path);
  return p.is_absolute() || root.empty() ? p : root / p;
}

RawTensor read_tensor(const fs::path& path) { return decode_tensor(read_file(path)); }

void write_tensor(const RawTensor& tensor, const fs::path& path) {
  write_file_atomic(path, encode_tensor(tensor));
}

RawTensor stack_to_tensor(const PredictionStack& stack) {
  RawTensor t;
  t.dtype = Dtype::kFloat32;
  t.dims = {static_cast<std::uint32_t>(stack.passes()), static_cast<std::uint32_t>(stack.classes()),
            static_cast<std::uint32_t>(stack.height()), static_cast<std::uint32_t>(stack.width())};
  t.f32.assign(stack.data(), stack.data() + stack.planes().size());
  return t;
}

PredictionStack stack_from_tensor(const RawTensor& tensor, std::string image_id,
                                  const ReadStackOptions& options) {
  if (tensor.dtype != Dtype::kFloat32) fail(ErrorCode::kBadDtype, "prediction stacks are float32");
  if (tensor.dims.size() != 4) {
    fail(ErrorCode::kShapeMismatch, "prediction stacks are [T, C, H, W]");
  }
  const Index T = tensor.dims[0], C = tensor.dims[1], H = tensor.dims[2], W = tensor.dims[3];
  PredictionStack::Planes planes =
      Eigen::Map<const PredictionStack::Planes>(tensor.f32.data(), T * C, H * W);
  PredictionStack stack(std::move(image_id), T, C, H, W, std::move(planes));
  if (options.validate || options.renormalize) {
    stack.validate(options.renormalize, options.sum_tolerance);
  }
  return stack;
}

PredictionStack read_stack(const fs::path& path, const ReadStackOptions& options,
                           std::optional<std::string> image_id) {
  return stack_from_tensor(read_tensor(path), image_id.value_or(path.stem().string()), options);
}

void write_stack(const PredictionStack& stack, const fs::path& path) {
  write_tensor(stack_to_tensor(stack), path);
}

LabelMap read_label_map(const fs::path& path) {
  const RawTensor t = read_tensor(path);
  if (t.dtype != Dtype::kUInt8) fail(ErrorCode::kBadDtype, "label maps are uint8");
  if (t.dims.size() != 2) fail(ErrorCode::kShapeMismatch, "label maps are [H, W]");
  return Eigen::Map<const LabelMap>(t.u8.data(), t.dims[0], t.dims[1]);
}

void write_label_map(const LabelMap& labels, const fs::path& path) {
  RawTensor t;
  t.dtype = Dtype::kUInt8;
  t.dims = {static_cast<std::uint32_t>(labels.rows()), static_cast<std::uint32_t>(labels.cols())};
  t.u8.assign(labels.data(), labels.data() + labels.size());
  write_tensor(t, path);
}

void write_pixel_map(const PixelMap& map, const fs::path& path) {
  RawTensor t;
  t.dtype = Dtype::kFloat32;
  t.dims = {static_cast<std::uint32_t>(map.rows()), static_cast<std::uint32_t>(map.cols())};
  const Map2D<float> values = map.cast<float>();
  t.f32.assign(values.data(), values.data() + values.size());
  write_tensor(t, path);
}

Map2D<float> read_pixel_map(const fs::path& path) {
  const RawTensor t = read_tensor(path);
  if (t.dtype != Dtype::kFloat32 || t.dims.size() != 2) {
    fail(ErrorCode::kShapeMismatch, "pixel maps are float32 [H, W]");
  }
  return Eigen::Map<const Map2D<float>>(t.f32.data(), t.dims[0], t.dims[1]);
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

const std::set<std::string> kEntryFields = {"id", "image_path", "stack_path", "label_path", "meta"};

std::optional<std::string> optional_string(const json& entry, const char* key) {
  if (!entry.contains(key) || entry[key].is_null()) return std::nullopt;
  if (!entry[key].is_string()) fail(ErrorCode::kSchema, std::string(key) + " must be a string");
  return entry[key].get<std::string>();
}

ManifestEntry parse_entry(const json& doc, DatasetSplit split, std::size_t index) {
  const std::string where = std::string(to_string(split)) + "[" + std::to_string(index) + "]";
  if (!doc.is_object()) fail(ErrorCode::kSchema, where + " is not an object");
  if (!doc.contains("id") || !doc["id"].is_string() || doc["id"].get<std::string>().empty()) {
    fail(ErrorCode::kMissingField, where + " has no id");
  }
  ManifestEntry e;
  e.id = doc["id"].get<std::string>();
  e.image_path = optional_string(doc, "image_path");
  e.stack_path = optional_string(doc, "stack_path");
  e.label_path = optional_string(doc, "label_path");
  if (doc.contains("meta")) {
    if (!doc["meta"].is_object()) fail(ErrorCode::kSchema, where + ".meta must be an object");
    e.meta = doc["meta"];
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!kEntryFields.contains(it.key())) e.extra[it.key()] = it.value();
  }
  if (split == DatasetSplit::kTest && !e.label_path) {
    fail(ErrorCode::kMissingField, "test entry '" + e.id + "' has no label_path");
  }
  return e;
}

json entry_to_json(const ManifestEntry& e) {
  json doc = e.extra;
  doc["id"] = e.id;
  if (e.image_path) doc["image_path"] = *e.image_path;
  if (e.stack_path) doc["stack_path"] = *e.stack_path;
  if (e.label_path) doc["label_path"] = *e.label_path;
  doc["meta"] = e.meta;
  return doc;
}

}  // namespace

Manifest parse_manifest(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kSchema, "manifest must be a JSON object");
  if (!doc.contains("schema_version")) fail(ErrorCode::kMissingField, "schema_version");
  if (!doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != Manifest::kSchemaVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         "manifest schema_version " + doc["schema_version"].dump() + " is not supported");
  }
  if (!doc.contains("splits") || !doc["splits"].is_object()) {
    fail(ErrorCode::kMissingField, "splits");
  }
  Manifest m;
  const json& splits = doc["splits"];
  for (DatasetSplit s : {DatasetSplit::kTrain, DatasetSplit::kVal, DatasetSplit::kTest}) {
    const std::string key(to_string(s));
    if (!splits.contains(key)) continue;
    if (!splits[key].is_array()) fail(ErrorCode::kSchema, "splits." + key + " must be an array");
    std::size_t i = 0;
    for (const auto& e : splits[key]) m.split(s).push_back(parse_entry(e, s, i++));
  }
  for (auto it = splits.begin(); it != splits.end(); ++it) {
    if (it.key() != "train" && it.key() != "val" && it.key() != "test") {
      m.extra["splits"][it.key()] = it.value();
    }
  }
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "schema_version" && it.key() != "splits") m.extra[it.key()] = it.value();
  }
  if (m.train.empty()) fail(ErrorCode::kEmptySplit, "train split is empty");

  std::map<std::string, int> seen;
  for (const auto* entries : {&m.train, &m.val, &m.test}) {
    for (const auto& e : *entries) ++seen[e.id];
  }
  std::string dupes;
  for (const auto& [id, count] : seen) {
    if (count > 1) dupes += (dupes.empty() ? "" : ", ") + id;
  }
  if (!dupes.empty()) fail(ErrorCode::kDuplicateId, "duplicate ids: " + dupes);
  return m;
}

json manifest_to_json(const Manifest& m) {
  json doc = m.extra;
  json extra_splits = doc.contains("splits") ? doc["splits"] : json::object();
  doc.erase("splits");
  doc["schema_version"] = m.schema_version;
  json splits = extra_splits;
  for (DatasetSplit s : {DatasetSplit::kTrain, DatasetSplit::kVal, DatasetSplit::kTest}) {
    json arr = json::array();
    for (const auto& e : m.split(s)) arr.push_back(entry_to_json(e));
    splits[std::string(to_string(s))] = std::move(arr);
  }
  doc["splits"] = std::move(splits);
  return doc;
}

Manifest load_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchema, path.string() + ": " + e.what());
  }
  return parse_manifest(doc);
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
  write_file_atomic(path, manifest_to_json(manifest).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Pool state

namespace {

template <typename T>
T get_field(const json& doc, const char* key) {
  if (!doc.contains(key)) fail(ErrorCode::kMissingField, key);
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kSchema, std::string(key) + ": " + e.what());
  }
}

json threshold_to_json(const ThresholdSpec& t) {
  return {{"s_factor", t.s_factor}, {"mean", t.mean},           {"std", t.std},
          {"threshold", t.threshold}, {"count", t.count}};
}

ThresholdSpec threshold_from_json(const json& doc, Split split) {
  ThresholdSpec t;
  t.split = split;
  t.s_factor = get_field<double>(doc, "s_factor");
  t.mean = get_field<double>(doc, "mean");
  t.std = get_field<double>(doc, "std");
  t.threshold = get_field<double>(doc, "threshold");
  t.count = get_field<std::size_t>(doc, "count");
  return t;
}

}  // namespace

json round_to_json(const SelectionRound& round) {
  json splits = json::object();
  for (Split s : kPoolSplits) {
    const SplitRound& r = round.splits[s];
    splits[std::string(to_string(s))] = {
        {"threshold", r.threshold ? threshold_to_json(*r.threshold) : json(nullptr)},
        {"selected", r.selected},
        {"discarded", r.discarded},
        {"scanned", r.scanned},
        {"pool_size", r.pool_size},
    };
  }
  return {
      {"iteration", round.iteration},
      {"mode", std::string(to_string(round.mode))},
      {"measure", round.measure ? json(std::string(to_string(*round.measure))) : json(nullptr)},
      {"cap", round.cap ? json(*round.cap) : json(nullptr)},
      {"seed", round.seed},
      {"splits", std::move(splits)},
  };
}

SelectionRound round_from_json(const json& doc) {
  SelectionRound round;
  round.iteration = get_field<int>(doc, "iteration");
  const auto mode = get_field<std::string>(doc, "mode");
  if (mode == "uncertainty") {
    round.mode = SelectionMode::kUncertainty;
  } else if (mode == "random") {
    round.mode = SelectionMode::kRandom;
  } else {
    fail(ErrorCode::kSchema, "unknown round mode '" + mode + "'");
  }
  if (doc.contains("measure") && !doc["measure"].is_null()) {
    const auto name = doc["measure"].get<std::string>();
    round.measure = parse_measure(name);
    if (!round.measure) fail(ErrorCode::kSchema, "unknown measure '" + name + "'");
  }
  if (doc.contains("cap") && !doc["cap"].is_null()) round.cap = doc["cap"].get<int>();
  round.seed = get_field<std::uint64_t>(doc, "seed");
  const json splits = get_field<json>(doc, "splits");
  for (Split s : kPoolSplits) {
    const json r = get_field<json>(splits, std::string(to_string(s)).c_str());
    SplitRound& out = round.splits[s];
    if (r.contains("threshold") && !r["threshold"].is_null()) {
      out.threshold = threshold_from_json(r["threshold"], s);
    }
    out.selected = get_field<std::vector<std::string>>(r, "selected");
    out.discarded = get_field<std::vector<std::string>>(r, "discarded");
    out.scanned = get_field<std::size_t>(r, "scanned");
    out.pool_size = get_field<std::size_t>(r, "pool_size");
  }
  return round;
}

json pool_state_to_json(const PoolState& state) {
  json pools = json::object();
  for (Split s : kPoolSplits) {
    const SplitPool& p = state.pools[s];
    pools[std::string(to_string(s))] = {
        {"labeled", p.labeled}, {"unlabeled", p.unlabeled}, {"discarded", p.discarded}};
  }
  json history = json::array();
  for (const auto& r : state.history) history.push_back(round_to_json(r));
  return {{"schema_version", kPoolStateVersion},
          {"iteration", state.iteration},
          {"rng_seed", state.rng_seed},
          {"pools", std::move(pools)},
          {"history", std::move(history)}};
}

PoolState pool_state_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::kSchema, "pool state must be a JSON object");
  if (get_field<int>(doc, "schema_version") != kPoolStateVersion) {
    fail(ErrorCode::kUnsupportedVersion, "pool state schema_version is not supported");
  }
  PoolState state;
  state.iteration = get_field<int>(doc, "iteration");
  state.rng_seed = get_field<std::uint64_t>(doc, "rng_seed");
  const json pools = get_field<json>(doc, "pools");
  for (Split s : kPoolSplits) {
    const json p = get_field<json>(pools, std::string(to_string(s)).c_str());
    state.pools[s].labeled = get_field<std::vector<std::string>>(p, "labeled");
    state.pools[s].unlabeled = get_field<std::vector<std::string>>(p, "unlabeled");
    state.pools[s].discarded = get_field<std::vector<std::string>>(p, "discarded");
  }
  for (const auto& r : get_field<json>(doc, "history")) state.history.push_back(round_from_json(r));
  state.check();
  return state;
}

void save_pool_state(const PoolState& state, const fs::path& path) {
  state.check();
  write_file_atomic(path, pool_state_to_json(state).dump(2) + "\n");
}

PoolState load_pool_state(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchema, path.string() + ": " + e.what());
  }
  return pool_state_from_json(doc);
}

// ---------------------------------------------------------------------------
// CSV

RunLogRecord run_log_record(const PoolState& state, SelectionMode mode,
                            std::optional<double> test_miou) {
  RunLogRecord rec;
  rec.iteration = state.iteration;
  rec.mode = mode;
  const auto pct = [](const SplitPool& p) {
    return p.size() ? 100.0 * static_cast<double>(p.labeled.size()) / static_cast<double>(p.size())
                    : 0.0;
  };
  rec.pct_train = pct(state.pools.train);
  rec.pct_val = pct(state.pools.val);
  rec.test_miou = test_miou;
  if (!state.history.empty()) {
    const SelectionRound& r = state.history.back();
    rec.selected_train = r.splits.train.selected.size();
    rec.selected_val = r.splits.val.selected.size();
    rec.discarded_train = r.splits.train.discarded.size();
    rec.discarded_val = r.splits.val.discarded.size();
    if (const auto& t = r.splits.train.threshold) {
      rec.tr_train = t->threshold;
      rec.mean_train = t->mean;
      rec.std_train = t->std;
    }
    if (const auto& t = r.splits.val.threshold) {
      rec.tr_val = t->threshold;
      rec.mean_val = t->mean;
      rec.std_val = t->std;
    }
  }
  return rec;
}

std::string run_log_header() {
  return "iteration,mode,pct_train,pct_val,selected_train,selected_val,discarded_train,"
         "discarded_val,tr_train,tr_val,mean_train,std_train,mean_val,std_val,test_miou";
}

std::string run_log_row(const RunLogRecord& r) {
  std::string out = std::to_string(r.iteration) + "," + std::string(to_string(r.mode));
  for (double v : {r.pct_train, r.pct_val}) out += "," + format_g9(v);
  for (std::size_t v : {r.selected_train, r.selected_val, r.discarded_train, r.discarded_val}) {
    out += "," + std::to_string(v);
  }
  for (const auto* v : {&r.tr_train, &r.tr_val, &r.mean_train, &r.std_train, &r.mean_val,
                        &r.std_val, &r.test_miou}) {
    out += "," + format_g9(*v);
  }
  return out;
}

void append_run_log(const fs::path& path, const std::vector<RunLogRecord>& records) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorCode::kIo, "cannot append to " + path.string());
  if (fresh) out << run_log_header() << "\n";
  for (const auto& r : records) out << run_log_row(r) << "\n";
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

std::string score_csv_header() { return "image_id,split,measure,eu_img,iteration_scored,error"; }

std::string score_csv_row(const ScoreRow& row) {
  std::string error = row.error;
  std::replace(error.begin(), error.end(), ',', ';');
  std::replace(error.begin(), error.end(), '\n', ' ');
  return row.image_id + "," + row.split + "," + std::string(to_string(row.measure)) + "," +
         format_g17(row.eu_img) + "," + std::to_string(row.iteration_scored) + "," + error;
}

std::vector<ScoreRow> parse_score_csv(std::string_view text) {
  std::vector<ScoreRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != score_csv_header()) fail(ErrorCode::kSchema, "unexpected score CSV header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 5; ++i) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fail(ErrorCode::kSchema, "score CSV line " + std::to_string(line_no) + " has too few fields");
      }
      fields.emplace_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    fields.emplace_back(line.substr(start));
    ScoreRow row;
    row.image_id = fields[0];
    row.split = fields[1];
    const auto measure = parse_measure(fields[2]);
    if (!measure) fail(ErrorCode::kSchema, "unknown measure '" + fields[2] + "' in score CSV");
    row.measure = *measure;
    try {
      if (!fields[3].empty()) row.eu_img = std::stod(fields[3]);
      row.iteration_scored = std::stoi(fields[4]);
    } catch (const std::exception&) {
      fail(ErrorCode::kSchema, "score CSV line " + std::to_string(line_no) + " has a bad number");
    }
    row.error = fields[5];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mcdal
