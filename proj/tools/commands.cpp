#include "commands.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mcdal/eval.hpp"
#include "mcdal/format.hpp"
#include "mcdal/io.hpp"
#include "mcdal/metrics.hpp"
#include "mcdal/parallel.hpp"
#include "mcdal/pool.hpp"
#include "mcdal/random.hpp"
#include "mcdal/sim.hpp"
#include "mcdal/study.hpp"

#ifndef MCDAL_VERSION
#define MCDAL_VERSION "0.0.0"
#endif

namespace mcdal::cli {

namespace {

using json = nlohmann::json;

Measure measure_arg(const std::string& name) {
  if (auto m = parse_measure(name)) return *m;
  throw UsageError("unknown measure '" + name +
                   "' (expected variation-ratio, total-variance, predictive-entropy, "
                   "mutual-information or margin)");
}

DatasetSplit split_arg(const std::string& name) {
  if (name == "train") return DatasetSplit::kTrain;
  if (name == "val") return DatasetSplit::kVal;
  if (name == "test") return DatasetSplit::kTest;
  throw UsageError("unknown split '" + name + "' (expected train, val or test)");
}

void need(bool present, const std::string& what) {
  if (!present) throw UsageError(what);
}

fs::path data_root(const Common& common, const fs::path& manifest) {
  if (!common.data_root.empty()) return common.data_root;
  if (const char* env = std::getenv("MCDAL_DATA_ROOT"); env != nullptr && *env != '\0') return env;
  return manifest.parent_path();
}

/// Checks every path a run will write before doing any work.
void guard_outputs(const std::vector<fs::path>& paths, const Common& common) {
  for (const auto& p : paths) {
    if (!common.force && fs::exists(p)) {
      throw UsageError("refusing to overwrite " + p.string() + " (pass --force)");
    }
  }
  for (const auto& p : paths) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json versions() {
  return {{"mcdal", MCDAL_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." +
                        std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)},
          {"compiler", __VERSION__}};
}

/// Config, seeds and versions next to the outputs. The timestamp lives only
/// here so the outputs themselves stay byte-identical across reruns.
void write_repro(const fs::path& path, std::string_view command, const Common& common,
                 json config, json seeds) {
  json doc = {{"subcommand", command},
              {"argv", common.argv},
              {"config", std::move(config)},
              {"seeds", std::move(seeds)},
              {"jobs", common.jobs},
              {"versions", versions()},
              {"created_utc", utc_now()}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

void report(const Common& common, const json& summary, const std::string& text) {
  if (common.json) {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

std::string iteration_tag(int iteration) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", iteration);
  return buf;
}

json threshold_json(const std::optional<ThresholdSpec>& t) {
  if (!t) return nullptr;
  return {{"threshold", t->threshold}, {"mean", t->mean}, {"std", t->std}, {"count", t->count}};
}

json round_summary(const SelectionRound& round, const PoolState& state) {
  json splits = json::object();
  for (Split s : kPoolSplits) {
    const auto& r = round.splits[s];
    splits[std::string(to_string(s))] = {{"selected", r.selected.size()},
                                         {"discarded", r.discarded.size()},
                                         {"scanned", r.scanned},
                                         {"labeled", state.pools[s].labeled.size()},
                                         {"unlabeled", state.pools[s].unlabeled.size()},
                                         {"threshold", threshold_json(r.threshold)}};
  }
  return {{"iteration", round.iteration}, {"mode", to_string(round.mode)}, {"splits", splits}};
}

std::string pool_line(const PoolState& state) {
  std::ostringstream out;
  for (Split s : kPoolSplits) {
    const auto& p = state.pools[s];
    out << "  " << to_string(s) << ": labeled " << p.labeled.size() << ", unlabeled "
        << p.unlabeled.size() << ", discarded " << p.discarded.size() << "\n";
  }
  return out.str();
}

}  // namespace

int run_uncertainty(const UncertaintyOptions& options, const Common& common) {
  const Measure measure = measure_arg(options.measure);
  if (options.passes && *options.passes < 1) throw UsageError("--passes must be >= 1");
  std::vector<DatasetSplit> splits;
  for (const auto& s : options.splits) splits.push_back(split_arg(s));

  const fs::path out_dir = options.out;
  const fs::path csv_path = out_dir / "scores.csv";
  const fs::path repro_path = out_dir / "uncertainty.repro.json";
  std::vector<fs::path> outputs = {csv_path, repro_path};
  if (options.pixel_maps) outputs.push_back(out_dir / "maps");
  guard_outputs(outputs, common);

  const Manifest manifest = load_manifest(options.manifest);
  const fs::path root = data_root(common, options.manifest);
  std::vector<std::pair<const ManifestEntry*, DatasetSplit>> entries;
  for (DatasetSplit s : splits) {
    for (const auto& e : manifest.split(s)) entries.emplace_back(&e, s);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first->id < b.first->id; });

  ReadStackOptions read_options;
  read_options.renormalize = options.renormalize;
  std::vector<ScoreRow> rows(entries.size());
  parallel_for(entries.size(), common.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = *entries[i].first;
    ScoreRow& row = rows[i];
    row.image_id = entry.id;
    row.split = std::string(to_string(entries[i].second));
    row.measure = measure;
    row.iteration_scored = options.iteration;
    try {
      if (!entry.stack_path) fail(ErrorCode::kMissingField, "entry has no stack_path");
      PredictionStack stack =
          read_stack(resolve_data_path(root, *entry.stack_path), read_options, entry.id);
      if (options.passes) {
        if (*options.passes > stack.passes()) {
          fail(ErrorCode::kInvalidArgument, "stack holds " + std::to_string(stack.passes()) +
                                                " passes, " + std::to_string(*options.passes) +
                                                " requested");
        }
        stack = stack.first_passes(*options.passes);
      }
      const UncertaintyScores scores = acquisition_map(stack, measure);
      row.eu_img = scores.per_image;
      if (options.pixel_maps) {
        write_pixel_map(scores.per_pixel, out_dir / "maps" / (entry.id + ".mcds"));
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  std::string csv = score_csv_header() + "\n";
  std::size_t failed = 0;
  double total = 0.0;
  for (const auto& row : rows) {
    csv += score_csv_row(row) + "\n";
    if (row.eu_img) {
      total += *row.eu_img;
    } else {
      ++failed;
    }
  }
  write_file_atomic(csv_path, csv);
  write_repro(repro_path, "uncertainty", common,
              {{"manifest", options.manifest},
               {"data_root", root.string()},
               {"measure", to_string(measure)},
               {"passes", options.passes ? json(*options.passes) : json(nullptr)},
               {"splits", options.splits},
               {"iteration", options.iteration},
               {"pixel_maps", options.pixel_maps},
               {"renormalize", options.renormalize}},
              json::object());

  const std::size_t scored = rows.size() - failed;
  json summary = {{"images", rows.size()},
                  {"scored", scored},
                  {"failed", failed},
                  {"measure", to_string(measure)},
                  {"mean_score", scored > 0 ? json(total / static_cast<double>(scored)) : json(nullptr)},
                  {"scores", csv_path.string()}};
  std::ostringstream text;
  text << "scored " << scored << " of " << rows.size() << " images (" << to_string(measure)
       << ") -> " << csv_path.string() << "\n";
  for (const auto& row : rows) {
    if (!row.error.empty()) text << "  " << row.image_id << ": " << row.error << "\n";
  }
  report(common, summary, text.str());

  if (rows.empty()) return 0;
  if (failed == rows.size() || (options.strict && failed > 0)) return 1;
  return 0;
}

int run_select(const SelectOptions& options, const Common& common) {
  need(!options.state.empty(), "--state is required");
  need(!options.out.empty(), "--out is required");
  const Measure measure = measure_arg(options.measure);
  const fs::path out_dir = options.out;

  if (options.init) {
    need(!options.manifest.empty(), "--init needs --manifest");
    need(options.p_percent.has_value(), "--init needs --p-percent");
    if (!(*options.p_percent > 0.0 && *options.p_percent < 100.0)) {
      throw UsageError("--p-percent must be in (0, 100)");
    }
    const fs::path repro_path = out_dir / "select-init.repro.json";
    guard_outputs({options.state, repro_path}, common);
    const Manifest manifest = load_manifest(options.manifest);
    const PoolState state = seed_initial(pool_ids(manifest), *options.p_percent, options.seed);
    save_pool_state(state, options.state);
    append_run_log(out_dir / "runlog.csv",
                   {run_log_record(state, SelectionMode::kUncertainty, std::nullopt)});
    write_repro(repro_path, "select", common,
                {{"init", true},
                 {"manifest", options.manifest},
                 {"p_percent", *options.p_percent},
                 {"state", options.state}},
                {{"seed", options.seed}});
    json summary = {{"iteration", 0},
                    {"labeled", {{"train", state.pools.train.labeled.size()},
                                 {"val", state.pools.val.labeled.size()}}},
                    {"state", options.state}};
    report(common, summary, "seeded " + options.state + "\n" + pool_line(state));
    return 0;
  }

  need(!options.scores.empty(), "--scores is required (or pass --init)");
  need(options.s_factor.has_value(), "--s-factor is required");
  if (!std::isfinite(*options.s_factor)) throw UsageError("--s-factor must be finite");
  if (options.cap && *options.cap <= 0) throw UsageError("--cap must be positive");

  PoolState state = load_pool_state(options.state);
  const std::string tag = iteration_tag(state.iteration + 1);
  const fs::path state_out = options.state_out.empty() ? fs::path(options.state) : fs::path(options.state_out);
  const fs::path round_path = out_dir / ("uncertainty-" + tag + ".json");
  const fs::path repro_path = out_dir / ("select-" + tag + ".repro.json");
  guard_outputs({round_path, repro_path}, common);
  if (state_out != fs::path(options.state)) guard_outputs({state_out}, common);

  std::map<std::string, double> scores;
  for (const auto& row : parse_score_csv(read_file(options.scores))) {
    if (row.measure != measure) {
      throw UsageError("scores in " + options.scores + " use " + std::string(to_string(row.measure)) +
                       " but --measure is " + std::string(to_string(measure)));
    }
    if (row.eu_img) scores[row.image_id] = *row.eu_img;
  }
  const BatchScorer scorer = batched([&](const std::string& id, Split) {
    const auto it = scores.find(id);
    if (it == scores.end()) {
      fail(ErrorCode::kMissingField, "no score for image '" + id + "' in " + options.scores);
    }
    return it->second;
  });

  const auto thresholds = labeled_thresholds(state, scorer, *options.s_factor, nullptr, measure);
  ScanOptions scan;
  scan.cap = options.cap;
  scan.measure = measure;
  const SelectionRound round =
      scan_and_select(state, thresholds, scorer, scan, next_round_seed(state, SelectionMode::kUncertainty));

  write_file_atomic(round_path, round_to_json(round).dump(2) + "\n");
  save_pool_state(state, state_out);
  append_run_log(out_dir / "runlog.csv",
                 {run_log_record(state, SelectionMode::kUncertainty, std::nullopt)});
  write_repro(repro_path, "select", common,
              {{"init", false},
               {"state", options.state},
               {"state_out", state_out.string()},
               {"scores", options.scores},
               {"measure", to_string(measure)},
               {"s_factor", *options.s_factor},
               {"cap", options.cap ? json(*options.cap) : json(nullptr)}},
              {{"pool_seed", state.rng_seed}, {"round_seed", round.seed}});

  const json summary = round_summary(round, state);
  std::ostringstream text;
  text << "iteration " << round.iteration << ": selected "
       << round.splits.train.selected.size() << " train, " << round.splits.val.selected.size()
       << " val\n"
       << pool_line(state);
  report(common, summary, text.str());
  return 0;
}

int run_baseline(const BaselineOptions& options, const Common& common) {
  need(!options.state.empty(), "--state is required");
  need(!options.paired.empty(), "--paired is required (the uncertainty trajectory's state)");
  need(!options.out.empty(), "--out is required");
  const fs::path out_dir = options.out;
  const PoolState paired = load_pool_state(options.paired);

  if (options.init) {
    need(!options.manifest.empty(), "--init needs --manifest");
    const fs::path repro_path = out_dir / "baseline-init.repro.json";
    guard_outputs({options.state, repro_path}, common);
    const Manifest manifest = load_manifest(options.manifest);
    const PoolState state =
        pool_from_labeled(pool_ids(manifest), initial_labeled(paired), options.seed);
    save_pool_state(state, options.state);
    append_run_log(out_dir / "runlog.csv",
                   {run_log_record(state, SelectionMode::kRandom, std::nullopt)});
    write_repro(repro_path, "baseline", common,
                {{"init", true},
                 {"manifest", options.manifest},
                 {"paired", options.paired},
                 {"state", options.state}},
                {{"seed", options.seed}});
    const json summary = {{"iteration", 0}, {"state", options.state}};
    report(common, summary, "seeded " + options.state + " from " + options.paired + "\n" +
                                pool_line(state));
    return 0;
  }

  PoolState state = load_pool_state(options.state);
  if (initial_labeled(state) != initial_labeled(paired)) {
    throw UsageError(options.state + " and " + options.paired + " do not share a seed pool");
  }
  if (paired.iteration <= state.iteration) {
    throw UsageError("no paired uncertainty round for iteration " +
                     std::to_string(state.iteration + 1) + " in " + options.paired +
                     " (run select first)");
  }
  const SelectionRound& source = paired.history[static_cast<std::size_t>(state.iteration)];
  if (source.mode != SelectionMode::kUncertainty) {
    throw UsageError("round " + std::to_string(source.iteration) + " of " + options.paired +
                     " is not an uncertainty round");
  }

  const std::string tag = iteration_tag(state.iteration + 1);
  const fs::path state_out = options.state_out.empty() ? fs::path(options.state) : fs::path(options.state_out);
  const fs::path round_path = out_dir / ("random-" + tag + ".json");
  const fs::path repro_path = out_dir / ("baseline-" + tag + ".repro.json");
  guard_outputs({round_path, repro_path}, common);
  if (state_out != fs::path(options.state)) guard_outputs({state_out}, common);

  const SelectionRound round =
      random_baseline_round(state, source, next_round_seed(state, SelectionMode::kRandom));
  write_file_atomic(round_path, round_to_json(round).dump(2) + "\n");
  save_pool_state(state, state_out);
  append_run_log(out_dir / "runlog.csv",
                 {run_log_record(state, SelectionMode::kRandom, std::nullopt)});
  write_repro(repro_path, "baseline", common,
              {{"init", false},
               {"state", options.state},
               {"state_out", state_out.string()},
               {"paired", options.paired}},
              {{"pool_seed", state.rng_seed}, {"round_seed", round.seed}});

  const json summary = round_summary(round, state);
  std::ostringstream text;
  text << "iteration " << round.iteration << ": selected " << round.splits.train.selected.size()
       << " train, " << round.splits.val.selected.size() << " val at random\n"
       << pool_line(state);
  report(common, summary, text.str());
  return 0;
}

int run_evaluate(const EvaluateOptions& options, const Common& common) {
  need(!options.manifest.empty(), "--manifest is required");
  need(!options.out.empty(), "--out is required");
  if (options.classes < 2 || options.classes > 256) throw UsageError("--classes must be in [2, 256]");
  need(options.from_stacks != !options.predictions.empty(),
       "pass exactly one of --predictions DIR or --from-stacks");
  const DatasetSplit split = split_arg(options.split);

  const fs::path out_dir = options.out;
  const fs::path csv_path = out_dir / "evaluate.csv";
  const fs::path repro_path = out_dir / "evaluate.repro.json";
  guard_outputs({csv_path, repro_path}, common);

  const Manifest manifest = load_manifest(options.manifest);
  const fs::path root = data_root(common, options.manifest);
  const auto& entries = manifest.split(split);
  if (entries.empty()) throw UsageError("split '" + options.split + "' has no images");

  std::vector<ConfusionMatrix> parts(entries.size(),
                                     ConfusionMatrix(options.classes, options.ignore_label));
  parallel_for(entries.size(), common.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = entries[i];
    try {
      if (!entry.label_path) fail(ErrorCode::kMissingField, "entry has no label_path");
      const LabelMap gt = read_label_map(resolve_data_path(root, *entry.label_path));
      if (options.from_stacks) {
        if (!entry.stack_path) fail(ErrorCode::kMissingField, "entry has no stack_path");
        const PredictionStack stack =
            read_stack(resolve_data_path(root, *entry.stack_path), {}, entry.id);
        parts[i].accumulate(gt, mean_prediction(stack).predicted_class);
      } else {
        parts[i].accumulate(gt, read_label_map(fs::path(options.predictions) / (entry.id + ".mcds")));
      }
    } catch (const Error& e) {
      throw Error(e.code(), "image '" + entry.id + "': " + e.what());
    }
  });
  ConfusionMatrix total(options.classes, options.ignore_label);
  for (const auto& part : parts) total += part;
  const SegEvalReport result = iou_report(total);

  write_file_atomic(csv_path, report_csv_header(options.classes) + "\n" +
                                  report_csv_row(options.iteration, options.pct_data, result) +
                                  "\n");
  write_repro(repro_path, "evaluate", common,
              {{"manifest", options.manifest},
               {"data_root", root.string()},
               {"split", options.split},
               {"classes", options.classes},
               {"ignore_label", options.ignore_label ? json(*options.ignore_label) : json(nullptr)},
               {"source", options.from_stacks ? "stacks" : options.predictions}},
              json::object());

  json per_class = json::array();
  for (const auto& iou : result.per_class_iou) per_class.push_back(iou ? json(*iou) : json(nullptr));
  const json summary = {
      {"images", entries.size()},
      {"mean_iou", std::isnan(result.mean_iou) ? json(nullptr) : json(result.mean_iou)},
      {"per_class_iou", per_class},
      {"report", csv_path.string()}};
  std::ostringstream text;
  text << "meanIoU " << format_g9(result.mean_iou) << " over " << entries.size() << " images\n";
  for (std::size_t c = 0; c < result.per_class_iou.size(); ++c) {
    text << "  class " << c << ": "
         << (result.per_class_iou[c] ? format_g9(*result.per_class_iou[c]) : std::string("absent"))
         << "\n";
  }
  report(common, summary, text.str());
  return 0;
}

int run_stability(const StabilityOptions& options, const Common& common) {
  const Measure measure = measure_arg(options.measure);
  need(!options.out.empty(), "--out is required");
  if (options.repeats < 1) throw UsageError("--repeats must be >= 1");
  if (options.images < 1) throw UsageError("--images must be >= 1");
  for (int t : options.t_grid) {
    if (t < 1) throw UsageError("--t-grid values must be >= 1");
  }

  const fs::path out_dir = options.out;
  const fs::path csv_path = out_dir / "stability.csv";
  const fs::path repro_path = out_dir / "stability.repro.json";
  guard_outputs({csv_path, repro_path}, common);

  StabilityConfig config;
  config.measure = measure;
  config.repeats = options.repeats;
  config.rng_seed = options.seed;
  config.jobs = common.jobs;
  if (!options.t_grid.empty()) config.t_grid = options.t_grid;

  std::optional<SyntheticDataset> dataset;
  std::optional<MockPredictor> predictor;
  StackSource source;
  json source_config;
  if (options.source == "sim") {
    if (options.size < 1) throw UsageError("--size must be >= 1");
    const SyntheticWorld world = default_world(derive_seed(options.seed, {1}), options.size, options.size);
    dataset = generate_dataset(world, static_cast<std::size_t>(options.images), 1, 1);
    predictor.emplace(world, PredictorParams{}, derive_seed(options.seed, {2}));
    const PoolState seed_pool = seed_initial(pool_ids(dataset->manifest), 5.0, derive_seed(options.seed, {3}));
    predictor->fit(*dataset, seed_pool.pools.train.labeled);
    config.image_ids = dataset->manifest.ids(DatasetSplit::kTrain);
    source = mock_stack_source(*dataset, *predictor);
    source_config = {{"kind", "sim"}, {"size", options.size}, {"images", options.images}};
  } else if (options.source == "manifest") {
    need(!options.manifest.empty(), "--source manifest needs --manifest");
    const Manifest manifest = load_manifest(options.manifest);
    const fs::path root = data_root(common, options.manifest);
    std::map<std::string, fs::path> paths;
    for (DatasetSplit s : {DatasetSplit::kTrain, DatasetSplit::kVal, DatasetSplit::kTest}) {
      for (const auto& e : manifest.split(s)) {
        if (e.stack_path) paths[e.id] = resolve_data_path(root, *e.stack_path);
      }
    }
    if (paths.empty()) throw UsageError("no manifest entry has a stack_path");
    for (const auto& [id, path] : paths) {
      if (config.image_ids.size() == static_cast<std::size_t>(options.images)) break;
      config.image_ids.push_back(id);
    }
    if (options.t_grid.empty()) {
      // Keep the default grid within what every selected stack holds.
      Index stored = std::numeric_limits<Index>::max();
      for (const auto& id : config.image_ids) stored = std::min(stored, read_stack(paths[id]).passes());
      std::erase_if(config.t_grid, [&](int t) { return t > stored; });
    }
    source = subsampling_source([paths](const std::string& id) { return read_stack(paths.at(id), {}, id); });
    source_config = {{"kind", "manifest"}, {"manifest", options.manifest}, {"data_root", root.string()},
                     {"images", config.image_ids.size()}};
  } else {
    throw UsageError("unknown --source '" + options.source + "' (expected sim or manifest)");
  }

  const StabilityReport result = mcdal::run_stability(config, source);
  write_file_atomic(csv_path, stability_csv(result));
  write_repro(repro_path, "stability", common,
              {{"source", source_config},
               {"measure", to_string(measure)},
               {"repeats", options.repeats},
               {"t_grid", config.t_grid}},
              {{"seed", options.seed}});

  json rows = json::array();
  std::ostringstream text;
  text << "T, mean, std over " << options.repeats << " repeats of " << config.image_ids.size()
       << " images (" << to_string(measure) << ")\n";
  for (const auto& row : result.rows) {
    rows.push_back({{"T", row.passes}, {"mean", row.mean}, {"std", row.std}});
    text << "  " << row.passes << ", " << format_g9(row.mean) << ", " << format_g9(row.std) << "\n";
  }
  report(common, {{"measure", to_string(measure)}, {"rows", rows}, {"report", csv_path.string()}},
         text.str());
  return 0;
}

int run_simulate(const SimulateOptions& options, const Common& common) {
  const Measure measure = measure_arg(options.measure);
  need(!options.out.empty(), "--out is required");
  if (options.size < 1) throw UsageError("--size must be >= 1");
  if (options.n_train < 1 || options.n_val < 1 || options.n_test < 1) {
    throw UsageError("--n-train, --n-val and --n-test must be >= 1");
  }
  if (!(options.p_percent > 0.0 && options.p_percent < 100.0)) {
    throw UsageError("--p-percent must be in (0, 100)");
  }
  if (!std::isfinite(options.s_factor)) throw UsageError("--s-factor must be finite");
  if (options.passes < 1) throw UsageError("--passes must be >= 1");
  if (options.rounds < 0) throw UsageError("--rounds must be >= 0");
  if (options.cap < 0) throw UsageError("--cap must be >= 0 (0 disables the cap)");

  const fs::path out_dir = options.out;
  const fs::path runlog_path = out_dir / "runlog.csv";
  const fs::path rounds_path = out_dir / "rounds.json";
  const fs::path state_a_path = out_dir / "state-uncertainty.json";
  const fs::path state_b_path = out_dir / "state-random.json";
  const fs::path repro_path = out_dir / "simulate.repro.json";
  std::vector<fs::path> outputs = {runlog_path, rounds_path, state_a_path, state_b_path, repro_path};
  if (options.write_dataset) outputs.push_back(out_dir / "dataset");
  guard_outputs(outputs, common);

  ExperimentConfig config;
  config.world = default_world(0, options.size, options.size);
  config.n_train = options.n_train;
  config.n_val = options.n_val;
  config.n_test = options.n_test;
  config.p_percent = options.p_percent;
  config.s_factor = options.s_factor;
  config.cap = options.cap > 0 ? std::optional<int>(options.cap) : std::nullopt;
  config.measure = measure;
  config.passes = options.passes;
  config.rounds = options.rounds;
  config.stop.min_selected_per_round = options.min_selected;
  config.stop.patience_rounds = options.patience;
  config.jobs = common.jobs;
  config = seeded_experiment(config, options.seed);

  const ExperimentLog log = run_experiment(config);

  std::string csv = run_log_header() + "\n";
  for (const auto& r : log.records) csv += run_log_row(r) + "\n";
  write_file_atomic(runlog_path, csv);

  const std::vector<bool> rare = config.world.rare_families();
  json rounds = json::array();
  for (const auto& r : log.rounds) {
    rounds.push_back({{"iteration", r.uncertainty.iteration},
                      {"uncertainty", round_to_json(r.uncertainty)},
                      {"random", round_to_json(r.random)},
                      {"selected_families", r.selected_families},
                      {"rare_selected", r.rare_selected},
                      {"rare_expected", r.rare_expected}});
  }
  json families = json::array();
  for (std::size_t f = 0; f < config.world.families.size(); ++f) {
    const auto& fam = config.world.families[f];
    families.push_back({{"name", fam.name}, {"frequency", fam.frequency}, {"rare", bool(rare[f])}});
  }
  write_file_atomic(rounds_path, json({{"families", families}, {"rounds", rounds}}).dump(2) + "\n");
  save_pool_state(log.uncertainty_state, state_a_path);
  save_pool_state(log.random_state, state_b_path);
  if (options.write_dataset) {
    write_dataset(generate_dataset(config.world, config.n_train, config.n_val, config.n_test),
                  out_dir / "dataset");
  }
  write_repro(repro_path, "simulate", common,
              {{"size", options.size},
               {"n_train", options.n_train},
               {"n_val", options.n_val},
               {"n_test", options.n_test},
               {"p_percent", options.p_percent},
               {"s_factor", options.s_factor},
               {"cap", options.cap},
               {"measure", to_string(measure)},
               {"passes", options.passes},
               {"rounds", options.rounds},
               {"min_selected", options.min_selected},
               {"patience", options.patience},
               {"predictor", {{"noise_floor", config.predictor.noise_floor},
                              {"noise_gain", config.predictor.noise_gain},
                              {"margin", config.predictor.margin}}}},
              {{"seed", options.seed},
               {"world_seed", config.world.seed},
               {"pool_seed", config.pool_seed},
               {"baseline_seed", config.baseline_seed},
               {"predictor_seed", config.predictor_seed}});

  const auto& last = log.records.back();
  const json summary = {{"rounds", log.rounds.size()},
                        {"stop_reason", to_string(log.stop)},
                        {"pct_train", last.pct_train},
                        {"pct_val", last.pct_val},
                        {"final_miou_uncertainty", log.final_miou_uncertainty},
                        {"final_miou_random", log.final_miou_random},
                        {"rare_selected", log.rare_selected()},
                        {"rare_expected", log.rare_expected()},
                        {"runlog", runlog_path.string()}};
  std::ostringstream text;
  text << log.rounds.size() << " rounds (stop: " << to_string(log.stop) << "), "
       << format_g9(last.pct_train) << "% of train labeled\n"
       << "  final meanIoU: uncertainty " << format_g9(log.final_miou_uncertainty) << ", random "
       << format_g9(log.final_miou_random) << "\n"
       << "  rare-family picks: " << log.rare_selected() << " (pool-frequency expectation "
       << format_g9(log.rare_expected()) << ")\n"
       << "  run log -> " << runlog_path.string() << "\n";
  report(common, summary, text.str());
  return 0;
}

}  // namespace mcdal::cli
