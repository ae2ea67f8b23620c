#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "mcdal/error.hpp"
#include "mcdal/metrics.hpp"

#ifndef MCDAL_VERSION
#define MCDAL_VERSION "0.0.0"
#endif

using namespace mcdal::cli;

namespace {

const auto kMeasureCheck = CLI::Validator(
    [](const std::string& value) {
      return mcdal::parse_measure(value)
                 ? std::string()
                 : "unknown measure '" + value +
                       "' (expected variation-ratio, total-variance, predictive-entropy, "
                       "mutual-information or margin)";
    },
    "MEASURE");

// Manifest and state files are configuration: their schema errors exit 2.
bool is_config_error(mcdal::ErrorCode code) {
  using mcdal::ErrorCode;
  switch (code) {
    case ErrorCode::kSchema:
    case ErrorCode::kMissingField:
    case ErrorCode::kUnsupportedVersion:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kEmptySplit:
    case ErrorCode::kStateInconsistent:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo-dropout active learning for semantic segmentation", "mcdal"};
  app.set_version_flag("--version", MCDAL_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  common.argv.assign(argv, argv + argc);
  app.add_option("--data-root", common.data_root,
                 "Root for relative manifest paths (default: $MCDAL_DATA_ROOT, then the "
                 "manifest's directory)");
  app.add_flag("--json", common.json, "Print the run summary as JSON");
  app.add_option("-j,--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--force", common.force, "Overwrite existing outputs");

  UncertaintyOptions unc;
  auto* unc_cmd = app.add_subcommand("uncertainty", "Score recorded prediction stacks");
  unc_cmd->add_option("--manifest", unc.manifest, "Manifest JSON")->required();
  unc_cmd->add_option("--out", unc.out, "Output directory")->required();
  unc_cmd->add_option("--measure", unc.measure, "Acquisition measure")->check(kMeasureCheck);
  unc_cmd->add_option("--passes,-T", unc.passes, "Use the first T passes of each stack");
  unc_cmd->add_option("--splits", unc.splits, "Splits to score")->delimiter(',');
  unc_cmd->add_option("--iteration", unc.iteration, "Value of the iteration_scored column");
  unc_cmd->add_flag("--pixel-maps", unc.pixel_maps, "Also write per-pixel maps under maps/");
  unc_cmd->add_flag("--strict", unc.strict, "Exit 1 if any image fails");
  unc_cmd->add_flag("--renormalize", unc.renormalize, "Renormalize pass sums within tolerance");

  SelectOptions sel;
  auto* sel_cmd = app.add_subcommand("select", "Seed or advance the uncertainty trajectory");
  sel_cmd->add_option("--state", sel.state, "Pool state JSON")->required();
  sel_cmd->add_option("--out", sel.out, "Directory for round records and the run log")->required();
  sel_cmd->add_flag("--init", sel.init, "Create the state from a random P% seed set");
  sel_cmd->add_option("--manifest", sel.manifest, "Manifest JSON (with --init)");
  sel_cmd->add_option("--p-percent,-P", sel.p_percent, "Seed percentage (with --init)");
  sel_cmd->add_option("--seed", sel.seed, "Pool seed (with --init)");
  sel_cmd->add_option("--scores", sel.scores, "Score CSV from `uncertainty`");
  sel_cmd->add_option("--s-factor,-S", sel.s_factor, "Threshold factor S in TR = mean + S*std");
  sel_cmd->add_option("--cap", sel.cap, "Maximum selections per split");
  sel_cmd->add_option("--measure", sel.measure, "Measure the scores were computed with")
      ->check(kMeasureCheck);
  sel_cmd->add_option("--state-out", sel.state_out, "Write the new state here (default: --state)");

  BaselineOptions base;
  auto* base_cmd = app.add_subcommand("baseline", "Seed or advance the random trajectory");
  base_cmd->add_option("--state", base.state, "Random-trajectory pool state JSON")->required();
  base_cmd->add_option("--paired", base.paired, "Uncertainty-trajectory pool state JSON")
      ->required();
  base_cmd->add_option("--out", base.out, "Directory for round records and the run log")
      ->required();
  base_cmd->add_flag("--init", base.init, "Create the state from the paired seed set");
  base_cmd->add_option("--manifest", base.manifest, "Manifest JSON (with --init)");
  base_cmd->add_option("--seed", base.seed, "Random-trajectory seed (with --init)");
  base_cmd->add_option("--state-out", base.state_out, "Write the new state here (default: --state)");

  EvaluateOptions ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "meanIoU of predictions against ground truth");
  ev_cmd->add_option("--manifest", ev.manifest, "Manifest JSON")->required();
  ev_cmd->add_option("--out", ev.out, "Output directory")->required();
  ev_cmd->add_option("--classes,-C", ev.classes, "Number of classes")->required();
  ev_cmd->add_option("--predictions", ev.predictions, "Directory of <id>.mcds label maps");
  ev_cmd->add_flag("--from-stacks", ev.from_stacks, "Predict with the argmax of each mean stack");
  ev_cmd->add_option("--ignore-label", ev.ignore_label, "Ground-truth label to skip");
  ev_cmd->add_option("--split", ev.split, "Split to evaluate");
  ev_cmd->add_option("--iteration", ev.iteration, "Iteration column of the report");
  ev_cmd->add_option("--pct-data", ev.pct_data, "Percent-data column of the report");

  StabilityOptions st;
  auto* st_cmd = app.add_subcommand("stability", "Per-image score spread as a function of T");
  st_cmd->add_option("--out", st.out, "Output directory")->required();
  st_cmd->add_option("--source", st.source, "sim or manifest")
      ->check(CLI::IsMember({"sim", "manifest"}));
  st_cmd->add_option("--manifest", st.manifest, "Manifest JSON (with --source manifest)");
  st_cmd->add_option("--measure", st.measure, "Acquisition measure")->check(kMeasureCheck);
  st_cmd->add_option("--t-grid", st.t_grid, "Comma-separated T values")->delimiter(',');
  st_cmd->add_option("--repeats", st.repeats, "Repeats per T");
  st_cmd->add_option("--seed", st.seed, "Study seed");
  st_cmd->add_option("--images", st.images, "Number of images");
  st_cmd->add_option("--size", st.size, "Synthetic image side (with --source sim)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Paired uncertainty/random synthetic experiment");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();
  sim_cmd->add_option("--seed", sim.seed, "Experiment seed");
  sim_cmd->add_option("--size", sim.size, "Image side in pixels");
  sim_cmd->add_option("--n-train", sim.n_train, "Train images");
  sim_cmd->add_option("--n-val", sim.n_val, "Validation images");
  sim_cmd->add_option("--n-test", sim.n_test, "Test images");
  sim_cmd->add_option("--p-percent,-P", sim.p_percent, "Seed percentage");
  sim_cmd->add_option("--s-factor,-S", sim.s_factor, "Threshold factor");
  sim_cmd->add_option("--cap", sim.cap, "Selections per split per round (0: no cap)");
  sim_cmd->add_option("--passes,-T", sim.passes, "Forward passes");
  sim_cmd->add_option("--rounds", sim.rounds, "Maximum rounds");
  sim_cmd->add_option("--measure", sim.measure, "Acquisition measure")->check(kMeasureCheck);
  sim_cmd->add_option("--min-selected", sim.min_selected,
                      "Stop when a round selects fewer per split (0: never)");
  sim_cmd->add_option("--patience", sim.patience, "Stop after this many rounds without gain");
  sim_cmd->add_flag("--write-dataset", sim.write_dataset, "Also write labels and manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*unc_cmd) return run_uncertainty(unc, common);
    if (*sel_cmd) return run_select(sel, common);
    if (*base_cmd) return run_baseline(base, common);
    if (*ev_cmd) return run_evaluate(ev, common);
    if (*st_cmd) return run_stability(st, common);
    if (*sim_cmd) return run_simulate(sim, common);
  } catch (const UsageError& e) {
    std::cerr << "mcdal: " << e.what() << "\n";
    return 2;
  } catch (const mcdal::Error& e) {
    std::cerr << "mcdal: " << e.what() << "\n";
    return is_config_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "mcdal: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
