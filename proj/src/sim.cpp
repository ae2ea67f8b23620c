#include "mcdal/sim.hpp"

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/taus88.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "mcdal/eval.hpp"
#include "mcdal/parallel.hpp"
#include "mcdal/random.hpp"

namespace mcdal {

namespace {

constexpr std::uint64_t kImageStream = 0x1a6e;
constexpr std::uint64_t kBiasStream = 0xb1a5;
constexpr std::uint64_t kPassStream = 0x9a55;
constexpr std::uint64_t kExperimentStream = 0xe4e7;

using Uniform = boost::random::uniform_real_distribution<double>;

// Pixel noise dominates simulation cost; taus88 is a few times cheaper per
// draw than mt19937_64.
using NoiseEngine = boost::random::taus88;

// taus88 clamps small seeds to the same state, so raw seeds are mixed first.
NoiseEngine noise_engine(std::uint64_t seed) {
  const std::uint64_t mixed = derive_seed(seed, {0x7a58});
  return NoiseEngine(static_cast<std::uint32_t>(mixed ^ (mixed >> 32)));
}

double uniform(Rng& rng, double lo, double hi) { return Uniform(lo, hi)(rng); }

int uniform_int(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

void paint_band(LabelMap& labels, int cls, Rng& rng) {
  const double H = static_cast<double>(labels.rows());
  const double W = static_cast<double>(labels.cols());
  const double center = uniform(rng, 0.25, 0.75) * H;
  const double half = 0.5 * std::max(1.0, uniform(rng, 0.15, 0.3) * H);
  const double slope = uniform(rng, -0.3, 0.3);
  for (Index h = 0; h < labels.rows(); ++h) {
    for (Index w = 0; w < labels.cols(); ++w) {
      const double mid = center + slope * (static_cast<double>(w) + 0.5 - W / 2.0);
      if (std::abs(static_cast<double>(h) + 0.5 - mid) < half) {
        labels(h, w) = static_cast<std::uint8_t>(cls);
      }
    }
  }
}

void paint_disc(LabelMap& labels, int cls, double radius_frac_lo, double radius_frac_hi, Rng& rng) {
  const double extent = static_cast<double>(std::min(labels.rows(), labels.cols()));
  const double radius = std::max(1.0, uniform(rng, radius_frac_lo, radius_frac_hi) * extent);
  const double ch = uniform_int(rng, 0, static_cast<int>(labels.rows()) - 1) + 0.5;
  const double cw = uniform_int(rng, 0, static_cast<int>(labels.cols()) - 1) + 0.5;
  for (Index h = 0; h < labels.rows(); ++h) {
    for (Index w = 0; w < labels.cols(); ++w) {
      const double dh = static_cast<double>(h) + 0.5 - ch;
      const double dw = static_cast<double>(w) + 0.5 - cw;
      if (dh * dh + dw * dw < radius * radius) labels(h, w) = static_cast<std::uint8_t>(cls);
    }
  }
}

void paint_layers(LabelMap& labels, const std::vector<int>& classes, Rng& rng) {
  const double H = static_cast<double>(labels.rows());
  const double upper = uniform(rng, 0.2, 0.4) * H;
  const double lower = uniform(rng, 0.6, 0.8) * H;
  const double amp = uniform(rng, 0.0, 0.08) * H;
  const double freq = uniform(rng, 0.5, 2.0) * 2.0 * std::numbers::pi / static_cast<double>(labels.cols());
  const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  for (Index h = 0; h < labels.rows(); ++h) {
    for (Index w = 0; w < labels.cols(); ++w) {
      const double wave = amp * std::sin(freq * static_cast<double>(w) + phase);
      const double y = static_cast<double>(h) + 0.5;
      const int layer = y < upper + wave ? 0 : (y < lower + wave ? 1 : 2);
      labels(h, w) = static_cast<std::uint8_t>(classes[layer]);
    }
  }
}

LabelMap paint(const PatternFamily& family, int height, int width, Rng& rng) {
  LabelMap labels = LabelMap::Constant(height, width, static_cast<std::uint8_t>(family.classes[0]));
  switch (family.kind) {
    case PatternKind::kStriped:
      paint_band(labels, family.classes[1], rng);
      break;
    case PatternKind::kLayered:
      paint_layers(labels, family.classes, rng);
      break;
    case PatternKind::kBlob: {
      paint_band(labels, family.classes[1], rng);
      const int discs = uniform_int(rng, 1, 3);
      for (int i = 0; i < discs; ++i) paint_disc(labels, family.classes[2], 0.08, 0.18, rng);
      break;
    }
    case PatternKind::kSpeckle: {
      const int specks = uniform_int(rng, 4, 10);
      for (int i = 0; i < specks; ++i) paint_disc(labels, family.classes[1], 0.04, 0.08, rng);
      paint_disc(labels, family.classes[2], 0.1, 0.2, rng);
      break;
    }
  }
  return labels;
}

std::size_t required_classes(PatternKind kind) {
  return kind == PatternKind::kStriped ? 2 : 3;
}

}  // namespace

void SyntheticWorld::check() const {
  require(classes >= 2 && classes <= 255, "world needs 2..255 classes");
  require(height >= 1 && width >= 1, "image dims must be >= 1");
  require(quality_spread >= 0.0, "quality spread must be >= 0");
  require(!families.empty(), "world needs at least one pattern family");
  double total = 0.0;
  std::set<int> reachable;
  for (const auto& f : families) {
    require(f.frequency >= 0.0, "family frequencies must be non-negative");
    require(f.classes.size() >= required_classes(f.kind),
            "family '" + f.name + "' lists too few classes for its template");
    for (int c : f.classes) {
      require(c >= 0 && c < classes, "family '" + f.name + "' paints an unknown class");
      if (f.frequency > 0.0) reachable.insert(c);
    }
    total += f.frequency;
  }
  require(std::abs(total - 1.0) < 1e-9, "family frequencies must sum to 1");
  require(static_cast<int>(reachable.size()) == classes, "every class must be reachable");
}

std::vector<bool> SyntheticWorld::rare_families() const {
  std::vector<bool> rare;
  const double uniform_share = 1.0 / static_cast<double>(families.size());
  for (const auto& f : families) rare.push_back(f.frequency < uniform_share);
  return rare;
}

SyntheticWorld default_world(std::uint64_t seed, int height, int width) {
  SyntheticWorld world;
  world.classes = 5;
  world.height = height;
  world.width = width;
  world.seed = seed;
  world.families = {
      {"pipeline-band", PatternKind::kStriped, {0, 1}, 0.55},
      {"seabed-layers", PatternKind::kLayered, {0, 1, 2}, 0.25},
      {"joint-blobs", PatternKind::kBlob, {0, 1, 3}, 0.12},
      {"debris-speckle", PatternKind::kSpeckle, {0, 4, 2}, 0.08},
  };
  return world;
}

const SyntheticImage& SyntheticDataset::image(const std::string& id) const {
  const auto it = by_id.find(id);
  if (it == by_id.end()) fail(ErrorCode::kInvalidArgument, "unknown synthetic image '" + id + "'");
  return images[it->second];
}

std::vector<int> SyntheticDataset::family_histogram(std::span<const std::string> ids) const {
  std::vector<int> counts(world.families.size(), 0);
  for (const auto& id : ids) ++counts[image(id).family];
  return counts;
}

SyntheticDataset generate_dataset(const SyntheticWorld& world, std::size_t n_train,
                                  std::size_t n_val, std::size_t n_test) {
  world.check();
  if (n_train == 0 || n_val == 0 || n_test == 0) {
    fail(ErrorCode::kInvalidArgument, "every split needs at least one image");
  }
  SyntheticDataset ds;
  ds.world = world;
  std::vector<double> weights;
  for (const auto& f : world.families) weights.push_back(f.frequency);

  std::uint64_t index = 0;
  for (auto [split, count] : {std::pair{DatasetSplit::kTrain, n_train},
                              std::pair{DatasetSplit::kVal, n_val},
                              std::pair{DatasetSplit::kTest, n_test}}) {
    for (std::size_t i = 0; i < count; ++i, ++index) {
      Rng rng(derive_seed(world.seed, {kImageStream, index}));
      SyntheticImage img;
      img.split = split;
      img.index = index;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05zu", std::string(to_string(split)).c_str(), i);
      img.id = id;
      img.family = boost::random::discrete_distribution<int, double>(weights)(rng);
      img.labels = paint(world.families[img.family], world.height, world.width, rng);
      const double z = boost::random::normal_distribution<double>()(rng);
      img.quality = std::exp(world.quality_spread * z);

      ManifestEntry entry;
      entry.id = img.id;
      entry.label_path = "labels/" + img.id + ".mcds";
      entry.meta = {{"family", img.family},
                    {"family_name", world.families[img.family].name},
                    {"quality", img.quality}};
      ds.manifest.split(split).push_back(std::move(entry));
      ds.by_id.emplace(img.id, ds.images.size());
      ds.images.push_back(std::move(img));
    }
  }
  ds.manifest.extra["generator"] = {{"kind", "synthetic"},
                                    {"seed", world.seed},
                                    {"height", world.height},
                                    {"width", world.width},
                                    {"classes", world.classes},
                                    {"quality_spread", world.quality_spread}};
  return ds;
}

void write_dataset(const SyntheticDataset& dataset, const fs::path& dir) {
  for (const auto& img : dataset.images) {
    write_label_map(img.labels, dir / "labels" / (img.id + ".mcds"));
  }
  save_manifest(dataset.manifest, dir / "manifest.json");
}

MockPredictor::MockPredictor(const SyntheticWorld& world, PredictorParams params,
                             std::uint64_t seed)
    : classes_(world.classes),
      params_(params),
      seed_(seed),
      familiarity_(world.families.size(), 0) {
  require(params.noise_floor >= 0.0 && params.noise_gain >= 0.0, "noise parameters must be >= 0");
}

void MockPredictor::fit(const SyntheticDataset& dataset, std::span<const std::string> labeled) {
  familiarity_ = dataset.family_histogram(labeled);
}

void MockPredictor::set_familiarity(std::vector<int> familiarity) {
  require(familiarity.size() == familiarity_.size(), "familiarity needs one count per family");
  familiarity_ = std::move(familiarity);
}

double MockPredictor::noise_scale(int family) const {
  return params_.noise_floor + params_.noise_gain / (1.0 + familiarity_.at(family));
}

Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> MockPredictor::base_logits(
    const SyntheticImage& image, float sigma) const {
  const Index C = classes_;
  const Index N = image.labels.size();
  Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> logits =
      Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(C, N);
  for (Index n = 0; n < N; ++n) logits(image.labels(n), n) = static_cast<float>(params_.margin);
  if (sigma > 0.0f) {
    NoiseEngine rng = noise_engine(derive_seed(seed_, {kBiasStream, image.index}));
    boost::random::normal_distribution<float> normal;
    for (Index i = 0; i < logits.size(); ++i) logits.data()[i] += sigma * normal(rng);
  }
  return logits;
}

PredictionStack MockPredictor::forward(const SyntheticImage& image, int passes,
                                       std::uint64_t pass_seed) const {
  require(passes >= 1, "forward needs T >= 1");
  const Index C = classes_;
  const Index N = image.labels.size();
  const float sigma = static_cast<float>(noise_scale(image.family) * image.quality);
  const auto base = base_logits(image, sigma);

  PredictionStack stack(image.id, passes, C, image.labels.rows(), image.labels.cols());
  auto& planes = stack.planes();
  NoiseEngine rng = noise_engine(pass_seed);
  boost::random::normal_distribution<float> normal;
  Eigen::Array<float, 1, Eigen::Dynamic> column(N);
  for (Index t = 0; t < passes; ++t) {
    auto block = planes.middleRows(t * C, C);
    if (sigma > 0.0f) {
      float* out = block.data();
      const float* in = base.data();
      for (Index i = 0; i < C * N; ++i) out[i] = in[i] + sigma * normal(rng);
    } else {
      block = base;
    }
    column = block.colwise().maxCoeff();
    block = (block.rowwise() - column).exp();
    column = block.colwise().sum();
    block.rowwise() /= column;
  }
  return stack;
}

ClassMap MockPredictor::predict(const SyntheticImage& image) const {
  const auto logits =
      base_logits(image, static_cast<float>(noise_scale(image.family) * image.quality));
  ClassMap out(image.labels.rows(), image.labels.cols());
  for (Index n = 0; n < logits.cols(); ++n) {
    Index best = 0;
    for (Index c = 1; c < logits.rows(); ++c) {
      if (logits(c, n) > logits(best, n)) best = c;
    }
    out(n) = static_cast<int>(best);
  }
  return out;
}

double evaluate_miou(const MockPredictor& predictor, const SyntheticDataset& dataset,
                     std::size_t jobs) {
  std::vector<const SyntheticImage*> test;
  for (const auto& img : dataset.images) {
    if (img.split == DatasetSplit::kTest) test.push_back(&img);
  }
  std::vector<ConfusionMatrix> parts(test.size(), ConfusionMatrix(dataset.world.classes));
  parallel_for(test.size(), jobs, [&](std::size_t i) {
    parts[i].accumulate(test[i]->labels, predictor.predict(*test[i]));
  });
  ConfusionMatrix total(dataset.world.classes);
  for (const auto& p : parts) total += p;
  return iou_report(total).mean_iou;
}

StackSource mock_stack_source(const SyntheticDataset& dataset, const MockPredictor& predictor) {
  return [&dataset, &predictor](const std::string& id, int passes, int, std::uint64_t seed) {
    return predictor.forward(dataset.image(id), passes, seed);
  };
}

std::size_t ExperimentLog::rare_selected() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.rare_selected;
  return n;
}

double ExperimentLog::rare_expected() const {
  double n = 0.0;
  for (const auto& r : rounds) n += r.rare_expected;
  return n;
}

ExperimentConfig seeded_experiment(ExperimentConfig config, std::uint64_t seed) {
  config.world.seed = derive_seed(seed, {kExperimentStream, 1});
  config.pool_seed = derive_seed(seed, {kExperimentStream, 2});
  config.baseline_seed = derive_seed(seed, {kExperimentStream, 3});
  config.predictor_seed = derive_seed(seed, {kExperimentStream, 4});
  return config;
}

ExperimentLog run_experiment(const ExperimentConfig& config) {
  require(config.passes >= 1, "passes must be >= 1");
  require(config.rounds >= 0, "rounds must be >= 0");
  const SyntheticDataset dataset =
      generate_dataset(config.world, config.n_train, config.n_val, config.n_test);
  const SplitIds ids = pool_ids(dataset.manifest);
  const std::vector<bool> rare = config.world.rare_families();

  ExperimentLog log;
  PoolState& a = log.uncertainty_state;
  PoolState& b = log.random_state;
  a = seed_initial(ids, config.p_percent, config.pool_seed);
  b = pool_from_labeled(ids, initial_labeled(a), config.baseline_seed);

  MockPredictor model_a(config.world, config.predictor, config.predictor_seed);
  MockPredictor model_b(config.world, config.predictor, config.predictor_seed);
  model_a.fit(dataset, a.pools.train.labeled);
  model_b.fit(dataset, b.pools.train.labeled);

  double miou_a = evaluate_miou(model_a, dataset, config.jobs);
  double miou_b = evaluate_miou(model_b, dataset, config.jobs);
  std::vector<double> miou_history{miou_a};
  log.records.push_back(run_log_record(a, SelectionMode::kUncertainty, miou_a));
  log.records.push_back(run_log_record(b, SelectionMode::kRandom, miou_b));

  for (int r = 0; r < config.rounds; ++r) {
    const StopDecision decision = check_stop(a, config.stop, miou_history);
    if (decision.stop) {
      log.stop = decision.reason;
      break;
    }
    const auto epoch = static_cast<std::uint64_t>(a.iteration + 1);
    const BatchScorer scorer = [&](Split, std::span<const std::string> batch) {
      std::vector<double> scores(batch.size());
      parallel_for(batch.size(), config.jobs, [&](std::size_t i) {
        const SyntheticImage& img = dataset.image(batch[i]);
        const auto stack = model_a.forward(
            img, config.passes, derive_seed(config.predictor_seed, {kPassStream, epoch, img.index}));
        scores[i] = acquisition_score(stack, config.measure);
      });
      return scores;
    };
    const auto thresholds = labeled_thresholds(a, scorer, config.s_factor, nullptr, config.measure);

    ExperimentRound round;
    PerSplit<double> rare_fraction;
    for (Split s : kPoolSplits) {
      const auto hist = dataset.family_histogram(a.pools[s].unlabeled);
      const double total = static_cast<double>(a.pools[s].unlabeled.size());
      double rare_count = 0.0;
      for (std::size_t f = 0; f < hist.size(); ++f) rare_count += rare[f] ? hist[f] : 0;
      rare_fraction[s] = total > 0 ? rare_count / total : 0.0;
    }
    ScanOptions scan;
    scan.cap = config.cap;
    scan.measure = config.measure;
    scan.batch_size = config.jobs > 1 ? config.jobs * 8 : 1;
    round.uncertainty =
        scan_and_select(a, thresholds, scorer, scan, next_round_seed(a, SelectionMode::kUncertainty));
    round.random = random_baseline_round(b, round.uncertainty,
                                         next_round_seed(b, SelectionMode::kRandom));
    round.selected_families.assign(config.world.families.size(), 0);
    for (Split s : kPoolSplits) {
      const auto& selected = round.uncertainty.splits[s].selected;
      for (const auto& id : selected) {
        const int f = dataset.image(id).family;
        ++round.selected_families[f];
        if (rare[f]) ++round.rare_selected;
      }
      round.rare_expected += rare_fraction[s] * static_cast<double>(selected.size());
    }
    log.rounds.push_back(std::move(round));

    model_a.fit(dataset, a.pools.train.labeled);
    model_b.fit(dataset, b.pools.train.labeled);
    miou_a = evaluate_miou(model_a, dataset, config.jobs);
    miou_b = evaluate_miou(model_b, dataset, config.jobs);
    miou_history.push_back(miou_a);
    log.records.push_back(run_log_record(a, SelectionMode::kUncertainty, miou_a));
    log.records.push_back(run_log_record(b, SelectionMode::kRandom, miou_b));
  }
  log.final_miou_uncertainty = miou_a;
  log.final_miou_random = miou_b;
  return log;
}

}  // namespace mcdal
