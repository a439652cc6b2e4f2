#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hsicrf/crf.hpp"
#include "hsicrf/cube.hpp"
#include "hsicrf/labels.hpp"
#include "hsicrf/metrics.hpp"
#include "hsicrf/net.hpp"
#include "hsicrf/sampling.hpp"
#include "hsicrf/synth.hpp"

namespace hsicrf {

// Fixed artifact names inside --out.
namespace names {
inline constexpr const char* cube = "cube.hsic";
inline constexpr const char* labels = "labels.pgm";
inline constexpr const char* model = "model.dmlw1";
inline constexpr const char* pred = "pred.pgm";
inline constexpr const char* marginals = "marginals.hsic";
inline constexpr const char* metrics = "metrics.csv";
inline constexpr const char* sweep = "sweep.csv";
inline constexpr const char* loss = "loss.csv";
}  // namespace names

enum class NormScope { full, train };

// Named parameter presets: the five kernel anchors are shared, only the
// filter size differs between the two scene geometries.
inline CrfParams preset_params(const std::string& name) {
  CrfParams p;
  p.w_app = 10.0;
  p.w_smo = 3.0;
  p.theta_alpha = 0.1;
  p.theta_beta = 80.0;
  p.theta_gamma = 3.0;
  if (name == "pavia") {
    p.filter_size = 7;
  } else if (name == "salinas") {
    p.filter_size = 15;
  } else {
    throw DataError("unknown preset: " + name);
  }
  return p;
}

namespace detail {

inline std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

inline double seconds_between(std::chrono::steady_clock::time_point a,
                              std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace detail

// The CLI works with label maps whose present ids are exactly 1..C, so that
// predictions and groundtruth share one id space end to end. Returns C.
inline int require_contiguous_classes(const LabelMap& labels) {
  std::array<bool, 256> present{};
  for (Index p = 0; p < labels.pixel_count(); ++p) present[labels.at(p)] = true;
  const int max_id = labels.max_label();
  if (max_id == 0) throw DataError("label map has no labeled pixels");
  for (int c = 1; c <= max_id; ++c) {
    if (!present[static_cast<std::size_t>(c)])
      throw DataError("label ids are not contiguous: class " +
                      std::to_string(c) + " is absent but " +
                      std::to_string(max_id) + " is present");
  }
  return max_id;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  SynthConfig scene;
};

inline void cmd_synth(const SynthArgs& args, std::ostream& log = std::cout) {
  detail::ensure_out_dir(args.out_dir);
  auto [cube, labels] = synth_scene<double>(args.scene);
  write_cube(cube, detail::join_path(args.out_dir, names::cube));
  write_labels(labels, detail::join_path(args.out_dir, names::labels));
  log << "[synth] wrote " << args.scene.height << "x" << args.scene.width
      << "x" << args.scene.bands << " cube with " << args.scene.classes
      << " classes to " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string cube_path;
  std::string labels_path;
  std::string out_dir;
  TrainConfig train;
  Index per_class = 200;
  Index virtual_per_class = -1;  // negative: match per_class
  double mix_low = 0.0;
  double mix_high = 1.0;
  NormScope norm_scope = NormScope::full;
};

struct TrainOutcome {
  int class_count = 0;
  Index real_samples = 0;
  Index virtual_samples = 0;
  double final_joint_loss = 0.0;
  double train_accuracy = 0.0;
};

namespace detail {

template <typename Scalar>
HsiCube<Scalar> normalize_for(const HsiCube<Scalar>& cube, NormScope scope,
                              std::span<const Index> train_pixels) {
  if (scope == NormScope::train)
    return normalize(cube, train_pixels);
  return normalize(cube);
}

// In-memory train step shared by cmd_train and the repeat protocol.
template <typename Scalar>
std::pair<TrainResult<Scalar>, TrainOutcome> run_training(
    const HsiCube<Scalar>& normalized, const LabelMap& labels,
    const SplitIndices& split, const TrainArgs& args) {
  auto [set, remap] =
      build_sample_set(normalized, labels, std::span<const Index>(split.train));

  AugmentConfig aug;
  aug.virtual_per_class =
      args.virtual_per_class < 0 ? args.per_class : args.virtual_per_class;
  aug.mix_low = args.mix_low;
  aug.mix_high = args.mix_high;
  aug.seed = args.train.seed ^ 0x5851f42d4c957f2dULL;
  const Index real = set.size();
  auto augmented = generate_virtual_samples(set, aug);

  auto result = train(augmented, args.train);

  TrainOutcome outcome;
  outcome.class_count = set.class_count;
  outcome.real_samples = real;
  outcome.virtual_samples = augmented.size() - real;
  outcome.final_joint_loss = result.history.back().joint_loss;

  const auto fwd = forward_batch(result.params, set.spectra);
  Index hits = 0;
  for (Index i = 0; i < set.size(); ++i) {
    Index best;
    fwd.probs.col(i).maxCoeff(&best);
    if (static_cast<int>(best) + 1 == set.labels[static_cast<std::size_t>(i)])
      ++hits;
  }
  outcome.train_accuracy =
      static_cast<double>(hits) / static_cast<double>(set.size());
  return {std::move(result), outcome};
}

}  // namespace detail

inline TrainOutcome cmd_train(const TrainArgs& args,
                              std::ostream& log = std::cout) {
  detail::ensure_out_dir(args.out_dir);
  const auto cube = load_cube<double>(args.cube_path);
  const auto labels = load_labels(args.labels_path);
  if (cube.height != labels.height || cube.width != labels.width)
    throw ShapeError("cube and label map dimensions differ");
  require_contiguous_classes(labels);

  const auto split = split_train_test(labels, args.per_class, args.train.seed);
  const auto normalized = detail::normalize_for(
      cube, args.norm_scope, std::span<const Index>(split.train));
  auto [result, outcome] =
      detail::run_training(normalized, labels, split, args);

  write_checkpoint(result.params, result.state.centers,
                   detail::join_path(args.out_dir, names::model));
  detail::write_text(detail::join_path(args.out_dir, names::loss),
                     loss_history_csv(result.history));

  log << "[train] " << outcome.real_samples << " real + "
      << outcome.virtual_samples << " virtual samples, "
      << outcome.class_count << " classes\n";
  log << "[train] final joint loss " << outcome.final_joint_loss
      << ", training-set accuracy " << outcome.train_accuracy << "\n";
  log << "[train] wrote " << names::model << " and " << names::loss << "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

struct InferArgs {
  std::string cube_path;
  std::string checkpoint_path;
  std::string out_dir;
  CrfParams crf;
  bool crf_enabled = true;
  int workers = 0;
  NormScope norm_scope = NormScope::full;
  // Needed only for norm_scope = train, to reproduce the training split.
  std::string labels_path;
  Index per_class = 200;
  std::uint64_t seed = 0;
};

struct InferOutcome {
  double extract_seconds = 0.0;
  double crf_seconds = 0.0;
  double total_seconds = 0.0;
};

inline InferOutcome cmd_infer(const InferArgs& args,
                              std::ostream& log = std::cout) {
  detail::ensure_out_dir(args.out_dir);
  const auto cube = load_cube<double>(args.cube_path);
  auto [params, centers] = read_checkpoint<double>(args.checkpoint_path);
  (void)centers;

  HsiCube<double> normalized;
  if (args.norm_scope == NormScope::train) {
    if (args.labels_path.empty())
      throw DataError("norm_scope=train needs --labels to recover the split");
    const auto labels = load_labels(args.labels_path);
    const auto split = split_train_test(labels, args.per_class, args.seed);
    normalized = normalize(cube, std::span<const Index>(split.train));
  } else {
    normalized = normalize(cube);
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto [features, probs] = extract(params, normalized, args.workers);
  const auto t1 = std::chrono::steady_clock::now();

  LabelMap pred;
  MarginalField<double> marginals;
  if (args.crf_enabled) {
    auto result = infer(probs, features, args.crf, args.workers);
    pred = std::move(result.labels);
    marginals = std::move(result.marginals);
  } else {
    pred = argmax_labels(probs);
    marginals = {probs.height, probs.width, probs.values};
  }
  const auto t2 = std::chrono::steady_clock::now();

  write_labels(pred, detail::join_path(args.out_dir, names::pred));
  write_cube(marginals_to_cube(marginals),
             detail::join_path(args.out_dir, names::marginals));

  InferOutcome outcome;
  outcome.extract_seconds = detail::seconds_between(t0, t1);
  outcome.crf_seconds = detail::seconds_between(t1, t2);
  outcome.total_seconds = detail::seconds_between(t0, t2);
  log << "[infer] timing: extract_s=" << outcome.extract_seconds
      << " crf_s=" << outcome.crf_seconds
      << " total_s=" << outcome.total_seconds << "\n";
  log << "[infer] wrote " << names::pred << " and " << names::marginals
      << "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string labels_path;  // groundtruth
  std::string out_dir;
  // Plain mode: score an existing prediction against the groundtruth.
  std::string pred_path;
  // Repeat mode (cube_path set): re-run train + infer with seeds
  // seed .. seed+repeats-1, score each run on its own test split, aggregate.
  std::string cube_path;
  Index repeats = 1;
  TrainArgs train_args;  // cube/labels/out ignored; config + split fields used
  CrfParams crf;
  bool crf_enabled = true;
  int workers = 0;
};

struct EvalOutcome {
  MetricsReport report;    // plain mode, or the first repeat
  MetricsStats stats;      // repeat mode
  bool repeated = false;
};

inline EvalOutcome cmd_eval(const EvalArgs& args,
                            std::ostream& log = std::cout) {
  detail::ensure_out_dir(args.out_dir);
  const auto gt = load_labels(args.labels_path);
  EvalOutcome outcome;

  if (args.cube_path.empty()) {
    const auto pred = load_labels(args.pred_path);
    outcome.report = report(confusion(pred, gt));
    detail::write_text(detail::join_path(args.out_dir, names::metrics),
                       metrics_csv(outcome.report));
    log << metrics_table(outcome.report);
    return outcome;
  }

  if (args.repeats < 1) throw DataError("repeats must be >= 1");
  const auto cube = load_cube<double>(args.cube_path);
  if (cube.height != gt.height || cube.width != gt.width)
    throw ShapeError("cube and label map dimensions differ");
  require_contiguous_classes(gt);

  std::vector<MetricsReport> runs;
  for (Index r = 0; r < args.repeats; ++r) {
    TrainArgs ta = args.train_args;
    ta.train.seed = args.train_args.train.seed + static_cast<std::uint64_t>(r);
    const auto split = split_train_test(gt, ta.per_class, ta.train.seed);
    const auto normalized = detail::normalize_for(
        cube, ta.norm_scope, std::span<const Index>(split.train));
    auto [trained, train_outcome] =
        detail::run_training(normalized, gt, split, ta);
    auto [features, probs] =
        extract(trained.params, normalized, args.workers);
    LabelMap pred = args.crf_enabled
                        ? infer(probs, features, args.crf, args.workers).labels
                        : argmax_labels(probs);
    runs.push_back(report(confusion(pred, gt, std::span<const Index>(split.test))));
    log << "[eval] run " << (r + 1) << "/" << args.repeats
        << ": OA=" << runs.back().oa << " AA=" << runs.back().aa
        << " kappa=" << runs.back().kappa << "\n";
  }

  outcome.report = runs.front();
  outcome.stats = aggregate_metrics(runs);
  outcome.repeated = true;
  detail::write_text(detail::join_path(args.out_dir, names::metrics),
                     metrics_stats_csv(outcome.stats));
  for (std::size_t m = 0; m < 3; ++m)
    log << "[eval] " << outcome.stats.names[m] << " = "
        << outcome.stats.mean[m] << " +/- " << outcome.stats.stddev[m] << "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string cube_path;
  std::string labels_path;
  std::string checkpoint_path;
  std::string out_dir;
  std::string parameter;  // w_app | w_smo | theta_alpha | theta_beta |
                          // theta_gamma | k
  std::vector<double> values;
  CrfParams crf;  // fixed remainder
  int workers = 0;
  bool cache_features = true;
};

struct SweepRow {
  double value = 0.0;
  double oa = 0.0;
  double aa = 0.0;
};

inline CrfParams apply_sweep_value(const CrfParams& base,
                                   const std::string& parameter, double value) {
  CrfParams p = base;
  if (parameter == "w_app") {
    p.w_app = value;
  } else if (parameter == "w_smo") {
    p.w_smo = value;
  } else if (parameter == "theta_alpha") {
    p.theta_alpha = value;
  } else if (parameter == "theta_beta") {
    p.theta_beta = value;
  } else if (parameter == "theta_gamma") {
    p.theta_gamma = value;
  } else if (parameter == "k") {
    p.filter_size = static_cast<Index>(value);
    if (static_cast<double>(p.filter_size) != value)
      throw DataError("filter sizes must be integers");
  } else {
    throw DataError("unknown sweep parameter: " + parameter);
  }
  validate_crf_params(p);
  return p;
}

inline std::vector<SweepRow> cmd_sweep(const SweepArgs& args,
                                       std::ostream& log = std::cout) {
  if (args.values.empty()) throw DataError("sweep needs at least one value");
  detail::ensure_out_dir(args.out_dir);
  const auto cube = load_cube<double>(args.cube_path);
  const auto gt = load_labels(args.labels_path);
  if (cube.height != gt.height || cube.width != gt.width)
    throw ShapeError("cube and label map dimensions differ");
  auto [params, centers] = read_checkpoint<double>(args.checkpoint_path);
  (void)centers;
  const auto normalized = normalize(cube);

  // Features and probabilities do not depend on the swept CRF parameter.
  auto cached = extract(params, normalized, args.workers);

  std::vector<SweepRow> rows;
  std::ostringstream csv;
  csv << "value,oa,aa\n";
  for (double value : args.values) {
    const CrfParams point = apply_sweep_value(args.crf, args.parameter, value);
    if (!args.cache_features) cached = extract(params, normalized, args.workers);
    const auto& [features, probs] = cached;
    const LabelMap pred = infer(probs, features, point, args.workers).labels;
    const auto rep = report(confusion(pred, gt));
    rows.push_back({value, rep.oa, rep.aa});
    csv << detail::format_double(value) << "," << detail::format_double(rep.oa)
        << "," << detail::format_double(rep.aa) << "\n";
    log << "[sweep] " << args.parameter << "=" << value << " OA=" << rep.oa
        << " AA=" << rep.aa << "\n";
  }
  detail::write_text(detail::join_path(args.out_dir, names::sweep), csv.str());
  return rows;
}

}  // namespace hsicrf
