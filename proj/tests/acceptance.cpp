// Acceptance suite: one line per criterion, [PASS]/[FAIL]/[SKIP].
//
// Criteria 1-6 run on generated data and must pass. Criteria 7 and 8 need
// user-converted Pavia University / Salinas scenes and are skipped unless the
// HSICRF_PAVIA_* / HSICRF_SALINAS_* environment variables point at them.
// Criterion 9 measures CRF inference time on a Pavia-sized random input.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hsicrf/crf.hpp"
#include "hsicrf/metrics.hpp"
#include "hsicrf/net.hpp"
#include "hsicrf/pipeline.hpp"
#include "hsicrf/sampling.hpp"
#include "hsicrf/synth.hpp"

using namespace hsicrf;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure(bool cond, const std::string& msg) {
  if (!cond) throw Failure(msg);
}

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// criterion 1: gradient oracle
// ---------------------------------------------------------------------------

double joint_loss(const MlpParams<double>& params, const MatX<double>& batch,
                  const std::vector<int>& labels, const MatX<double>& centers,
                  const TrainConfig& cfg) {
  const auto fwd = forward_batch(params, batch);
  double loss = 0;
  for (Index i = 0; i < batch.cols(); ++i)
    loss += softmax_loss<double>(fwd.probs.col(i),
                                 labels[static_cast<std::size_t>(i)]);
  loss += cfg.lambda * center_loss(fwd.features(), labels, centers,
                                   cfg.center_loss_form);
  return loss / static_cast<double>(batch.cols());
}

void criterion_gradient_oracle(std::string& detail) {
  Rng rng = make_rng(20240);
  TrainConfig cfg;
  cfg.lambda = 1.0;
  const std::vector<Index> hidden{5, 5};
  double worst = 0;

  for (int net = 0; net < 20; ++net) {
    auto params = make_mlp<double>(4, hidden, 3, 2, rng);
    // Nonzero biases keep pre-activations off the exact ReLU kink, where the
    // symmetric difference quotient is not the subgradient.
    for (auto& b : params.biases)
      for (Index r = 0; r < b.size(); ++r) b[r] = 0.1 * normal(rng);
    MatX<double> batch(4, 8);
    for (Index c = 0; c < 8; ++c)
      for (Index r = 0; r < 4; ++r) batch(r, c) = normal(rng);
    std::vector<int> labels;
    for (int i = 0; i < 8; ++i)
      labels.push_back(static_cast<int>(uniform_index(rng, 2)) + 1);
    MatX<double> centers(3, 2);
    for (Index c = 0; c < 2; ++c)
      for (Index r = 0; r < 3; ++r) centers(r, c) = normal(rng);

    const auto grads = backward(params, batch, labels, centers, cfg);
    auto check_slot = [&](double& slot, double analytic) {
      const double h = 1e-4;
      const double saved = slot;
      slot = saved + h;
      const double up = joint_loss(params, batch, labels, centers, cfg);
      slot = saved - h;
      const double down = joint_loss(params, batch, labels, centers, cfg);
      slot = saved;
      const double fd = (up - down) / (2 * h);
      const double rel = std::abs(fd - analytic) /
                         std::max({std::abs(fd), std::abs(analytic), 1e-6});
      worst = std::max(worst, rel);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      auto& w = params.weights[l];
      for (Index r = 0; r < w.rows(); ++r)
        for (Index c = 0; c < w.cols(); ++c)
          check_slot(w(r, c), grads.weights[l](r, c));
      for (Index r = 0; r < params.biases[l].size(); ++r)
        check_slot(params.biases[l][r], grads.biases[l][r]);
    }
  }
  detail = "max rel err " + fmt(worst) + " over 20 nets";
  ensure(worst < 1e-4, "gradient mismatch " + fmt(worst) + " >= 1e-4");
}

// ---------------------------------------------------------------------------
// criteria 2 and 3: dense oracle and degenerate identity
// ---------------------------------------------------------------------------

struct CrfInstance {
  ProbabilityMap<double> prob;
  FeatureMap<double> features;
};

std::vector<CrfInstance> random_instances(int count, Index h, Index w,
                                          Index classes, Index feat_dim,
                                          std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<CrfInstance> out;
  for (int i = 0; i < count; ++i) {
    CrfInstance inst;
    inst.prob = {h, w, MatX<double>(classes, h * w)};
    for (Index p = 0; p < h * w; ++p) {
      double sum = 0;
      for (Index l = 0; l < classes; ++l) {
        inst.prob.values(l, p) = uniform_real(rng, 0.05, 1.0);
        sum += inst.prob.values(l, p);
      }
      inst.prob.values.col(p) /= sum;
    }
    inst.features = {h, w, MatX<double>(feat_dim, h * w)};
    for (Index p = 0; p < h * w; ++p)
      for (Index d = 0; d < feat_dim; ++d)
        inst.features.values(d, p) = normal(rng);
    out.push_back(std::move(inst));
  }
  return out;
}

void criterion_dense_oracle(std::string& detail) {
  const auto instances = random_instances(10, 6, 6, 3, 4, 9090);
  double worst = 0;
  for (const auto& inst : instances) {
    for (Index iters = 1; iters <= 5; ++iters) {
      CrfParams params;
      params.w_app = 4.0;
      params.w_smo = 2.0;
      params.theta_beta = 1.0;
      params.iterations = iters;
      params.filter_size = 13;  // covers the whole 6x6 image
      const auto windowed = infer(inst.prob, inst.features, params);
      const auto dense = brute_force_infer(inst.prob, inst.features, params);
      worst = std::max(
          worst,
          (windowed.marginals.q - dense.marginals.q).cwiseAbs().maxCoeff());
    }
  }
  detail = "max |dQ| " + fmt(worst) + " over 10 instances x 5 iterations";
  ensure(worst < 1e-5, "windowed/dense divergence " + fmt(worst));
}

void criterion_degenerate_identity(std::string& detail) {
  const auto instances = random_instances(10, 7, 9, 4, 3, 1234);
  Index pixels = 0;
  for (const auto& inst : instances) {
    CrfParams params;
    params.w_app = 0.0;
    params.w_smo = 0.0;
    const auto result = infer(inst.prob, inst.features, params);
    const auto direct = argmax_labels(inst.prob);
    ensure(result.labels.values == direct.values,
           "degenerate CRF deviated from the unary argmax");
    pixels += inst.prob.pixel_count();
  }
  detail = "exact on " + std::to_string(pixels) + " pixels";
}

// ---------------------------------------------------------------------------
// criteria 4 and 6: synthetic-scene fixture
// ---------------------------------------------------------------------------

struct SceneFixture {
  HsiCube<double> normalized;
  LabelMap labels;
  SplitIndices split;
  SampleSet<double> train_set;
  TrainResult<double> trained;       // lambda = 1
  FeatureMap<double> features;
  ProbabilityMap<double> probs;
  double dml_oa = 0.0;
};

TrainConfig scene_train_config() {
  TrainConfig cfg;
  cfg.seed = 0;
  return cfg;  // defaults: lambda 1, lr 0.01, batch 64, 400 epochs, 128-64-32
}

const SceneFixture& scene_fixture() {
  static std::optional<SceneFixture> fixture;
  if (fixture) return *fixture;

  SceneFixture f;
  SynthConfig scene;  // 64x64x16, 5 classes, default noise
  scene.seed = 0;
  auto [cube, labels] = synth_scene<double>(scene);
  f.labels = std::move(labels);
  f.normalized = normalize(cube);
  f.split = split_train_test(f.labels, 200, 0);

  auto [set, remap] = build_sample_set(
      f.normalized, f.labels, std::span<const Index>(f.split.train));
  f.train_set = std::move(set);
  AugmentConfig aug;
  aug.virtual_per_class = 200;
  aug.seed = 1;
  const auto augmented = generate_virtual_samples(f.train_set, aug);

  f.trained = train(augmented, scene_train_config());
  auto [features, probs] = extract(f.trained.params, f.normalized);
  f.features = std::move(features);
  f.probs = std::move(probs);

  const auto pred = argmax_labels(f.probs);
  f.dml_oa =
      report(confusion(pred, f.labels, std::span<const Index>(f.split.test)))
          .oa;
  fixture = std::move(f);
  return *fixture;
}

double mean_center_distance(const TrainResult<double>& result,
                            const SampleSet<double>& set) {
  const auto fwd = forward_batch(result.params, set.spectra);
  const double total = center_loss(fwd.features(), set.labels,
                                   result.state.centers,
                                   CenterLossForm::norm);
  return total / static_cast<double>(set.size());
}

void criterion_center_loss_effect(std::string& detail) {
  const auto& f = scene_fixture();

  AugmentConfig aug;
  aug.virtual_per_class = 200;
  aug.seed = 1;
  const auto augmented = generate_virtual_samples(f.train_set, aug);
  TrainConfig no_center = scene_train_config();
  no_center.lambda = 0.0;
  const auto plain = train(augmented, no_center);

  const double scatter_with = mean_center_distance(f.trained, f.train_set);
  const double scatter_without = mean_center_distance(plain, f.train_set);
  ensure(scatter_with < scatter_without,
         "center loss did not tighten features: " + fmt(scatter_with) +
             " vs " + fmt(scatter_without));

  CrfParams params = preset_params("pavia");
  const auto refined = infer(f.probs, f.features, params);
  const double crf_oa =
      report(confusion(refined.labels, f.labels,
                       std::span<const Index>(f.split.test)))
          .oa;
  ensure(crf_oa >= f.dml_oa, "CRF hurt accuracy: " + fmt(crf_oa) + " < " +
                                 fmt(f.dml_oa));
  detail = "scatter " + fmt(scatter_with) + " < " + fmt(scatter_without) +
           "; OA dml " + fmt(f.dml_oa) + " -> crf " + fmt(crf_oa);
}

void criterion_metric_formulas(std::string& detail) {
  ConfusionMatrix cm;
  cm.counts.resize(2, 2);
  cm.counts << 40, 10, 20, 30;
  const auto rep = report(cm);
  ensure(std::abs(rep.oa - 0.7) < 1e-15, "oa != 0.7");
  ensure(std::abs(rep.kappa - 0.4) < 1e-12, "kappa != 0.4");
  ensure(std::abs(rep.aa - 0.7) < 1e-15, "aa != 0.7");

  cm.counts << 50, 0, 0, 50;
  const auto perfect = report(cm);
  ensure(perfect.oa == 1.0 && perfect.aa == 1.0 && perfect.kappa == 1.0,
         "perfect matrix scores off");

  cm.counts << 50, 0, 50, 0;
  const auto chance = report(cm);
  ensure(std::abs(chance.oa - 0.5) < 1e-15 && std::abs(chance.kappa) < 1e-15,
         "chance-level kappa not 0");
  detail = "kappa 0.4, aa 0.7, degenerate cases exact";
}

void criterion_robustness_sweep(std::string& detail) {
  const auto& f = scene_fixture();
  const CrfParams anchors = preset_params("pavia");
  const double factors[] = {0.25, 0.5, 1.0, 2.0, 4.0};
  const char* parameters[] = {"w_app", "w_smo", "theta_alpha", "theta_beta",
                              "theta_gamma"};
  double worst_range = 0;
  std::string worst_param;
  for (const char* parameter : parameters) {
    double lo = 1.0, hi = 0.0;
    for (double factor : factors) {
      const double anchor_value = [&] {
        if (std::string(parameter) == "w_app") return anchors.w_app;
        if (std::string(parameter) == "w_smo") return anchors.w_smo;
        if (std::string(parameter) == "theta_alpha")
          return anchors.theta_alpha;
        if (std::string(parameter) == "theta_beta") return anchors.theta_beta;
        return anchors.theta_gamma;
      }();
      const CrfParams point =
          apply_sweep_value(anchors, parameter, anchor_value * factor);
      const auto result = infer(f.probs, f.features, point);
      const double oa =
          report(confusion(result.labels, f.labels,
                           std::span<const Index>(f.split.test)))
              .oa;
      lo = std::min(lo, oa);
      hi = std::max(hi, oa);
    }
    if (hi - lo > worst_range) {
      worst_range = hi - lo;
      worst_param = parameter;
    }
    ensure(hi - lo <= 0.02, std::string("OA range for ") + parameter +
                                " is " + fmt(hi - lo) + " > 0.02");
  }
  detail = "worst range " + fmt(worst_range) + " (" + worst_param + ")";
}

// ---------------------------------------------------------------------------
// criteria 7 and 8: optional real-data reproduction
// ---------------------------------------------------------------------------

struct RealRun {
  double oa_mean = 0.0;
  double aa_mean = 0.0;
  double kappa_mean = 0.0;
};

RealRun real_data_protocol(const std::string& cube_path,
                           const std::string& gt_path, Index filter_size,
                           bool crf_enabled) {
  const auto cube = load_cube<double>(cube_path);
  const auto gt = load_labels(gt_path);
  require_contiguous_classes(gt);
  const auto normalized = normalize(cube);

  std::vector<MetricsReport> runs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto split = split_train_test(gt, 200, seed);
    auto [set, remap] = build_sample_set(normalized, gt,
                                         std::span<const Index>(split.train));
    AugmentConfig aug;
    aug.virtual_per_class = 200;
    aug.seed = seed;
    const auto augmented = generate_virtual_samples(set, aug);
    TrainConfig cfg;
    cfg.seed = seed;
    const auto trained = train(augmented, cfg);
    auto [features, probs] = extract(trained.params, normalized);
    LabelMap pred;
    if (crf_enabled) {
      CrfParams params = preset_params("pavia");
      params.filter_size = filter_size;
      pred = infer(probs, features, params).labels;
    } else {
      pred = argmax_labels(probs);
    }
    runs.push_back(
        report(confusion(pred, gt, std::span<const Index>(split.test))));
  }
  const auto stats = aggregate_metrics(runs);
  return {stats.mean[0], stats.mean[1], stats.mean[2]};
}

void criterion_pavia(std::string& detail) {
  const char* cube = std::getenv("HSICRF_PAVIA_CUBE");
  const char* gt = std::getenv("HSICRF_PAVIA_GT");
  if (!cube || !gt)
    throw std::invalid_argument(
        "set HSICRF_PAVIA_CUBE and HSICRF_PAVIA_GT to run");
  const auto dml = real_data_protocol(cube, gt, 7, false);
  const auto crf = real_data_protocol(cube, gt, 7, true);
  detail = "dml OA " + fmt(dml.oa_mean) + ", crf OA " + fmt(crf.oa_mean) +
           ", AA " + fmt(crf.aa_mean) + ", kappa " + fmt(crf.kappa_mean);
  ensure(std::abs(dml.oa_mean - 0.9367) <= 0.015,
         "DML OA " + fmt(dml.oa_mean) + " outside 0.9367 +/- 0.015");
  ensure(std::abs(crf.oa_mean - 0.9910) <= 0.010,
         "DML-CRF OA " + fmt(crf.oa_mean) + " outside 0.9910 +/- 0.010");
  ensure(std::abs(crf.aa_mean - 0.9872) <= 0.010,
         "DML-CRF AA " + fmt(crf.aa_mean) + " outside 0.9872 +/- 0.010");
  ensure(std::abs(crf.kappa_mean - 0.9880) <= 0.012,
         "kappa " + fmt(crf.kappa_mean) + " outside 0.9880 +/- 0.012");
}

void criterion_salinas(std::string& detail) {
  const char* cube = std::getenv("HSICRF_SALINAS_CUBE");
  const char* gt = std::getenv("HSICRF_SALINAS_GT");
  if (!cube || !gt)
    throw std::invalid_argument(
        "set HSICRF_SALINAS_CUBE and HSICRF_SALINAS_GT to run");
  const auto crf = real_data_protocol(cube, gt, 15, true);
  detail = "crf OA " + fmt(crf.oa_mean) + ", AA " + fmt(crf.aa_mean);
  ensure(std::abs(crf.oa_mean - 0.9812) <= 0.010,
         "OA " + fmt(crf.oa_mean) + " outside 0.9812 +/- 0.010");
  ensure(std::abs(crf.aa_mean - 0.9926) <= 0.008,
         "AA " + fmt(crf.aa_mean) + " outside 0.9926 +/- 0.008");
}

// ---------------------------------------------------------------------------
// criterion 9: timing sanity
// ---------------------------------------------------------------------------

void criterion_timing(std::string& detail) {
  const auto instances = random_instances(1, 610, 340, 9, 32, 777);
  CrfParams params = preset_params("pavia");  // k = 7, 5 iterations

  const double t0 = now_seconds();
  const auto result = infer(instances[0].prob, instances[0].features, params);
  const double elapsed = now_seconds() - t0;
  ensure(result.labels.pixel_count() == 610 * 340, "wrong output size");
  detail = "610x340, C=9, k=7, 5 iterations: " + fmt(elapsed) + " s";
  if (elapsed > 60.0)
    std::printf(
        "       note: above the 60 s desktop budget on this machine\n");
  ensure(elapsed <= 300.0, "CRF inference took " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<void(std::string&)> body;
  double budget_seconds;  // 0: no budget
  bool optional;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "gradient oracle vs central finite differences",
       criterion_gradient_oracle, 10.0, false},
      {2, "windowed inference matches the dense oracle",
       criterion_dense_oracle, 10.0, false},
      {3, "degenerate CRF returns the unary argmax",
       criterion_degenerate_identity, 0.0, false},
      {4, "center loss tightens features and CRF does not hurt OA",
       criterion_center_loss_effect, 300.0, false},
      {5, "metric formulas reproduce the worked examples",
       criterion_metric_formulas, 0.0, false},
      {6, "OA robust to +/-4x sweeps of the five CRF parameters",
       criterion_robustness_sweep, 0.0, false},
      {7, "Pavia University reproduction", criterion_pavia, 0.0, true},
      {8, "Salinas reproduction", criterion_salinas, 0.0, true},
      {9, "Pavia-sized CRF timing", criterion_timing, 0.0, false},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    const double t0 = now_seconds();
    try {
      criterion.body(detail);
      const double elapsed = now_seconds() - t0;
      if (criterion.budget_seconds > 0 &&
          elapsed > criterion.budget_seconds) {
        std::printf("[FAIL] criterion %d: %s — exceeded %.0f s budget "
                    "(%.1f s)\n",
                    criterion.id, criterion.name, criterion.budget_seconds,
                    elapsed);
        ++failures;
        continue;
      }
      std::printf("[PASS] criterion %d: %s (%s; %.1f s)\n", criterion.id,
                  criterion.name, detail.c_str(), elapsed);
    } catch (const std::invalid_argument& e) {
      std::printf("[SKIP] criterion %d: %s — %s\n", criterion.id,
                  criterion.name, e.what());
    } catch (const std::exception& e) {
      std::printf("[FAIL] criterion %d: %s — %s\n", criterion.id,
                  criterion.name, e.what());
      if (!criterion.optional) ++failures;
    }
  }
  if (failures > 0) {
    std::printf("%d mandatory criteria failed\n", failures);
    return 1;
  }
  std::printf("all mandatory criteria passed\n");
  return 0;
}
