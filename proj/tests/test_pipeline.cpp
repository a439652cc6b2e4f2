#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hsicrf/pipeline.hpp"
#include "test_util.hpp"

using namespace hsicrf;
using hsicrf_test::TempDir;

namespace {

std::string raw_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small scene + cheap training configuration shared by the pipeline tests.
SynthArgs small_scene(const std::string& out, std::uint64_t seed = 1) {
  SynthArgs args;
  args.out_dir = out;
  args.scene.height = 40;
  args.scene.width = 40;
  args.scene.bands = 8;
  args.scene.classes = 4;
  args.scene.noise_level = 1.0;
  args.scene.seed = seed;
  return args;
}

TrainArgs small_train(const std::string& scene_dir, const std::string& out) {
  TrainArgs args;
  args.cube_path = (std::filesystem::path(scene_dir) / names::cube).string();
  args.labels_path =
      (std::filesystem::path(scene_dir) / names::labels).string();
  args.out_dir = out;
  args.per_class = 60;
  args.train.epochs = 80;
  args.train.batch_size = 32;
  args.train.hidden_dims = {32, 16};
  args.train.feature_dim = 16;
  args.train.seed = 5;
  return args;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HSICRF_CLI_PATH) + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("presets pin the anchors and filter sizes") {
  const auto pavia = preset_params("pavia");
  CHECK(pavia.w_app == 10.0);
  CHECK(pavia.w_smo == 3.0);
  CHECK(pavia.theta_alpha == 0.1);
  CHECK(pavia.theta_beta == 80.0);
  CHECK(pavia.theta_gamma == 3.0);
  CHECK(pavia.filter_size == 7);
  CHECK(preset_params("salinas").filter_size == 15);
  CHECK_THROWS_AS(preset_params("indiana"), DataError);
}

TEST_CASE("synth writes the default 64x64x16 five-class scene") {
  TempDir tmp("synth");
  SynthArgs args;
  args.out_dir = tmp.str();
  std::ostringstream log;
  cmd_synth(args, log);

  const auto cube = load_cube<double>(tmp.file("cube.hsic"));
  CHECK(cube.height == 64);
  CHECK(cube.width == 64);
  CHECK(cube.bands == 16);
  const auto labels = load_labels(tmp.file("labels.pgm"));
  CHECK(labels.max_label() == 5);
  CHECK(labels.height == 64);
}

TEST_CASE("synth is deterministic and honors zero noise") {
  TempDir a("synth_a"), b("synth_b");
  auto args_a = small_scene(a.str(), 9);
  auto args_b = small_scene(b.str(), 9);
  std::ostringstream log;
  cmd_synth(args_a, log);
  cmd_synth(args_b, log);
  CHECK(raw_bytes(a.file("cube.hsic")) == raw_bytes(b.file("cube.hsic")));
  CHECK(raw_bytes(a.file("labels.pgm")) == raw_bytes(b.file("labels.pgm")));

  TempDir c("synth_c");
  auto args_c = small_scene(c.str());
  args_c.scene.noise_level = 0.0;
  cmd_synth(args_c, log);
  const auto cube = load_cube<double>(c.file("cube.hsic"));
  const auto labels = load_labels(c.file("labels.pgm"));
  for (Index p = 1; p < cube.pixel_count(); ++p) {
    if (labels.at(p) == labels.at(0))
      CHECK(cube.spectrum(p) == cube.spectrum(0));
  }
}

TEST_CASE("train reaches the training accuracy bar and is reproducible") {
  TempDir scene("scene"), out_a("train_a"), out_b("train_b");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);

  auto args = small_train(scene.str(), out_a.str());
  const auto outcome = cmd_train(args, log);
  CHECK(outcome.class_count == 4);
  CHECK(outcome.real_samples == 4 * 60);
  CHECK(outcome.virtual_samples == 4 * 60);  // default: match per_class
  CHECK(outcome.train_accuracy >= 0.95);

  args.out_dir = out_b.str();
  cmd_train(args, log);
  CHECK(raw_bytes(out_a.file("model.dmlw1")) ==
        raw_bytes(out_b.file("model.dmlw1")));

  // Loss history: header plus one row per epoch.
  std::ifstream loss(out_a.file("loss.csv"));
  std::string line;
  Index rows = 0;
  while (std::getline(loss, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 81);
}

TEST_CASE("train rejects unsatisfiable per-class requests") {
  TempDir scene("scene_small"), out("train_fail");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);
  auto args = small_train(scene.str(), out.str());
  args.per_class = 100000;
  CHECK_THROWS_AS(cmd_train(args, log), InsufficientDataError);
}

TEST_CASE("infer without CRF writes the probability argmax") {
  TempDir scene("scene2"), model("model2"), out("infer2");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);
  auto targs = small_train(scene.str(), model.str());
  targs.train.epochs = 40;
  cmd_train(targs, log);

  InferArgs args;
  args.cube_path = scene.file("cube.hsic");
  args.checkpoint_path = model.file("model.dmlw1");
  args.out_dir = out.str();
  args.crf_enabled = false;
  args.workers = 2;
  const auto outcome = cmd_infer(args, log);

  CHECK(outcome.extract_seconds >= 0.0);
  CHECK(outcome.crf_seconds >= 0.0);
  CHECK(outcome.total_seconds >=
        outcome.extract_seconds + outcome.crf_seconds - 1e-9);
  CHECK(outcome.total_seconds <=
        outcome.extract_seconds + outcome.crf_seconds + 0.25);
  CHECK(log.str().find("extract_s=") != std::string::npos);

  // pred.pgm must equal the per-pixel argmax of the exported marginals.
  const auto pred = load_labels(out.file("pred.pgm"));
  const auto marg = load_cube<double>(out.file("marginals.hsic"));
  for (Index p = 0; p < marg.pixel_count(); ++p) {
    Index best;
    marg.values.col(p).maxCoeff(&best);
    CHECK(pred.at(p) == static_cast<int>(best) + 1);
  }
}

TEST_CASE("infer with CRF smooths and keeps valid marginals") {
  TempDir scene("scene3"), model("model3"), out_on("crf_on"),
      out_off("crf_off");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);
  auto targs = small_train(scene.str(), model.str());
  targs.train.epochs = 40;
  cmd_train(targs, log);

  InferArgs args;
  args.cube_path = scene.file("cube.hsic");
  args.checkpoint_path = model.file("model.dmlw1");
  args.out_dir = out_on.str();
  args.crf.filter_size = 5;
  cmd_infer(args, log);
  args.out_dir = out_off.str();
  args.crf_enabled = false;
  cmd_infer(args, log);

  const auto marg = load_cube<double>(out_on.file("marginals.hsic"));
  CHECK(((marg.values.colwise().sum().array() - 1.0).abs() < 1e-5).all());

  // CRF should fix at least as many pixels as it breaks on a blocky scene.
  const auto gt = load_labels(scene.file("labels.pgm"));
  const auto on = load_labels(out_on.file("pred.pgm"));
  const auto off = load_labels(out_off.file("pred.pgm"));
  Index hits_on = 0, hits_off = 0;
  for (Index p = 0; p < gt.pixel_count(); ++p) {
    hits_on += on.at(p) == gt.at(p);
    hits_off += off.at(p) == gt.at(p);
  }
  CHECK(hits_on >= hits_off);
}

TEST_CASE("eval in plain mode scores a prediction file") {
  TempDir scene("scene4"), out("eval4");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);

  EvalArgs args;
  args.labels_path = scene.file("labels.pgm");
  args.pred_path = scene.file("labels.pgm");  // pred == gt
  args.out_dir = out.str();
  const auto outcome = cmd_eval(args, log);
  CHECK(outcome.report.oa == 1.0);
  CHECK(outcome.report.aa == 1.0);
  CHECK(outcome.report.kappa == 1.0);
  CHECK(!outcome.repeated);

  const auto csv = raw_bytes(out.file("metrics.csv"));
  CHECK(csv.find("metric,value") == 0);
  CHECK(csv.find("oa,1") != std::string::npos);
}

TEST_CASE("eval repeat mode aggregates train+infer runs") {
  TempDir scene("scene5"), out("eval5");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);

  EvalArgs args;
  args.labels_path = scene.file("labels.pgm");
  args.cube_path = scene.file("cube.hsic");
  args.out_dir = out.str();
  args.repeats = 2;
  args.train_args = small_train(scene.str(), "");
  args.train_args.train.epochs = 30;
  args.crf.filter_size = 5;
  args.workers = 2;
  const auto outcome = cmd_eval(args, log);

  CHECK(outcome.repeated);
  CHECK(outcome.stats.names.front() == "oa");
  CHECK(outcome.stats.mean.size() == outcome.stats.stddev.size());
  CHECK(outcome.stats.mean[0] > 0.5);

  const auto csv = raw_bytes(out.file("metrics.csv"));
  CHECK(csv.find("metric,mean,std") == 0);
}

TEST_CASE("sweep rows, the k=1 degenerate point, and feature caching") {
  TempDir scene("scene6"), model("model6"), out("sweep6"), out2("sweep6b"),
      eval_dir("eval6"), infer_dir("infer6");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);
  auto targs = small_train(scene.str(), model.str());
  targs.train.epochs = 40;
  cmd_train(targs, log);

  SweepArgs args;
  args.cube_path = scene.file("cube.hsic");
  args.labels_path = scene.file("labels.pgm");
  args.checkpoint_path = model.file("model.dmlw1");
  args.out_dir = out.str();
  args.parameter = "k";
  args.values = {1, 3, 5, 7};
  args.workers = 2;
  const auto rows = cmd_sweep(args, log);
  REQUIRE(rows.size() == 4);

  // k = 1: empty windows, equal to the CRF-off evaluation.
  InferArgs iargs;
  iargs.cube_path = scene.file("cube.hsic");
  iargs.checkpoint_path = model.file("model.dmlw1");
  iargs.out_dir = infer_dir.str();
  iargs.crf_enabled = false;
  cmd_infer(iargs, log);
  EvalArgs eargs;
  eargs.labels_path = scene.file("labels.pgm");
  eargs.pred_path = infer_dir.file("pred.pgm");
  eargs.out_dir = eval_dir.str();
  const auto plain = cmd_eval(eargs, log);
  CHECK(rows[0].value == 1.0);
  CHECK(rows[0].oa == plain.report.oa);
  CHECK(rows[0].aa == plain.report.aa);

  // Cached features must not change anything.
  args.out_dir = out2.str();
  args.cache_features = false;
  const auto rows2 = cmd_sweep(args, log);
  CHECK(raw_bytes(out.file("sweep.csv")) == raw_bytes(out2.file("sweep.csv")));

  CHECK_THROWS_AS(
      cmd_sweep(
          [&] {
            auto bad = args;
            bad.parameter = "nonsense";
            return bad;
          }(),
          log),
      DataError);
}

TEST_CASE("norm scope train changes the statistics basis") {
  TempDir scene("scene7"), full_dir("train7f"), train_dir("train7t");
  std::ostringstream log;
  cmd_synth(small_scene(scene.str()), log);

  auto args = small_train(scene.str(), full_dir.str());
  args.train.epochs = 10;
  cmd_train(args, log);
  args.out_dir = train_dir.str();
  args.norm_scope = NormScope::train;
  cmd_train(args, log);
  CHECK(raw_bytes(full_dir.file("model.dmlw1")) !=
        raw_bytes(train_dir.file("model.dmlw1")));
}

// ---------------------------------------------------------------------------
// command-line binary: exit codes and an end-to-end chain
// ---------------------------------------------------------------------------

TEST_CASE("cli exit codes") {
  TempDir tmp("cli_codes");
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("synth") == 1);  // missing --out
  CHECK(run_cli("train --cube " + tmp.file("absent.hsic") + " --labels " +
                tmp.file("absent.pgm") + " --out " + tmp.str()) == 2);
  CHECK(run_cli("synth --out " + tmp.str() + " --height 32 --width 32 "
                "--bands 6 --classes 3 --noise_level 0.8 --seed 3") == 0);
  CHECK(run_cli("train --cube " + tmp.file("cube.hsic") + " --labels " +
                tmp.file("labels.pgm") + " --out " + tmp.str() +
                " --per_class 40 --epochs 4 --hidden_dims 16,8 "
                "--feature_dim 8 --learning_rate 1e14") == 3);
  CHECK(run_cli("sweep --cube " + tmp.file("cube.hsic") + " --labels " +
                tmp.file("labels.pgm") + " --checkpoint " +
                tmp.file("model.dmlw1") + " --out " + tmp.str() +
                " --param nonsense --values 1") == 1);
}

TEST_CASE("cli end-to-end chain with a preset and a config file") {
  TempDir tmp("cli_chain");
  const std::string scene = tmp.str();

  // Config file for synth; the explicit flag overrides the file value.
  std::ofstream cfg(tmp.file("synth.cfg"));
  cfg << "height = 32\nwidth = 32\nbands = 6\nclasses = 3\n"
      << "noise_level = 0.8\nseed = 7\nout = " << scene << "\n";
  cfg.close();
  CHECK(run_cli("synth --config " + tmp.file("synth.cfg") + " --height 36") ==
        0);
  const auto cube = load_cube<double>(tmp.file("cube.hsic"));
  CHECK(cube.height == 36);  // flag wins
  CHECK(cube.width == 32);   // file value

  CHECK(run_cli("train --cube " + tmp.file("cube.hsic") + " --labels " +
                tmp.file("labels.pgm") + " --out " + scene +
                " --per_class 40 --epochs 25 --hidden_dims 16,8 "
                "--feature_dim 8 --batch_size 32 --seed 2") == 0);
  CHECK(run_cli("infer --cube " + tmp.file("cube.hsic") + " --checkpoint " +
                tmp.file("model.dmlw1") + " --out " + scene +
                " --preset pavia --k 5 --workers 2") == 0);
  CHECK(run_cli("eval --labels " + tmp.file("labels.pgm") + " --pred " +
                tmp.file("pred.pgm") + " --out " + scene) == 0);
  CHECK(std::filesystem::exists(tmp.file("metrics.csv")));
  CHECK(std::filesystem::exists(tmp.file("marginals.hsic")));
}
