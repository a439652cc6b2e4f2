// Command-line front end: synth | train | infer | eval | sweep.
//
// Exit codes: 0 success, 1 usage error, 2 data/shape error, 3 divergence.

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hsicrf/pipeline.hpp"

namespace {

using hsicrf::CrfParams;
using hsicrf::Index;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Config files are flat `key = value` lines ('#' starts a comment); each key
// is an option name without the leading dashes. Keys already given as flags
// on the command line are skipped, so explicit flags win.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw hsicrf::IoError("cannot open config file: " + config_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw hsicrf::FormatError(config_path + ":" + std::to_string(line_no) +
                                ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw hsicrf::FormatError(config_path + ":" + std::to_string(line_no) +
                                ": empty key");
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) given = true;
    if (given) continue;
    args.push_back(flag);
    args.push_back(value);
  }
  return args;
}

struct CrfFlagSet {
  CLI::Option* w_app = nullptr;
  CLI::Option* w_smo = nullptr;
  CLI::Option* theta_alpha = nullptr;
  CLI::Option* theta_beta = nullptr;
  CLI::Option* theta_gamma = nullptr;
  CLI::Option* k = nullptr;
  CLI::Option* iterations = nullptr;
  std::string window_shape = "square";
  std::string preset;
  CrfParams values;
};

// The preset fixes the five kernel parameters and the filter size; flags the
// user passed explicitly still win.
void add_crf_flags(CLI::App* cmd, CrfFlagSet& flags) {
  flags.w_app = cmd->add_option("--w_app", flags.values.w_app,
                                "appearance kernel weight");
  flags.w_smo = cmd->add_option("--w_smo", flags.values.w_smo,
                                "smoothness kernel weight");
  flags.theta_alpha = cmd->add_option("--theta_alpha",
                                      flags.values.theta_alpha,
                                      "appearance position scale");
  flags.theta_beta = cmd->add_option("--theta_beta", flags.values.theta_beta,
                                     "appearance feature scale");
  flags.theta_gamma = cmd->add_option("--theta_gamma",
                                      flags.values.theta_gamma,
                                      "smoothness position scale");
  flags.k = cmd->add_option("--k", flags.values.filter_size,
                            "odd filter size (window edge length)");
  flags.iterations = cmd->add_option("--iterations", flags.values.iterations,
                                     "mean-field iterations");
  cmd->add_option("--window_shape", flags.window_shape,
                  "window mask: square or diamond")
      ->check(CLI::IsMember({"square", "diamond"}));
  cmd->add_option("--preset", flags.preset,
                  "parameter preset: pavia (k=7) or salinas (k=15)")
      ->check(CLI::IsMember({"pavia", "salinas"}));
}

CrfParams resolve_crf(const CrfFlagSet& flags) {
  CrfParams params;
  if (!flags.preset.empty()) params = hsicrf::preset_params(flags.preset);
  if (flags.w_app->count()) params.w_app = flags.values.w_app;
  if (flags.w_smo->count()) params.w_smo = flags.values.w_smo;
  if (flags.theta_alpha->count()) params.theta_alpha = flags.values.theta_alpha;
  if (flags.theta_beta->count()) params.theta_beta = flags.values.theta_beta;
  if (flags.theta_gamma->count()) params.theta_gamma = flags.values.theta_gamma;
  if (flags.k->count()) params.filter_size = flags.values.filter_size;
  if (flags.iterations->count()) params.iterations = flags.values.iterations;
  params.window_shape = flags.window_shape == "diamond"
                            ? hsicrf::WindowShape::diamond
                            : hsicrf::WindowShape::square;
  return params;
}

struct TrainFlagSet {
  hsicrf::TrainArgs args;
  std::string center_loss_form = "norm";
  std::string norm_scope = "full";
};

void add_train_flags(CLI::App* cmd, TrainFlagSet& flags) {
  auto& t = flags.args.train;
  cmd->add_option("--per_class", flags.args.per_class,
                  "training pixels per class");
  cmd->add_option("--lambda", t.lambda, "center loss weight");
  cmd->add_option("--center_rate", t.center_rate, "center update rate");
  cmd->add_option("--learning_rate", t.learning_rate, "SGD learning rate");
  cmd->add_option("--momentum", t.momentum, "SGD momentum");
  cmd->add_option("--batch_size", t.batch_size, "minibatch size");
  cmd->add_option("--epochs", t.epochs, "training epochs");
  cmd->add_option("--center_loss_form", flags.center_loss_form,
                  "center distance form: norm or squared")
      ->check(CLI::IsMember({"norm", "squared"}));
  cmd->add_option("--hidden_dims", t.hidden_dims, "hidden layer widths")
      ->delimiter(',');
  cmd->add_option("--feature_dim", t.feature_dim, "feature vector length");
  cmd->add_option("--virtual_per_class", flags.args.virtual_per_class,
                  "virtual samples per class (negative: match per_class)");
  cmd->add_option("--mix_low", flags.args.mix_low, "lower bound of mix q");
  cmd->add_option("--mix_high", flags.args.mix_high, "upper bound of mix q");
  cmd->add_option("--norm_scope", flags.norm_scope,
                  "normalization statistics: full cube or train pixels")
      ->check(CLI::IsMember({"full", "train"}));
}

void resolve_train(TrainFlagSet& flags) {
  flags.args.train.center_loss_form = flags.center_loss_form == "squared"
                                          ? hsicrf::CenterLossForm::squared
                                          : hsicrf::CenterLossForm::norm;
  flags.args.norm_scope = flags.norm_scope == "train"
                              ? hsicrf::NormScope::train
                              : hsicrf::NormScope::full;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral classifier with center loss and windowed mean-field "
               "CRF refinement for hyperspectral cubes"};
  app.require_subcommand(1);

  // --- synth -----------------------------------------------------------
  hsicrf::SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  std::string synth_config;
  synth->add_option("--config", synth_config, "key = value config file");
  synth->add_option("--out", synth_args.out_dir, "output directory")
      ->required();
  synth->add_option("--height", synth_args.scene.height, "scene height");
  synth->add_option("--width", synth_args.scene.width, "scene width");
  synth->add_option("--bands", synth_args.scene.bands, "spectral bands");
  synth->add_option("--classes", synth_args.scene.classes, "class count");
  synth->add_option("--noise_level", synth_args.scene.noise_level,
                    "spectral noise sigma");
  synth->add_option("--seed", synth_args.scene.seed, "rng seed");
  synth->callback([&] { hsicrf::cmd_synth(synth_args); });

  // --- train -----------------------------------------------------------
  TrainFlagSet train_flags;
  auto* train = app.add_subcommand("train", "train the feature network");
  std::string train_config;
  train->add_option("--config", train_config, "key = value config file");
  train->add_option("--cube", train_flags.args.cube_path, "HSIC1 cube")
      ->required();
  train->add_option("--labels", train_flags.args.labels_path, "P5 label map")
      ->required();
  train->add_option("--out", train_flags.args.out_dir, "output directory")
      ->required();
  train->add_option("--seed", train_flags.args.train.seed, "rng seed");
  add_train_flags(train, train_flags);
  train->callback([&] {
    resolve_train(train_flags);
    hsicrf::cmd_train(train_flags.args);
  });

  // --- infer -----------------------------------------------------------
  hsicrf::InferArgs infer_args;
  CrfFlagSet infer_crf;
  std::string infer_crf_mode = "on";
  std::string infer_norm_scope = "full";
  auto* infer = app.add_subcommand("infer", "classify a cube");
  std::string infer_config;
  infer->add_option("--config", infer_config, "key = value config file");
  infer->add_option("--cube", infer_args.cube_path, "HSIC1 cube")->required();
  infer->add_option("--checkpoint", infer_args.checkpoint_path,
                    "DMLW1 checkpoint")
      ->required();
  infer->add_option("--out", infer_args.out_dir, "output directory")
      ->required();
  infer->add_option("--crf", infer_crf_mode, "CRF refinement: on or off")
      ->check(CLI::IsMember({"on", "off"}));
  infer->add_option("--workers", infer_args.workers,
                    "worker threads (0 = all cores)");
  infer->add_option("--norm_scope", infer_norm_scope,
                    "normalization statistics: full or train")
      ->check(CLI::IsMember({"full", "train"}));
  infer->add_option("--labels", infer_args.labels_path,
                    "label map (only for --norm_scope train)");
  infer->add_option("--per_class", infer_args.per_class,
                    "split size (only for --norm_scope train)");
  infer->add_option("--seed", infer_args.seed,
                    "split seed (only for --norm_scope train)");
  add_crf_flags(infer, infer_crf);
  infer->callback([&] {
    infer_args.crf = resolve_crf(infer_crf);
    infer_args.crf_enabled = infer_crf_mode == "on";
    infer_args.norm_scope = infer_norm_scope == "train"
                                ? hsicrf::NormScope::train
                                : hsicrf::NormScope::full;
    hsicrf::cmd_infer(infer_args);
  });

  // --- eval ------------------------------------------------------------
  hsicrf::EvalArgs eval_args;
  TrainFlagSet eval_train_flags;
  CrfFlagSet eval_crf;
  std::string eval_crf_mode = "on";
  auto* eval = app.add_subcommand(
      "eval", "score predictions, or re-run train+infer over repeated seeds");
  std::string eval_config;
  eval->add_option("--config", eval_config, "key = value config file");
  eval->add_option("--labels", eval_args.labels_path, "groundtruth label map")
      ->required();
  eval->add_option("--out", eval_args.out_dir, "output directory")->required();
  eval->add_option("--pred", eval_args.pred_path,
                   "predicted label map (plain mode)");
  eval->add_option("--cube", eval_args.cube_path,
                   "HSIC1 cube (enables repeat mode)");
  eval->add_option("--repeats", eval_args.repeats, "number of repeated runs");
  eval->add_option("--seed", eval_train_flags.args.train.seed,
                   "base seed; run r uses seed + r");
  eval->add_option("--crf", eval_crf_mode, "CRF refinement: on or off")
      ->check(CLI::IsMember({"on", "off"}));
  eval->add_option("--workers", eval_args.workers,
                   "worker threads (0 = all cores)");
  add_train_flags(eval, eval_train_flags);
  add_crf_flags(eval, eval_crf);
  eval->callback([&] {
    resolve_train(eval_train_flags);
    eval_args.train_args = eval_train_flags.args;
    eval_args.crf = resolve_crf(eval_crf);
    eval_args.crf_enabled = eval_crf_mode == "on";
    hsicrf::cmd_eval(eval_args);
  });

  // --- sweep -----------------------------------------------------------
  hsicrf::SweepArgs sweep_args;
  CrfFlagSet sweep_crf;
  auto* sweep = app.add_subcommand(
      "sweep", "vary one CRF parameter, evaluate every point");
  std::string sweep_config;
  sweep->add_option("--config", sweep_config, "key = value config file");
  sweep->add_option("--cube", sweep_args.cube_path, "HSIC1 cube")->required();
  sweep->add_option("--labels", sweep_args.labels_path, "groundtruth labels")
      ->required();
  sweep->add_option("--checkpoint", sweep_args.checkpoint_path,
                    "DMLW1 checkpoint")
      ->required();
  sweep->add_option("--out", sweep_args.out_dir, "output directory")
      ->required();
  sweep->add_option("--param", sweep_args.parameter, "parameter to sweep")
      ->required()
      ->check(CLI::IsMember({"w_app", "w_smo", "theta_alpha", "theta_beta",
                             "theta_gamma", "k"}));
  sweep->add_option("--values", sweep_args.values, "values to sweep over")
      ->required()
      ->delimiter(',');
  sweep->add_option("--workers", sweep_args.workers,
                    "worker threads (0 = all cores)");
  sweep->add_flag("!--no_feature_cache", sweep_args.cache_features,
                  "re-extract features at every sweep point");
  add_crf_flags(sweep, sweep_crf);
  sweep->callback([&] {
    sweep_args.crf = resolve_crf(sweep_crf);
    hsicrf::cmd_sweep(sweep_args);
  });

  try {
    auto args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const hsicrf::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const hsicrf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
