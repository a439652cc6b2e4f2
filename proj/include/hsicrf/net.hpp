#pragma once

#include <cmath>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hsicrf/cube.hpp"
#include "hsicrf/errors.hpp"
#include "hsicrf/io_detail.hpp"
#include "hsicrf/parallel.hpp"
#include "hsicrf/rng.hpp"
#include "hsicrf/sampling.hpp"
#include "hsicrf/types.hpp"

namespace hsicrf {

enum class Activation { identity, relu };
enum class CenterLossForm { norm, squared };

struct TrainConfig {
  double lambda = 1.0;        // weight of the center-loss term
  double center_rate = 0.5;   // damped center update step
  double learning_rate = 0.01;
  double momentum = 0.9;
  Index batch_size = 64;
  Index epochs = 400;
  std::uint64_t seed = 0;
  CenterLossForm center_loss_form = CenterLossForm::norm;
  std::vector<Index> hidden_dims = {128, 64};
  Index feature_dim = 32;
};

// Fully connected stack: input -> hidden (ReLU each) -> feature (linear)
// -> class scores (linear). Weights are out_dim x in_dim.
template <typename Scalar = double>
struct MlpParams {
  std::vector<MatX<Scalar>> weights;
  std::vector<VecX<Scalar>> biases;
  std::vector<Activation> activations;

  Index layer_count() const { return static_cast<Index>(weights.size()); }
  Index input_dim() const { return weights.front().cols(); }
  Index class_count() const { return weights.back().rows(); }
  Index feature_dim() const {
    return weights[weights.size() - 2].rows();
  }

  std::vector<Index> layer_dims() const {
    std::vector<Index> dims{input_dim()};
    for (const auto& w : weights) dims.push_back(w.rows());
    return dims;
  }
};

template <typename Scalar>
struct TrainState {
  MatX<Scalar> centers;  // feature_dim x class_count
  std::vector<MatX<Scalar>> weight_velocity;
  std::vector<VecX<Scalar>> bias_velocity;
  Index epoch = 0;
  std::uint64_t seed = 0;
};

struct EpochLoss {
  double softmax_loss = 0.0;  // per-sample mean over the epoch
  double center_loss = 0.0;
  double joint_loss = 0.0;
};

template <typename Scalar = double>
struct FeatureMap {
  Index height = 0;
  Index width = 0;
  MatX<Scalar> values;  // feature_dim x (height*width)

  Index feature_dim() const { return values.rows(); }
  Index pixel_count() const { return height * width; }
};

template <typename Scalar = double>
struct ProbabilityMap {
  Index height = 0;
  Index width = 0;
  MatX<Scalar> values;  // class_count x (height*width), columns sum to 1

  Index class_count() const { return values.rows(); }
  Index pixel_count() const { return height * width; }
};

// Glorot-uniform weights, zero biases, ReLU on hidden layers only.
template <typename Scalar = double>
MlpParams<Scalar> make_mlp(Index input_dim, std::span<const Index> hidden_dims,
                           Index feature_dim, Index class_count, Rng& rng) {
  std::vector<Index> dims{input_dim};
  for (Index h : hidden_dims) dims.push_back(h);
  dims.push_back(feature_dim);
  dims.push_back(class_count);

  MlpParams<Scalar> params;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const Index fan_in = dims[i];
    const Index fan_out = dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MatX<Scalar> w(fan_out, fan_in);
    for (Index c = 0; c < fan_in; ++c)
      for (Index r = 0; r < fan_out; ++r)
        w(r, c) = static_cast<Scalar>(uniform_real(rng, -bound, bound));
    params.weights.push_back(std::move(w));
    params.biases.push_back(VecX<Scalar>::Zero(fan_out));
    const bool hidden = i + 2 < dims.size() - 1;
    params.activations.push_back(hidden ? Activation::relu
                                        : Activation::identity);
  }
  return params;
}

// Column-wise numerically stable softmax.
template <typename Scalar>
MatX<Scalar> softmax_columns(const MatX<Scalar>& logits) {
  RowVecX<Scalar> colmax = logits.colwise().maxCoeff();
  MatX<Scalar> p = (logits.rowwise() - colmax).array().exp();
  RowVecX<Scalar> sums = p.colwise().sum();
  p.array().rowwise() /= sums.array();
  return p;
}

template <typename Scalar>
struct BatchForward {
  std::vector<MatX<Scalar>> acts;  // acts[0] = input, acts[i+1] = layer i out
  MatX<Scalar> probs;

  const MatX<Scalar>& features() const { return acts[acts.size() - 2]; }
  const MatX<Scalar>& logits() const { return acts.back(); }
};

template <typename Scalar>
BatchForward<Scalar> forward_batch(const MlpParams<Scalar>& params,
                                   const MatX<Scalar>& input) {
  if (input.rows() != params.input_dim())
    throw ShapeError("input dimension " + std::to_string(input.rows()) +
                     " does not match network input " +
                     std::to_string(params.input_dim()));
  BatchForward<Scalar> fwd;
  fwd.acts.reserve(params.weights.size() + 1);
  fwd.acts.push_back(input);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    MatX<Scalar> z =
        (params.weights[i] * fwd.acts.back()).colwise() + params.biases[i];
    if (params.activations[i] == Activation::relu)
      z = z.cwiseMax(Scalar(0));
    fwd.acts.push_back(std::move(z));
  }
  fwd.probs = softmax_columns(fwd.acts.back());
  return fwd;
}

template <typename Scalar = double>
struct ForwardResult {
  VecX<Scalar> feature;
  VecX<Scalar> logits;
  VecX<Scalar> prob;
};

template <typename Scalar>
ForwardResult<Scalar> forward(const MlpParams<Scalar>& params,
                              const VecX<Scalar>& spectrum) {
  auto fwd = forward_batch<Scalar>(params, spectrum);
  return {fwd.features().col(0), fwd.logits().col(0), fwd.probs.col(0)};
}

inline constexpr double kProbFloor = 1e-12;

// -log p of the labeled class, clamped away from zero.
template <typename Scalar>
Scalar softmax_loss(const VecX<Scalar>& prob, int label) {
  return -std::log(
      std::max(prob[label - 1], static_cast<Scalar>(kProbFloor)));
}

// Sum over the batch of the distance between each feature and its class
// center: ||f - c||_2 for the norm form, 0.5*||f - c||^2 for squared.
template <typename Scalar>
Scalar center_loss(const MatX<Scalar>& features, std::span<const int> labels,
                   const MatX<Scalar>& centers, CenterLossForm form) {
  Scalar total = 0;
  for (Index i = 0; i < features.cols(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 1 || label > centers.cols())
      throw StateError("no center for class " + std::to_string(label));
    const Scalar d = (features.col(i) - centers.col(label - 1)).norm();
    total += form == CenterLossForm::norm ? d : Scalar(0.5) * d * d;
  }
  return total;
}

// Damped minibatch center update: for each class c present in the batch,
//   delta_c = sum_{i: y_i = c} (c - f_i) / (1 + count_c),
//   c <- c - center_rate * delta_c.
// Classes absent from the batch are untouched.
template <typename Scalar>
void update_centers(MatX<Scalar>& centers, const MatX<Scalar>& features,
                    std::span<const int> labels, double center_rate) {
  const Index C = centers.cols();
  MatX<Scalar> feat_sum = MatX<Scalar>::Zero(centers.rows(), C);
  VecX<Scalar> count = VecX<Scalar>::Zero(C);
  for (Index i = 0; i < features.cols(); ++i) {
    const Index c = labels[static_cast<std::size_t>(i)] - 1;
    feat_sum.col(c) += features.col(i);
    count[c] += Scalar(1);
  }
  for (Index c = 0; c < C; ++c) {
    if (count[c] == Scalar(0)) continue;
    const VecX<Scalar> delta =
        (count[c] * centers.col(c) - feat_sum.col(c)) / (Scalar(1) + count[c]);
    centers.col(c) -= static_cast<Scalar>(center_rate) * delta;
  }
}

template <typename Scalar>
struct Gradients {
  std::vector<MatX<Scalar>> weights;
  std::vector<VecX<Scalar>> biases;
};

namespace detail {

// d(center term)/d(feature) per sample; the norm form has gradient zero at
// f = c by convention.
template <typename Scalar>
MatX<Scalar> center_gradient(const MatX<Scalar>& features,
                             std::span<const int> labels,
                             const MatX<Scalar>& centers,
                             CenterLossForm form) {
  MatX<Scalar> grad(features.rows(), features.cols());
  for (Index i = 0; i < features.cols(); ++i) {
    const VecX<Scalar> d =
        features.col(i) - centers.col(labels[static_cast<std::size_t>(i)] - 1);
    if (form == CenterLossForm::squared) {
      grad.col(i) = d;
    } else {
      const Scalar n = d.norm();
      grad.col(i) = n > Scalar(0) ? (d / n).eval() : VecX<Scalar>::Zero(d.size());
    }
  }
  return grad;
}

}  // namespace detail

// Analytic gradients of the per-sample mean of the joint loss
//   L = (1/m) * sum_i [ -log p_i(y_i) + lambda * centerterm(f_i, c_{y_i}) ].
// Centers are treated as constants here; they move via update_centers only,
// so the center term back-propagates into the feature layer and below.
template <typename Scalar>
Gradients<Scalar> backward(const MlpParams<Scalar>& params,
                           const BatchForward<Scalar>& fwd,
                           std::span<const int> labels,
                           const MatX<Scalar>& centers,
                           const TrainConfig& config) {
  const Index m = fwd.acts[0].cols();
  const auto L = params.weights.size();

  Gradients<Scalar> grads;
  grads.weights.resize(L);
  grads.biases.resize(L);

  // Softmax + cross entropy: dL/dlogits = (p - onehot) / m.
  MatX<Scalar> delta = fwd.probs;
  for (Index i = 0; i < m; ++i)
    delta(labels[static_cast<std::size_t>(i)] - 1, i) -= Scalar(1);
  delta /= static_cast<Scalar>(m);

  for (std::size_t i = L; i-- > 0;) {
    grads.weights[i] = delta * fwd.acts[i].transpose();
    grads.biases[i] = delta.rowwise().sum();
    if (i == 0) break;
    MatX<Scalar> upstream = params.weights[i].transpose() * delta;
    if (i == L - 1 && config.lambda != 0.0) {
      upstream += (static_cast<Scalar>(config.lambda) /
                   static_cast<Scalar>(m)) *
                  detail::center_gradient(fwd.acts[i], labels, centers,
                                          config.center_loss_form);
    }
    if (params.activations[i - 1] == Activation::relu)
      upstream = upstream.array() *
                 (fwd.acts[i].array() > Scalar(0)).template cast<Scalar>();
    delta = std::move(upstream);
  }
  return grads;
}

template <typename Scalar>
Gradients<Scalar> backward(const MlpParams<Scalar>& params,
                           const MatX<Scalar>& batch,
                           std::span<const int> labels,
                           const MatX<Scalar>& centers,
                           const TrainConfig& config) {
  const auto fwd = forward_batch(params, batch);
  return backward(params, fwd, labels, centers, config);
}

template <typename Scalar = double>
struct TrainResult {
  MlpParams<Scalar> params;
  TrainState<Scalar> state;
  std::vector<EpochLoss> history;
};

// SGD with momentum over shuffled minibatches; centers start at zero and
// follow the damped update after every step. Deterministic in config.seed.
template <typename Scalar = double>
TrainResult<Scalar> train(const SampleSet<Scalar>& set,
                          const TrainConfig& config) {
  if (set.size() == 0) throw InsufficientDataError("empty training set");
  if (set.class_count < 2)
    throw InsufficientDataError("training requires at least two classes");
  if (config.learning_rate <= 0) throw DataError("learning_rate must be > 0");
  if (config.batch_size < 1) throw DataError("batch_size must be >= 1");
  if (config.lambda < 0) throw DataError("lambda must be >= 0");
  if (config.center_rate <= 0 || config.center_rate > 1)
    throw DataError("center_rate must lie in (0, 1]");

  Rng rng = make_rng(config.seed);
  TrainResult<Scalar> result;
  result.params =
      make_mlp<Scalar>(set.dimension, config.hidden_dims, config.feature_dim,
                       set.class_count, rng);
  auto& params = result.params;
  auto& state = result.state;
  state.centers =
      MatX<Scalar>::Zero(config.feature_dim, set.class_count);
  state.seed = config.seed;
  for (const auto& w : params.weights) {
    state.weight_velocity.push_back(MatX<Scalar>::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases)
    state.bias_velocity.push_back(VecX<Scalar>::Zero(b.size()));

  const Index n = set.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));

  MatX<Scalar> batch(set.dimension, std::min(config.batch_size, n));
  std::vector<int> batch_labels;

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_softmax = 0.0;
    double epoch_center = 0.0;

    for (Index start = 0; start < n; start += config.batch_size) {
      const Index m = std::min(config.batch_size, n - start);
      batch.resize(set.dimension, m);
      batch_labels.resize(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) {
        batch.col(i) = set.spectra.col(order[static_cast<std::size_t>(start + i)]);
        batch_labels[static_cast<std::size_t>(i)] =
            set.labels[static_cast<std::size_t>(
                order[static_cast<std::size_t>(start + i)])];
      }

      const auto fwd = forward_batch(params, batch);
      for (Index i = 0; i < m; ++i)
        epoch_softmax += static_cast<double>(softmax_loss<Scalar>(
            fwd.probs.col(i), batch_labels[static_cast<std::size_t>(i)]));
      epoch_center += static_cast<double>(
          center_loss(fwd.features(), batch_labels, state.centers,
                      config.center_loss_form));

      const auto grads = backward(params, fwd, batch_labels, state.centers,
                                  config);
      for (std::size_t l = 0; l < params.weights.size(); ++l) {
        state.weight_velocity[l] =
            static_cast<Scalar>(config.momentum) * state.weight_velocity[l] -
            static_cast<Scalar>(config.learning_rate) * grads.weights[l];
        params.weights[l] += state.weight_velocity[l];
        state.bias_velocity[l] =
            static_cast<Scalar>(config.momentum) * state.bias_velocity[l] -
            static_cast<Scalar>(config.learning_rate) * grads.biases[l];
        params.biases[l] += state.bias_velocity[l];
      }
      update_centers(state.centers, fwd.features(), batch_labels,
                     config.center_rate);
    }

    EpochLoss loss;
    loss.softmax_loss = epoch_softmax / static_cast<double>(n);
    loss.center_loss = epoch_center / static_cast<double>(n);
    loss.joint_loss = loss.softmax_loss + config.lambda * loss.center_loss;
    if (!std::isfinite(loss.joint_loss))
      throw DivergenceError("training diverged at epoch " +
                                std::to_string(epoch),
                            static_cast<long>(epoch));
    result.history.push_back(loss);
    state.epoch = epoch + 1;
  }
  return result;
}

// Per-pixel forward pass over a (normalized) cube. Pixels are processed in
// fixed-size column blocks, so the outputs do not depend on the worker count.
template <typename Scalar>
std::pair<FeatureMap<Scalar>, ProbabilityMap<Scalar>> extract(
    const MlpParams<Scalar>& params, const HsiCube<Scalar>& cube,
    int workers = 0) {
  if (cube.bands != params.input_dim())
    throw ShapeError("cube has " + std::to_string(cube.bands) +
                     " bands, network expects " +
                     std::to_string(params.input_dim()));
  const Index n = cube.pixel_count();
  FeatureMap<Scalar> features{cube.height, cube.width,
                              MatX<Scalar>(params.feature_dim(), n)};
  ProbabilityMap<Scalar> probs{cube.height, cube.width,
                               MatX<Scalar>(params.class_count(), n)};

  constexpr Index kBlock = 4096;
  const Index blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](Index blk) {
    const Index begin = blk * kBlock;
    const Index count = std::min(kBlock, n - begin);
    const auto fwd =
        forward_batch<Scalar>(params, cube.values.middleCols(begin, count));
    features.values.middleCols(begin, count) = fwd.features();
    probs.values.middleCols(begin, count) = fwd.probs;
  });
  return {std::move(features), std::move(probs)};
}

// ============================================================================
// Checkpoint format "DMLW1":
//   5 bytes  magic
//   u32      layer count L
//   L x ( u32 rows, u32 cols, rows*cols f32 weights row-major, rows f32 bias )
//   C x ( F f32 )  class centers, C = rows of the last layer, F = rows of the
//                  second-to-last layer
// All integers and floats little-endian.
// ============================================================================
namespace detail {
inline constexpr char kCheckpointMagic[5] = {'D', 'M', 'L', 'W', '1'};
}

template <typename Scalar>
void write_checkpoint(const MlpParams<Scalar>& params,
                      const MatX<Scalar>& centers, const std::string& path) {
  std::string out;
  out.append(detail::kCheckpointMagic, 5);
  detail::put_u32(out, static_cast<std::uint32_t>(params.weights.size()));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& w = params.weights[l];
    detail::put_u32(out, static_cast<std::uint32_t>(w.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(w.cols()));
    for (Index r = 0; r < w.rows(); ++r)
      for (Index c = 0; c < w.cols(); ++c)
        detail::put_f32(out, static_cast<float>(w(r, c)));
    for (Index r = 0; r < params.biases[l].size(); ++r)
      detail::put_f32(out, static_cast<float>(params.biases[l][r]));
  }
  for (Index c = 0; c < centers.cols(); ++c)
    for (Index r = 0; r < centers.rows(); ++r)
      detail::put_f32(out, static_cast<float>(centers(r, c)));
  detail::write_file(path, out);
}

template <typename Scalar = double>
std::pair<MlpParams<Scalar>, MatX<Scalar>> read_checkpoint(
    const std::string& path) {
  auto bytes = detail::read_file(path);
  if (bytes.size() < 5 ||
      std::memcmp(bytes.data(), detail::kCheckpointMagic, 5) != 0)
    throw FormatError("not a DMLW1 checkpoint: " + path);
  detail::ByteReader rd(bytes.data() + 5, bytes.size() - 5);

  const std::uint32_t layers = rd.u32("layer count");
  if (layers < 2) throw FormatError("checkpoint needs at least 2 layers");

  MlpParams<Scalar> params;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const Index rows = static_cast<Index>(rd.u32("rows"));
    const Index cols = static_cast<Index>(rd.u32("cols"));
    if (rows <= 0 || cols <= 0)
      throw FormatError("checkpoint layer with zero dimension");
    MatX<Scalar> w(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c)
        w(r, c) = static_cast<Scalar>(rd.f32("weights"));
    VecX<Scalar> b(rows);
    for (Index r = 0; r < rows; ++r)
      b[r] = static_cast<Scalar>(rd.f32("bias"));
    if (!params.weights.empty() && cols != params.weights.back().rows())
      throw FormatError("checkpoint layer dimensions are inconsistent");
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
    const bool hidden = l + 2 < layers;
    params.activations.push_back(hidden ? Activation::relu
                                        : Activation::identity);
  }

  const Index C = params.class_count();
  const Index F = params.feature_dim();
  if (rd.remaining() != static_cast<std::size_t>(C * F) * 4)
    throw LengthError("checkpoint center block has wrong length");
  MatX<Scalar> centers(F, C);
  for (Index c = 0; c < C; ++c)
    for (Index r = 0; r < F; ++r)
      centers(r, c) = static_cast<Scalar>(rd.f32("centers"));
  return {std::move(params), std::move(centers)};
}

inline std::string loss_history_csv(const std::vector<EpochLoss>& history) {
  std::ostringstream os;
  os << "epoch,softmax_loss,center_loss,joint_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    os << e << "," << detail::format_double(history[e].softmax_loss) << ","
       << detail::format_double(history[e].center_loss) << ","
       << detail::format_double(history[e].joint_loss) << "\n";
  return os.str();
}

}  // namespace hsicrf
