#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "hsicrf/cube.hpp"
#include "hsicrf/errors.hpp"
#include "hsicrf/labels.hpp"
#include "hsicrf/net.hpp"
#include "hsicrf/parallel.hpp"
#include "hsicrf/types.hpp"

namespace hsicrf {

enum class WindowShape { square, diamond };

// Pairwise-potential parameters. The appearance kernel measures positions on
// the normalized [0,1] image frame by default while the smoothness kernel
// uses raw pixel offsets; both scalings can be flipped.
struct CrfParams {
  double w_app = 10.0;
  double w_smo = 3.0;
  double theta_alpha = 0.1;
  double theta_beta = 80.0;
  double theta_gamma = 3.0;
  Index filter_size = 7;  // odd window edge length k
  Index iterations = 5;
  WindowShape window_shape = WindowShape::square;
  bool normalized_app_positions = true;
  bool normalized_smo_positions = false;
};

inline void validate_crf_params(const CrfParams& p) {
  if (p.w_app < 0 || p.w_smo < 0)
    throw DataError("kernel weights must be >= 0");
  if (p.theta_alpha <= 0 || p.theta_beta <= 0 || p.theta_gamma <= 0)
    throw DataError("kernel length scales must be > 0");
  if (p.filter_size < 1 || p.filter_size % 2 == 0)
    throw DataError("filter_size must be odd and positive");
  if (p.iterations < 1) throw DataError("iterations must be >= 1");
}

// Per-pixel label costs, -log probability.
template <typename Scalar = double>
struct UnaryField {
  Index height = 0;
  Index width = 0;
  MatX<Scalar> costs;  // class_count x (height*width)

  Index class_count() const { return costs.rows(); }
  Index pixel_count() const { return height * width; }
};

// Mean-field marginals; every column is a distribution over classes.
template <typename Scalar = double>
struct MarginalField {
  Index height = 0;
  Index width = 0;
  MatX<Scalar> q;  // class_count x (height*width)

  Index class_count() const { return q.rows(); }
  Index pixel_count() const { return height * width; }
};

template <typename Scalar>
void validate_probability_map(const ProbabilityMap<Scalar>& prob) {
  if (!prob.values.allFinite())
    throw DataError("probability map contains non-finite values");
  if ((prob.values.array() < Scalar(0)).any())
    throw DataError("probability map contains negative values");
  RowVecX<Scalar> sums = prob.values.colwise().sum();
  if (((sums.array() - Scalar(1)).abs() > Scalar(1e-6)).any())
    throw DataError("probability map columns do not sum to 1");
}

template <typename Scalar>
UnaryField<Scalar> unary_from_prob(const ProbabilityMap<Scalar>& prob) {
  validate_probability_map(prob);
  UnaryField<Scalar> unary{prob.height, prob.width, MatX<Scalar>()};
  unary.costs =
      -prob.values.cwiseMax(static_cast<Scalar>(kProbFloor)).array().log();
  return unary;
}

// Gaussian edge kernels for one pixel pair, evaluated on caller-provided
// positions (both kernels see the same position distance here):
//   k_app = exp(-|pi-pj|^2 / (2 ta^2) - |fi-fj|^2 / (2 tb^2))
//   k_smo = exp(-|pi-pj|^2 / (2 tg^2))
template <typename Scalar>
std::pair<Scalar, Scalar> kernel_values(const Vec2<Scalar>& pos_i,
                                        const Vec2<Scalar>& pos_j,
                                        const VecX<Scalar>& f_i,
                                        const VecX<Scalar>& f_j,
                                        const CrfParams& params) {
  const Scalar d2p = (pos_i - pos_j).squaredNorm();
  const Scalar d2f = (f_i - f_j).squaredNorm();
  const Scalar ta2 = static_cast<Scalar>(params.theta_alpha * params.theta_alpha);
  const Scalar tb2 = static_cast<Scalar>(params.theta_beta * params.theta_beta);
  const Scalar tg2 = static_cast<Scalar>(params.theta_gamma * params.theta_gamma);
  const Scalar k_app = std::exp(-d2p / (2 * ta2) - d2f / (2 * tb2));
  const Scalar k_smo = std::exp(-d2p / (2 * tg2));
  return {k_app, k_smo};
}

namespace detail {

// Precomputed exponent coefficients shared by the windowed engine and the
// dense oracle, including the position-scaling convention.
struct PairGeometry {
  double inv_two_ta2;
  double inv_two_tb2;
  double inv_two_tg2;
  double app_pos_scale2;  // applied to raw squared pixel offsets
  double smo_pos_scale2;
};

inline PairGeometry pair_geometry(const CrfParams& p, Index height,
                                  Index width) {
  const double s = static_cast<double>(
      std::max<Index>({height - 1, width - 1, Index(1)}));
  PairGeometry g;
  g.inv_two_ta2 = 1.0 / (2.0 * p.theta_alpha * p.theta_alpha);
  g.inv_two_tb2 = 1.0 / (2.0 * p.theta_beta * p.theta_beta);
  g.inv_two_tg2 = 1.0 / (2.0 * p.theta_gamma * p.theta_gamma);
  g.app_pos_scale2 = p.normalized_app_positions ? 1.0 / (s * s) : 1.0;
  g.smo_pos_scale2 = p.normalized_smo_positions ? 1.0 / (s * s) : 1.0;
  return g;
}

inline double app_kernel(const PairGeometry& g, double raw_pos_sq,
                         double feat_sq) {
  return std::exp(-raw_pos_sq * g.app_pos_scale2 * g.inv_two_ta2 -
                  feat_sq * g.inv_two_tb2);
}

inline double smo_kernel(const PairGeometry& g, double raw_pos_sq) {
  return std::exp(-raw_pos_sq * g.smo_pos_scale2 * g.inv_two_tg2);
}

}  // namespace detail

// Enumerates the window offsets (dr, dc) != (0, 0). The square shape keeps
// |dr|, |dc| <= (k-1)/2; the diamond additionally bounds |dr| + |dc|.
inline std::vector<std::pair<int, int>> window_offsets(const CrfParams& p) {
  const int radius = static_cast<int>((p.filter_size - 1) / 2);
  std::vector<std::pair<int, int>> offsets;
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (p.window_shape == WindowShape::diamond &&
          std::abs(dr) + std::abs(dc) > radius)
        continue;
      offsets.emplace_back(dr, dc);
    }
  }
  return offsets;
}

// Kernel values of every pixel against its in-window neighbors, stored as one
// appearance plane per offset. The smoothness kernel depends on the offset
// only, so it collapses to one value per offset. Messages use each kernel as
// a per-pixel normalized weighting (the convention of the reference dense-CRF
// implementations the default parameters come from), so the windows also
// carry the inverse kernel sums.
template <typename Scalar = double>
struct KernelWindows {
  Index height = 0;
  Index width = 0;
  Index filter_size = 1;
  std::vector<std::pair<int, int>> offsets;
  std::vector<MatX<Scalar>> appearance;  // per offset, height x width
  std::vector<Scalar> smoothness;        // per offset
  MatX<Scalar> appearance_norm_inv;      // 1 / sum_j k_app(i, j), 0 if empty
  MatX<Scalar> smoothness_norm_inv;      // 1 / sum_j k_smo(i, j), 0 if empty

  bool in_bounds(Index r, Index c) const {
    return r >= 0 && r < height && c >= 0 && c < width;
  }

  // (k_app, k_smo) of pixel (r, c) against neighbor (r+dr, c+dc), or nullopt
  // if that neighbor is outside the window or the image.
  std::optional<std::pair<Scalar, Scalar>> kernels_at(Index r, Index c, int dr,
                                                      int dc) const {
    if (!in_bounds(r + dr, c + dc)) return std::nullopt;
    for (std::size_t o = 0; o < offsets.size(); ++o) {
      if (offsets[o].first == dr && offsets[o].second == dc)
        return std::make_pair(appearance[o](r, c), smoothness[o]);
    }
    return std::nullopt;
  }

  Index neighbor_count(Index r, Index c) const {
    Index n = 0;
    for (const auto& [dr, dc] : offsets)
      if (in_bounds(r + dr, c + dc)) ++n;
    return n;
  }
};

template <typename Scalar>
KernelWindows<Scalar> build_windows(const FeatureMap<Scalar>& features,
                                    const CrfParams& params, int workers = 0) {
  validate_crf_params(params);
  const Index H = features.height;
  const Index W = features.width;
  const auto geom = detail::pair_geometry(params, H, W);

  KernelWindows<Scalar> win;
  win.height = H;
  win.width = W;
  win.filter_size = params.filter_size;
  win.offsets = window_offsets(params);
  win.appearance.assign(win.offsets.size(), MatX<Scalar>::Zero(H, W));
  win.smoothness.assign(win.offsets.size(), Scalar(0));

  const auto& f = features.values;
  parallel_for(static_cast<Index>(win.offsets.size()), workers, [&](Index o) {
    const auto [dr, dc] = win.offsets[static_cast<std::size_t>(o)];
    const double raw_pos_sq = static_cast<double>(dr) * dr +
                              static_cast<double>(dc) * dc;
    win.smoothness[static_cast<std::size_t>(o)] =
        static_cast<Scalar>(detail::smo_kernel(geom, raw_pos_sq));

    auto& plane = win.appearance[static_cast<std::size_t>(o)];
    const Index r0 = std::max<Index>(0, -dr);
    const Index c0 = std::max<Index>(0, -dc);
    const Index rows = H - std::abs(dr);
    const Index cols = W - std::abs(dc);
    if (rows <= 0 || cols <= 0) return;
    for (Index c = c0; c < c0 + cols; ++c) {
      for (Index r = r0; r < r0 + rows; ++r) {
        const Index pi = r * W + c;
        const Index pj = (r + dr) * W + (c + dc);
        const double d2f =
            static_cast<double>((f.col(pi) - f.col(pj)).squaredNorm());
        plane(r, c) =
            static_cast<Scalar>(detail::app_kernel(geom, raw_pos_sq, d2f));
      }
    }
  });

  // Per-pixel kernel sums, accumulated in fixed offset order.
  MatX<Scalar> app_sum = MatX<Scalar>::Zero(H, W);
  MatX<Scalar> smo_sum = MatX<Scalar>::Zero(H, W);
  for (std::size_t o = 0; o < win.offsets.size(); ++o) {
    const auto [dr, dc] = win.offsets[o];
    const Index rows = H - std::abs(dr);
    const Index cols = W - std::abs(dc);
    if (rows <= 0 || cols <= 0) continue;
    const Index r0 = std::max<Index>(0, -dr);
    const Index c0 = std::max<Index>(0, -dc);
    app_sum.block(r0, c0, rows, cols) +=
        win.appearance[o].block(r0, c0, rows, cols);
    smo_sum.block(r0, c0, rows, cols).array() += win.smoothness[o];
  }
  win.appearance_norm_inv =
      (app_sum.array() > Scalar(0)).select(app_sum.cwiseInverse(),
                                           MatX<Scalar>::Zero(H, W));
  win.smoothness_norm_inv =
      (smo_sum.array() > Scalar(0)).select(smo_sum.cwiseInverse(),
                                           MatX<Scalar>::Zero(H, W));
  return win;
}

namespace detail {

// Class planes: one height x width matrix per class, pixel (r, c) at
// row-major pixel index r * width + c of the field's column layout.
template <typename Scalar>
std::vector<MatX<Scalar>> to_planes(const MatX<Scalar>& field, Index height,
                                    Index width) {
  std::vector<MatX<Scalar>> planes(static_cast<std::size_t>(field.rows()),
                                   MatX<Scalar>(height, width));
  for (Index l = 0; l < field.rows(); ++l) {
    auto& plane = planes[static_cast<std::size_t>(l)];
    for (Index r = 0; r < height; ++r)
      for (Index c = 0; c < width; ++c) plane(r, c) = field(l, r * width + c);
  }
  return planes;
}

template <typename Scalar>
MatX<Scalar> from_planes(const std::vector<MatX<Scalar>>& planes) {
  const Index C = static_cast<Index>(planes.size());
  const Index H = planes.front().rows();
  const Index W = planes.front().cols();
  MatX<Scalar> field(C, H * W);
  for (Index l = 0; l < C; ++l) {
    const auto& plane = planes[static_cast<std::size_t>(l)];
    for (Index r = 0; r < H; ++r)
      for (Index c = 0; c < W; ++c) field(l, r * W + c) = plane(r, c);
  }
  return field;
}

// One Jacobi mean-field sweep over class planes. Each kernel contributes a
// per-pixel normalized weighting of the neighbor marginals:
//   m_i(l) = w_app * sum_j k_app(i,j) Qin_j(l) / sum_j k_app(i,j)
//          + w_smo * sum_j k_smo(i,j) Qin_j(l) / sum_j k_smo(i,j)
//   Qout_i(l) ~ exp(-u_i(l) - sum_{l' != l} m_i(l')), normalized per pixel.
// The Potts sum is evaluated as S_i - m_i(l) with S_i = sum_l m_i(l).
template <typename Scalar>
void step_planes(const std::vector<MatX<Scalar>>& q_in,
                 const std::vector<MatX<Scalar>>& unary,
                 const KernelWindows<Scalar>& win, const CrfParams& params,
                 int workers, std::vector<MatX<Scalar>>& app_acc,
                 std::vector<MatX<Scalar>>& smo_acc,
                 std::vector<MatX<Scalar>>& messages,
                 std::vector<MatX<Scalar>>& q_out) {
  const Index H = win.height;
  const Index W = win.width;
  const Index C = static_cast<Index>(q_in.size());
  const Scalar w_app = static_cast<Scalar>(params.w_app);
  const Scalar w_smo = static_cast<Scalar>(params.w_smo);

  // Message accumulation, one class per task; offsets applied in fixed order.
  parallel_for(C, workers, [&](Index l) {
    auto& acc_a = app_acc[static_cast<std::size_t>(l)];
    auto& acc_s = smo_acc[static_cast<std::size_t>(l)];
    acc_a.setZero();
    acc_s.setZero();
    const auto& q = q_in[static_cast<std::size_t>(l)];
    for (std::size_t o = 0; o < win.offsets.size(); ++o) {
      const auto [dr, dc] = win.offsets[o];
      const Index rows = H - std::abs(dr);
      const Index cols = W - std::abs(dc);
      if (rows <= 0 || cols <= 0) continue;
      const Index r0i = std::max<Index>(0, -dr);
      const Index c0i = std::max<Index>(0, -dc);
      const Index r0j = r0i + dr;
      const Index c0j = c0i + dc;
      const auto q_block = q.block(r0j, c0j, rows, cols).array();
      acc_a.block(r0i, c0i, rows, cols).array() +=
          win.appearance[o].block(r0i, c0i, rows, cols).array() * q_block;
      acc_s.block(r0i, c0i, rows, cols).array() +=
          win.smoothness[o] * q_block;
    }
    messages[static_cast<std::size_t>(l)].array() =
        w_app * acc_a.array() * win.appearance_norm_inv.array() +
        w_smo * acc_s.array() * win.smoothness_norm_inv.array();
  });

  // Compatibility transform, unary, and per-pixel renormalization. Scalar
  // exp keeps results independent of how columns land on workers.
  parallel_for(W, workers, [&](Index c) {
    std::vector<Scalar> expo(static_cast<std::size_t>(C));
    for (Index r = 0; r < H; ++r) {
      Scalar msg_sum = 0;
      for (Index l = 0; l < C; ++l)
        msg_sum += messages[static_cast<std::size_t>(l)](r, c);
      Scalar zmax = -std::numeric_limits<Scalar>::infinity();
      for (Index l = 0; l < C; ++l) {
        const Scalar m_l = messages[static_cast<std::size_t>(l)](r, c);
        const Scalar e = -unary[static_cast<std::size_t>(l)](r, c) -
                         (msg_sum - m_l);
        expo[static_cast<std::size_t>(l)] = e;
        zmax = std::max(zmax, e);
      }
      Scalar norm = 0;
      for (Index l = 0; l < C; ++l) {
        const Scalar v = std::exp(expo[static_cast<std::size_t>(l)] - zmax);
        q_out[static_cast<std::size_t>(l)](r, c) = v;
        norm += v;
      }
      const Scalar inv = Scalar(1) / norm;
      for (Index l = 0; l < C; ++l)
        q_out[static_cast<std::size_t>(l)](r, c) *= inv;
    }
  });
}

template <typename Scalar>
LabelMap argmax_planes(const std::vector<MatX<Scalar>>& planes) {
  const Index H = planes.front().rows();
  const Index W = planes.front().cols();
  LabelMap labels = make_label_map(H, W);
  for (Index r = 0; r < H; ++r) {
    for (Index c = 0; c < W; ++c) {
      int best = 0;
      Scalar best_v = planes[0](r, c);
      for (std::size_t l = 1; l < planes.size(); ++l) {
        if (planes[l](r, c) > best_v) {  // strict: ties keep the lowest id
          best_v = planes[l](r, c);
          best = static_cast<int>(l);
        }
      }
      labels(r, c) = static_cast<std::uint8_t>(best + 1);
    }
  }
  return labels;
}

}  // namespace detail

// One public mean-field iteration (Jacobi update, double-buffered).
template <typename Scalar>
MarginalField<Scalar> mean_field_step(const MarginalField<Scalar>& q,
                                      const UnaryField<Scalar>& unary,
                                      const KernelWindows<Scalar>& windows,
                                      const CrfParams& params,
                                      int workers = 0) {
  if (q.height != unary.height || q.width != unary.width ||
      q.class_count() != unary.class_count())
    throw ShapeError("marginals and unary dimensions differ");
  auto q_planes = detail::to_planes(q.q, q.height, q.width);
  auto u_planes = detail::to_planes(unary.costs, q.height, q.width);
  std::vector<MatX<Scalar>> app_acc(q_planes.size(),
                                    MatX<Scalar>(q.height, q.width));
  std::vector<MatX<Scalar>> smo_acc(q_planes.size(),
                                    MatX<Scalar>(q.height, q.width));
  std::vector<MatX<Scalar>> messages(q_planes.size(),
                                     MatX<Scalar>(q.height, q.width));
  std::vector<MatX<Scalar>> out(q_planes.size(),
                                MatX<Scalar>(q.height, q.width));
  detail::step_planes(q_planes, u_planes, windows, params, workers, app_acc,
                      smo_acc, messages, out);
  return {q.height, q.width, detail::from_planes(out)};
}

template <typename Scalar = double>
struct InferResult {
  LabelMap labels;
  MarginalField<Scalar> marginals;
};

// Windowed mean-field inference: Q starts at the input probabilities and is
// refined `iterations` times; labels are the per-pixel argmax (lowest class
// id on ties).
template <typename Scalar>
InferResult<Scalar> infer(const ProbabilityMap<Scalar>& prob,
                          const FeatureMap<Scalar>& features,
                          const CrfParams& params, int workers = 0) {
  if (prob.height != features.height || prob.width != features.width)
    throw ShapeError("probability and feature map dimensions differ");
  validate_crf_params(params);
  validate_probability_map(prob);

  const auto windows = build_windows(features, params, workers);
  const auto unary = unary_from_prob(prob);
  auto u_planes = detail::to_planes(unary.costs, prob.height, prob.width);
  auto q_curr = detail::to_planes(prob.values, prob.height, prob.width);
  std::vector<MatX<Scalar>> q_next(q_curr.size(),
                                   MatX<Scalar>(prob.height, prob.width));
  std::vector<MatX<Scalar>> app_acc(q_curr.size(),
                                    MatX<Scalar>(prob.height, prob.width));
  std::vector<MatX<Scalar>> smo_acc(q_curr.size(),
                                    MatX<Scalar>(prob.height, prob.width));
  std::vector<MatX<Scalar>> messages(q_curr.size(),
                                     MatX<Scalar>(prob.height, prob.width));
  for (Index it = 0; it < params.iterations; ++it) {
    detail::step_planes(q_curr, u_planes, windows, params, workers, app_acc,
                        smo_acc, messages, q_next);
    std::swap(q_curr, q_next);
  }

  InferResult<Scalar> result;
  result.labels = detail::argmax_planes(q_curr);
  result.marginals = {prob.height, prob.width, detail::from_planes(q_curr)};
  return result;
}

inline constexpr Index kBruteForcePixelGuard = 4096;

// Dense mean-field oracle: identical update rule, but messages run over all
// pixel pairs instead of a window. Quadratic, guarded, test use only.
template <typename Scalar>
InferResult<Scalar> brute_force_infer(const ProbabilityMap<Scalar>& prob,
                                      const FeatureMap<Scalar>& features,
                                      const CrfParams& params) {
  if (prob.height != features.height || prob.width != features.width)
    throw ShapeError("probability and feature map dimensions differ");
  const Index N = prob.pixel_count();
  if (N > kBruteForcePixelGuard)
    throw GuardError("brute-force inference limited to " +
                     std::to_string(kBruteForcePixelGuard) + " pixels, got " +
                     std::to_string(N));
  validate_probability_map(prob);

  const Index H = prob.height;
  const Index W = prob.width;
  const Index C = prob.values.rows();
  const auto geom = detail::pair_geometry(params, H, W);
  const auto unary = unary_from_prob(prob);

  MatX<Scalar> q = prob.values;
  MatX<Scalar> next(C, N);
  MatX<Scalar> msgs(C, N);
  MatX<Scalar> app_acc(C, N);
  MatX<Scalar> smo_acc(C, N);
  VecX<Scalar> app_norm(N), smo_norm(N);
  for (Index it = 0; it < params.iterations; ++it) {
    app_acc.setZero();
    smo_acc.setZero();
    app_norm.setZero();
    smo_norm.setZero();
    for (Index i = 0; i < N; ++i) {
      const Index ri = i / W, ci = i % W;
      for (Index j = i + 1; j < N; ++j) {
        const Index rj = j / W, cj = j % W;
        const double dr = static_cast<double>(ri - rj);
        const double dc = static_cast<double>(ci - cj);
        const double raw_pos_sq = dr * dr + dc * dc;
        const double d2f = static_cast<double>(
            (features.values.col(i) - features.values.col(j)).squaredNorm());
        const Scalar k_app = static_cast<Scalar>(
            detail::app_kernel(geom, raw_pos_sq, d2f));
        const Scalar k_smo = static_cast<Scalar>(
            detail::smo_kernel(geom, raw_pos_sq));
        app_acc.col(i) += k_app * q.col(j);
        app_acc.col(j) += k_app * q.col(i);
        app_norm[i] += k_app;
        app_norm[j] += k_app;
        smo_acc.col(i) += k_smo * q.col(j);
        smo_acc.col(j) += k_smo * q.col(i);
        smo_norm[i] += k_smo;
        smo_norm[j] += k_smo;
      }
    }
    msgs.setZero();
    for (Index i = 0; i < N; ++i) {
      if (app_norm[i] > Scalar(0))
        msgs.col(i) += (static_cast<Scalar>(params.w_app) / app_norm[i]) *
                       app_acc.col(i);
      if (smo_norm[i] > Scalar(0))
        msgs.col(i) += (static_cast<Scalar>(params.w_smo) / smo_norm[i]) *
                       smo_acc.col(i);
    }
    for (Index i = 0; i < N; ++i) {
      const Scalar msg_sum = msgs.col(i).sum();
      Scalar zmax = -std::numeric_limits<Scalar>::infinity();
      for (Index l = 0; l < C; ++l) {
        const Scalar e = -unary.costs(l, i) - (msg_sum - msgs(l, i));
        next(l, i) = e;
        zmax = std::max(zmax, e);
      }
      Scalar norm = 0;
      for (Index l = 0; l < C; ++l) {
        next(l, i) = std::exp(next(l, i) - zmax);
        norm += next(l, i);
      }
      next.col(i) /= norm;
    }
    q.swap(next);
  }

  InferResult<Scalar> result;
  result.marginals = {H, W, q};
  auto planes = detail::to_planes(q, H, W);
  result.labels = detail::argmax_planes(planes);
  return result;
}

// Argmax labels straight from a probability map (the CRF-off path).
template <typename Scalar>
LabelMap argmax_labels(const ProbabilityMap<Scalar>& prob) {
  auto planes = detail::to_planes(prob.values, prob.height, prob.width);
  return detail::argmax_planes(planes);
}

template <typename Scalar>
LabelMap argmax_labels(const MarginalField<Scalar>& field) {
  auto planes = detail::to_planes(field.q, field.height, field.width);
  return detail::argmax_planes(planes);
}

// Debug export: marginals (or unaries) as an HSIC1 cube, classes as bands.
template <typename Scalar>
HsiCube<Scalar> marginals_to_cube(const MarginalField<Scalar>& field) {
  return {field.height, field.width, field.class_count(), field.q};
}

template <typename Scalar>
HsiCube<Scalar> unary_to_cube(const UnaryField<Scalar>& field) {
  return {field.height, field.width, field.class_count(), field.costs};
}

}  // namespace hsicrf
