#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "hsicrf/cube.hpp"
#include "hsicrf/labels.hpp"
#include "hsicrf/rng.hpp"

namespace hsicrf {

struct SynthConfig {
  Index height = 64;
  Index width = 64;
  Index bands = 16;
  int classes = 5;
  double noise_level = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Blocky label layout: a shuffled grid of cells, one class per cell, plus a
// few overlay rectangles for irregularity. Retries with a derived seed until
// every class keeps a healthy pixel share.
inline LabelMap synth_labels(const SynthConfig& cfg, std::uint64_t seed) {
  const int C = cfg.classes;
  int grid = 1;
  while (grid * grid < C) ++grid;
  const Index cell_h = cfg.height / grid;
  const Index cell_w = cfg.width / grid;

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng = make_rng(seed + attempt * 0x9e3779b97f4a7c15ULL);
    LabelMap map = make_label_map(cfg.height, cfg.width);

    std::vector<int> cell_class(static_cast<std::size_t>(grid) * grid);
    for (std::size_t i = 0; i < cell_class.size(); ++i)
      cell_class[i] = static_cast<int>(i % static_cast<std::size_t>(C)) + 1;
    std::shuffle(cell_class.begin(), cell_class.end(), rng);

    for (int gr = 0; gr < grid; ++gr) {
      for (int gc = 0; gc < grid; ++gc) {
        const Index r0 = gr * cell_h;
        const Index c0 = gc * cell_w;
        const Index r1 = (gr == grid - 1) ? cfg.height : r0 + cell_h;
        const Index c1 = (gc == grid - 1) ? cfg.width : c0 + cell_w;
        const std::uint8_t label = static_cast<std::uint8_t>(
            cell_class[static_cast<std::size_t>(gr * grid + gc)]);
        for (Index r = r0; r < r1; ++r)
          for (Index c = c0; c < c1; ++c) map(r, c) = label;
      }
    }

    // Overlay rectangles between a third and half of a cell edge. The floor
    // keeps every region wider than the CRF windows the scene is smoothed
    // with, so larger filter sizes help rather than erase structure.
    const int overlays = 2 * C;
    const Index min_h = std::max<Index>(2, cell_h / 3);
    const Index max_h = std::max<Index>(min_h, cell_h / 2);
    const Index min_w = std::max<Index>(2, cell_w / 3);
    const Index max_w = std::max<Index>(min_w, cell_w / 2);
    for (int i = 0; i < overlays; ++i) {
      const Index h = min_h + static_cast<Index>(uniform_index(
                                  rng, static_cast<std::uint64_t>(
                                           max_h - min_h + 1)));
      const Index w = min_w + static_cast<Index>(uniform_index(
                                  rng, static_cast<std::uint64_t>(
                                           max_w - min_w + 1)));
      const Index r0 = static_cast<Index>(uniform_index(
          rng, static_cast<std::uint64_t>(cfg.height - h + 1)));
      const Index c0 = static_cast<Index>(uniform_index(
          rng, static_cast<std::uint64_t>(cfg.width - w + 1)));
      const std::uint8_t label =
          static_cast<std::uint8_t>(1 + uniform_index(rng, C));
      for (Index r = r0; r < r0 + h; ++r)
        for (Index c = c0; c < c0 + w; ++c) map(r, c) = label;
    }

    // Accept once every class holds at least half a cell.
    std::vector<Index> counts(static_cast<std::size_t>(C) + 1, 0);
    for (Index p = 0; p < map.pixel_count(); ++p)
      counts[map.at(p)]++;
    const Index floor_count = cell_h * cell_w / 2;
    bool ok = true;
    for (int c = 1; c <= C; ++c)
      ok = ok && counts[static_cast<std::size_t>(c)] >= floor_count;
    if (ok || attempt > 64) return map;
  }
}

}  // namespace detail

// Desk-scale scene: blocky label regions, one Gaussian mean spectrum per
// class with pairwise separation at least 4 * noise_level, and i.i.d. noise
// per pixel. noise_level = 0 reproduces the class mean exactly.
template <typename Scalar = double>
std::pair<HsiCube<Scalar>, LabelMap> synth_scene(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw DataError("synthetic scene needs >= 2 classes");
  if (cfg.noise_level < 0) throw DataError("noise_level must be >= 0");

  LabelMap labels = detail::synth_labels(cfg, cfg.seed);

  Rng rng = make_rng(cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
  MatX<Scalar> means(cfg.bands, cfg.classes);
  for (Index c = 0; c < cfg.classes; ++c)
    for (Index b = 0; b < cfg.bands; ++b)
      means(b, c) = static_cast<Scalar>(normal(rng));

  // Enforce the separation floor by scaling up when needed.
  Scalar min_dist = std::numeric_limits<Scalar>::max();
  for (Index a = 0; a < cfg.classes; ++a)
    for (Index b = a + 1; b < cfg.classes; ++b)
      min_dist = std::min(min_dist, (means.col(a) - means.col(b)).norm());
  const Scalar required =
      Scalar(4) * static_cast<Scalar>(cfg.noise_level) + Scalar(1e-3);
  if (min_dist < required) {
    if (min_dist <= Scalar(0))
      throw DataError("degenerate class means in synthetic scene");
    means *= required / min_dist;
  }

  HsiCube<Scalar> cube{cfg.height, cfg.width, cfg.bands,
                       MatX<Scalar>(cfg.bands, cfg.height * cfg.width)};
  for (Index p = 0; p < cube.pixel_count(); ++p) {
    const Index c = labels.at(p) - 1;
    if (cfg.noise_level == 0.0) {
      cube.values.col(p) = means.col(c);
    } else {
      for (Index b = 0; b < cfg.bands; ++b)
        cube.values(b, p) =
            means(b, c) +
            static_cast<Scalar>(cfg.noise_level) * static_cast<Scalar>(normal(rng));
    }
  }
  return {std::move(cube), std::move(labels)};
}

}  // namespace hsicrf
