#pragma once

#include <algorithm>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "hsicrf/cube.hpp"
#include "hsicrf/labels.hpp"
#include "hsicrf/rng.hpp"

namespace hsicrf {

// Labeled spectra ready for training. Class ids are contiguous 1..class_count.
template <typename Scalar = double>
struct SampleSet {
  Index dimension = 0;
  MatX<Scalar> spectra;     // dimension x sample_count
  std::vector<int> labels;  // 1..class_count, one per column
  int class_count = 0;

  Index size() const { return spectra.cols(); }
};

struct SplitIndices {
  std::vector<Index> train;  // pixel indices, row-major
  std::vector<Index> test;
};

// Maps possibly non-contiguous label-map ids onto contiguous 1..C and back.
struct ClassRemap {
  std::array<int, 256> to_contiguous{};  // original id -> 1..C, 0 if absent
  std::vector<int> to_original;          // index c-1 -> original id

  int class_count() const { return static_cast<int>(to_original.size()); }
};

// Draws exactly `per_class` training pixels from every class present in the
// label map; everything else labeled becomes test. Deterministic in `seed`.
inline SplitIndices split_train_test(const LabelMap& labels, Index per_class,
                                     std::uint64_t seed) {
  std::array<std::vector<Index>, 256> by_class;
  for (Index p = 0; p < labels.pixel_count(); ++p) {
    if (labels.at(p) != 0) by_class[labels.at(p)].push_back(p);
  }

  int present = 0;
  for (int c = 1; c < 256; ++c)
    if (!by_class[c].empty()) ++present;
  if (present < 2)
    throw InsufficientDataError(
        "training requires at least two labeled classes, found " +
        std::to_string(present));

  Rng rng = make_rng(seed);
  SplitIndices split;
  for (int c = 1; c < 256; ++c) {
    auto& pixels = by_class[c];
    if (pixels.empty()) continue;
    if (static_cast<Index>(pixels.size()) < per_class)
      throw InsufficientDataError(
          "class " + std::to_string(c) + " has only " +
          std::to_string(pixels.size()) + " labeled pixels, need " +
          std::to_string(per_class));
    std::shuffle(pixels.begin(), pixels.end(), rng);
    split.train.insert(split.train.end(), pixels.begin(),
                       pixels.begin() + per_class);
    split.test.insert(split.test.end(), pixels.begin() + per_class,
                      pixels.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// Gathers the spectra at `pixels` into a SampleSet, remapping ids to 1..C.
template <typename Scalar>
std::pair<SampleSet<Scalar>, ClassRemap> build_sample_set(
    const HsiCube<Scalar>& cube, const LabelMap& labels,
    std::span<const Index> pixels) {
  if (cube.height != labels.height || cube.width != labels.width)
    throw ShapeError("cube and label map dimensions differ");

  ClassRemap remap;
  for (Index p : pixels) {
    if (labels.at(p) == 0)
      throw DataError("unlabeled pixel " + std::to_string(p) +
                      " in a sample selection");
    remap.to_contiguous[labels.at(p)] = 1;
  }
  for (int c = 1; c < 256; ++c) {
    if (remap.to_contiguous[c] != 0) {
      remap.to_original.push_back(c);
      remap.to_contiguous[c] = static_cast<int>(remap.to_original.size());
    }
  }

  SampleSet<Scalar> set;
  set.dimension = cube.bands;
  set.class_count = remap.class_count();
  set.spectra.resize(cube.bands, static_cast<Index>(pixels.size()));
  set.labels.reserve(pixels.size());
  Index col = 0;
  for (Index p : pixels) {
    set.spectra.col(col++) = cube.spectrum(p);
    set.labels.push_back(remap.to_contiguous[labels.at(p)]);
  }
  return {std::move(set), std::move(remap)};
}

struct AugmentConfig {
  Index virtual_per_class = 0;
  double mix_low = 0.0;
  double mix_high = 1.0;
  std::uint64_t seed = 0;
};

// Appends `virtual_per_class` convex mixes q*x1 + (1-q)*x2 per class, with x1
// and x2 distinct samples of that class and q uniform in [mix_low, mix_high].
template <typename Scalar>
SampleSet<Scalar> generate_virtual_samples(const SampleSet<Scalar>& set,
                                           const AugmentConfig& cfg) {
  if (cfg.mix_low < 0.0 || cfg.mix_low > cfg.mix_high || cfg.mix_high > 1.0)
    throw DataError("mix bounds must satisfy 0 <= mix_low <= mix_high <= 1");
  if (cfg.virtual_per_class == 0) return set;

  std::vector<std::vector<Index>> by_class(
      static_cast<std::size_t>(set.class_count) + 1);
  for (Index i = 0; i < set.size(); ++i)
    by_class[static_cast<std::size_t>(set.labels[i])].push_back(i);

  for (int c = 1; c <= set.class_count; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 2)
      throw InsufficientDataError("class " + std::to_string(c) +
                                  " needs at least 2 samples to mix");
  }

  SampleSet<Scalar> out;
  out.dimension = set.dimension;
  out.class_count = set.class_count;
  const Index extra =
      cfg.virtual_per_class * static_cast<Index>(set.class_count);
  out.spectra.resize(set.dimension, set.size() + extra);
  out.spectra.leftCols(set.size()) = set.spectra;
  out.labels = set.labels;

  Rng rng = make_rng(cfg.seed);
  Index col = set.size();
  for (int c = 1; c <= set.class_count; ++c) {
    const auto& idx = by_class[static_cast<std::size_t>(c)];
    for (Index v = 0; v < cfg.virtual_per_class; ++v) {
      const auto n = idx.size();
      std::size_t i1 = uniform_index(rng, n);
      std::size_t i2 = uniform_index(rng, n - 1);
      if (i2 >= i1) ++i2;  // distinct pair
      const Scalar q = static_cast<Scalar>(
          uniform_real(rng, cfg.mix_low, cfg.mix_high));
      out.spectra.col(col) = q * set.spectra.col(static_cast<Index>(idx[i1])) +
                             (Scalar(1) - q) *
                                 set.spectra.col(static_cast<Index>(idx[i2]));
      out.labels.push_back(c);
      ++col;
    }
  }
  return out;
}

}  // namespace hsicrf
