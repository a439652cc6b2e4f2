#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hsicrf/errors.hpp"
#include "hsicrf/io_detail.hpp"
#include "hsicrf/types.hpp"

namespace hsicrf {

// ============================================================================
// HsiCube - hyperspectral data volume, height x width x bands.
//
// In memory the spectra sit as columns of a (bands x height*width) matrix,
// pixel index p = row * width + col. Column-major storage therefore matches
// the on-disk order exactly.
//
// File format "HSIC1":
//   5 bytes   magic "HSIC1"
//   3 x u32   height, width, bands            (little-endian)
//   h*w*b f32 values, band-interleaved by pixel (little-endian)
// ============================================================================
template <typename Scalar = double>
struct HsiCube {
  Index height = 0;
  Index width = 0;
  Index bands = 0;
  MatX<Scalar> values;  // bands x (height*width), one spectrum per column

  Index pixel_count() const { return height * width; }
  Index pixel_index(Index row, Index col) const { return row * width + col; }

  auto spectrum(Index p) { return values.col(p); }
  auto spectrum(Index p) const { return values.col(p); }
};

namespace detail {
inline constexpr char kCubeMagic[5] = {'H', 'S', 'I', 'C', '1'};
}

template <typename Scalar = double>
HsiCube<Scalar> load_cube(const std::string& path) {
  auto bytes = detail::read_file(path);
  if (bytes.size() < 5 ||
      std::memcmp(bytes.data(), detail::kCubeMagic, 5) != 0)
    throw FormatError("not an HSIC1 file: " + path);
  detail::ByteReader rd(bytes.data() + 5, bytes.size() - 5);

  HsiCube<Scalar> cube;
  cube.height = static_cast<Index>(rd.u32("height"));
  cube.width = static_cast<Index>(rd.u32("width"));
  cube.bands = static_cast<Index>(rd.u32("bands"));
  if (cube.height <= 0 || cube.width <= 0 || cube.bands <= 0)
    throw FormatError("HSIC1 header has a zero dimension: " + path);

  const std::size_t count = static_cast<std::size_t>(cube.height) *
                            static_cast<std::size_t>(cube.width) *
                            static_cast<std::size_t>(cube.bands);
  if (rd.remaining() != count * 4)
    throw LengthError("HSIC1 payload length mismatch in " + path + ": header promises " +
                      std::to_string(count * 4) + " value bytes, file carries " +
                      std::to_string(rd.remaining()));

  cube.values.resize(cube.bands, cube.pixel_count());
  Scalar* dst = cube.values.data();
  for (std::size_t i = 0; i < count; ++i) {
    float v = rd.f32("values");
    if (!std::isfinite(v))
      throw DataError("non-finite value in cube at flat index " +
                      std::to_string(i));
    dst[i] = static_cast<Scalar>(v);
  }
  return cube;
}

template <typename Scalar>
void write_cube(const HsiCube<Scalar>& cube, const std::string& path) {
  const Index n = cube.pixel_count();
  if (cube.values.rows() != cube.bands || cube.values.cols() != n)
    throw ShapeError("cube value buffer does not match its dimensions");
  if (!cube.values.allFinite())
    throw DataError("refusing to write cube with non-finite values");

  std::string out;
  out.reserve(17 + static_cast<std::size_t>(cube.bands) *
                       static_cast<std::size_t>(n) * 4);
  out.append(detail::kCubeMagic, 5);
  detail::put_u32(out, static_cast<std::uint32_t>(cube.height));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.width));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.bands));
  const Scalar* src = cube.values.data();
  const std::size_t count = static_cast<std::size_t>(cube.bands) *
                            static_cast<std::size_t>(n);
  for (std::size_t i = 0; i < count; ++i)
    detail::put_f32(out, static_cast<float>(src[i]));
  detail::write_file(path, out);
}

// Per-band standardization to zero mean, unit population variance. Bands with
// variance below `kVarianceFloor` are mapped to all-zero rather than rejected.
// When `stat_pixels` is non-empty, the statistics are computed from those
// pixel indices only and applied to the whole cube.
inline constexpr double kVarianceFloor = 1e-12;

template <typename Scalar>
HsiCube<Scalar> normalize(const HsiCube<Scalar>& cube,
                          std::span<const Index> stat_pixels = {}) {
  const Index n = cube.pixel_count();
  HsiCube<Scalar> out{cube.height, cube.width, cube.bands,
                      MatX<Scalar>(cube.bands, n)};

  VecX<Scalar> mean(cube.bands), var(cube.bands);
  if (stat_pixels.empty()) {
    mean = cube.values.rowwise().mean();
    var = (cube.values.colwise() - mean).array().square().rowwise().mean();
  } else {
    mean.setZero();
    for (Index p : stat_pixels) mean += cube.values.col(p);
    mean /= static_cast<Scalar>(stat_pixels.size());
    var.setZero();
    for (Index p : stat_pixels)
      var += (cube.values.col(p) - mean).array().square().matrix();
    var /= static_cast<Scalar>(stat_pixels.size());
  }

  for (Index b = 0; b < cube.bands; ++b) {
    if (var[b] <= static_cast<Scalar>(kVarianceFloor)) {
      out.values.row(b).setZero();
    } else {
      const Scalar inv = Scalar(1) / std::sqrt(var[b]);
      out.values.row(b) = (cube.values.row(b).array() - mean[b]) * inv;
    }
  }
  return out;
}

}  // namespace hsicrf
