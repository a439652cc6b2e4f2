#pragma once

#include <cctype>
#include <cstdint>
#include <string>

#include "hsicrf/errors.hpp"
#include "hsicrf/io_detail.hpp"
#include "hsicrf/types.hpp"

namespace hsicrf {

// Per-pixel class ids: 0 = unlabeled, 1..C = classes. Stored row-major so the
// raw buffer coincides with a binary PGM payload (maxval 255).
struct LabelMap {
  Index height = 0;
  Index width = 0;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      values;

  Index pixel_count() const { return height * width; }

  std::uint8_t& at(Index p) { return values.data()[p]; }
  std::uint8_t at(Index p) const { return values.data()[p]; }
  std::uint8_t& operator()(Index row, Index col) { return values(row, col); }
  std::uint8_t operator()(Index row, Index col) const {
    return values(row, col);
  }

  int max_label() const {
    return pixel_count() == 0 ? 0 : static_cast<int>(values.maxCoeff());
  }

  Index labeled_count() const {
    return (values.array() != std::uint8_t(0)).count();
  }
};

inline LabelMap make_label_map(Index height, Index width) {
  LabelMap map;
  map.height = height;
  map.width = width;
  map.values.setZero(height, width);
  return map;
}

namespace detail {

// Reads the next whitespace-delimited integer token of a PGM header,
// skipping '#' comment lines.
inline long pgm_token(ByteReader& rd, const char* what) {
  for (;;) {
    if (rd.remaining() == 0)
      throw FormatError(std::string("PGM header ended while reading ") + what);
    unsigned char c = *rd.cursor();
    if (c == '#') {
      while (rd.remaining() > 0 && *rd.cursor() != '\n') rd.skip(1);
    } else if (std::isspace(c)) {
      rd.skip(1);
    } else {
      break;
    }
  }
  long v = 0;
  bool any = false;
  while (rd.remaining() > 0 && std::isdigit(*rd.cursor())) {
    v = v * 10 + (*rd.cursor() - '0');
    rd.skip(1);
    any = true;
  }
  if (!any)
    throw FormatError(std::string("malformed PGM header near ") + what);
  return v;
}

}  // namespace detail

inline LabelMap load_labels(const std::string& path) {
  auto bytes = detail::read_file(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw FormatError("not a P5 PGM file: " + path);
  detail::ByteReader rd(bytes.data() + 2, bytes.size() - 2);

  long w = detail::pgm_token(rd, "width");
  long h = detail::pgm_token(rd, "height");
  long maxval = detail::pgm_token(rd, "maxval");
  if (w <= 0 || h <= 0)
    throw FormatError("PGM with non-positive dimensions: " + path);
  if (maxval < 1 || maxval > 255)
    throw FormatError("PGM maxval out of the 8-bit range: " + path);
  rd.require(1, "header terminator");  // single whitespace byte

  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (rd.remaining() != count)
    throw LengthError("PGM payload length mismatch in " + path);

  LabelMap map = make_label_map(h, w);
  std::memcpy(map.values.data(), rd.cursor(), count);
  return map;
}

inline void write_labels(const LabelMap& map, const std::string& path) {
  std::string out = "P5\n" + std::to_string(map.width) + " " +
                    std::to_string(map.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(map.values.data()),
             static_cast<std::size_t>(map.pixel_count()));
  detail::write_file(path, out);
}

}  // namespace hsicrf
