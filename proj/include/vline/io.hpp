#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vline/errors.hpp"
#include "vline/grid.hpp"
#include "vline/transform.hpp"

// File formats:
//   raw  - one text line "<TAG> <rows> <cols>\n" followed by rows*cols
//          little-endian float32 values, row-major. TAG is VLT-IMG for images
//          and VLT-SIN for sinograms.
//   pgm  - binary 16-bit PGM, values affinely rescaled to [0, 65535].
//   csv  - one line per array row.

namespace vline::io {

inline constexpr const char* kImageTag = "VLT-IMG";
inline constexpr const char* kSinogramTag = "VLT-SIN";

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

inline void check(const std::ostream& os, const std::filesystem::path& path) {
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

inline std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big)
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  return v;
}

}  // namespace detail

inline void write_raw(const std::filesystem::path& path, const std::string& tag,
                      const Array2D<double>& a) {
  auto os = detail::open_out(path);
  os << tag << ' ' << a.rows() << ' ' << a.cols() << '\n';
  for (double v : a.flat()) {
    const std::uint32_t bits = detail::to_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  detail::check(os, path);
}

inline Array2D<double> read_raw(const std::filesystem::path& path, const std::string& expected_tag) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string tag;
  std::size_t rows = 0, cols = 0;
  if (!(hs >> tag >> rows >> cols) || tag != expected_tag)
    throw IoError("'" + path.string() + "': expected header '" + expected_tag + " rows cols'");
  Array2D<double> a(rows, cols);
  for (double& v : a.flat()) {
    std::uint32_t bits = 0;
    if (!is.read(reinterpret_cast<char*>(&bits), sizeof bits))
      throw IoError("'" + path.string() + "': truncated payload");
    v = std::bit_cast<float>(detail::to_le(bits));
  }
  return a;
}

inline void write_csv(const std::filesystem::path& path, const Array2D<double>& a) {
  auto os = detail::open_out(path);
  os.precision(17);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (c) os << ',';
      os << a(r, c);
    }
    os << '\n';
  }
  detail::check(os, path);
}

/// 16-bit PGM preview. Rows of the array become image rows.
inline void write_pgm(const std::filesystem::path& path, const Array2D<double>& a) {
  auto os = detail::open_out(path);
  os << "P5\n" << a.cols() << ' ' << a.rows() << "\n65535\n";
  const auto [lo, hi] = std::minmax_element(a.flat().begin(), a.flat().end());
  const double range = a.size() ? *hi - *lo : 0.0;
  for (double v : a.flat()) {
    const double t = range > 0.0 ? (v - *lo) / range : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    const unsigned char be[2] = {static_cast<unsigned char>(q >> 8),
                                 static_cast<unsigned char>(q & 0xFF)};
    os.write(reinterpret_cast<const char*>(be), 2);
  }
  detail::check(os, path);
}

/// Image as it is usually viewed: x to the right, y up.
inline Array2D<double> display_orientation(const ImageGrid& img) {
  const int n = img.n_side();
  Array2D<double> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(n - 1 - j, i) = img(i, j);
  return out;
}

enum Format : unsigned { raw = 1, pgm = 2, csv = 4, all = 7 };

/// Writes <stem>.f32 / .pgm / .csv as selected.
inline void write_image(const std::filesystem::path& stem, const ImageGrid& img,
                        unsigned formats = all) {
  if (formats & raw) write_raw(stem.string() + ".f32", kImageTag, img.values());
  if (formats & pgm) write_pgm(stem.string() + ".pgm", display_orientation(img));
  if (formats & csv) write_csv(stem.string() + ".csv", img.values());
}

inline void write_sinogram(const std::filesystem::path& stem, const Sinogram& g,
                           unsigned formats = all) {
  if (formats & raw) write_raw(stem.string() + ".f32", kSinogramTag, g.values());
  if (formats & pgm) write_pgm(stem.string() + ".pgm", g.values());
  if (formats & csv) write_csv(stem.string() + ".csv", g.values());
}

inline ImageGrid read_image(const std::filesystem::path& path) {
  Array2D<double> a = read_raw(path, kImageTag);
  if (a.rows() != a.cols() || a.rows() < 2) throw IoError("'" + path.string() + "': image must be square");
  ImageGrid img(static_cast<int>(a.rows()));
  img.values() = std::move(a);
  return img;
}

inline Sinogram read_sinogram(const std::filesystem::path& path) {
  Array2D<double> a = read_raw(path, kSinogramTag);
  if (a.rows() < 1 || a.cols() < 2) throw IoError("'" + path.string() + "': bad sinogram shape");
  Sinogram g(static_cast<int>(a.rows()), static_cast<int>(a.cols()));
  g.values() = std::move(a);
  return g;
}

}  // namespace vline::io
