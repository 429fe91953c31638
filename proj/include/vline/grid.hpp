#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "vline/errors.hpp"

namespace vline {

/// Dense row-major 2D array.
template <typename T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Array2D& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool operator==(const Array2D&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// ---------------------------------------------------------------------------
// Flat vector helpers shared by the operators and the solver.

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }
inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------

/// Samples of a function on the square lattice over [-1,1]^2.
///
/// values(i1, i2) is the sample at (-1,-1) + 2 (i1, i2) / N with N = n_side - 1.
/// The first index runs along x, the second along y.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(int n_side, double fill = 0.0)
      : values_(checked_side(n_side), static_cast<std::size_t>(n_side), fill) {}

  /// Builds an image from f(x, y) sampled at the lattice nodes.
  template <typename Fn>
  static ImageGrid sample(int n_side, Fn&& f) {
    ImageGrid img(n_side);
    for (int i = 0; i < n_side; ++i)
      for (int j = 0; j < n_side; ++j) {
        auto [x, y] = img.node(i, j);
        img(i, j) = f(x, y);
      }
    return img;
  }

  int n_side() const { return static_cast<int>(values_.rows()); }
  int intervals() const { return n_side() - 1; }
  double spacing() const { return 2.0 / intervals(); }

  std::pair<double, double> node(int i1, int i2) const {
    const double h = spacing();
    return {-1.0 + h * i1, -1.0 + h * i2};
  }

  double& operator()(int i1, int i2) { return values_(i1, i2); }
  double operator()(int i1, int i2) const { return values_(i1, i2); }

  Array2D<double>& values() { return values_; }
  const Array2D<double>& values() const { return values_; }
  std::span<double> flat() { return values_.flat(); }
  std::span<const double> flat() const { return values_.flat(); }

  bool same_shape(const ImageGrid& o) const { return values_.same_shape(o.values_); }
  bool operator==(const ImageGrid&) const = default;

 private:
  static std::size_t checked_side(int n_side) {
    require(n_side >= 2, "ImageGrid needs at least 2 samples per axis");
    return static_cast<std::size_t>(n_side);
  }

  Array2D<double> values_;
};

/// Forward-difference gradient of an ImageGrid; both components image-shaped.
struct GradientField {
  Array2D<double> dx;
  Array2D<double> dy;

  GradientField() = default;
  explicit GradientField(int n_side)
      : dx(static_cast<std::size_t>(n_side), static_cast<std::size_t>(n_side)),
        dy(static_cast<std::size_t>(n_side), static_cast<std::size_t>(n_side)) {}

  int n_side() const { return static_cast<int>(dx.rows()); }
};

// ---------------------------------------------------------------------------
// Bilinear interpolation

/// The four lattice neighbours of a point and their bilinear weights.
struct BilinearStencil {
  int i = 0;
  int j = 0;
  double wx = 0.0;  // weight of column i + 1
  double wy = 0.0;  // weight of row j + 1
};

/// Locates a point in the lattice. Returns false for points outside [-1,1]^2.
/// Points on the far edge use the last cell with weight 1 on its far side.
inline bool locate(int intervals, double x, double y, BilinearStencil& s) {
  const double scale = 0.5 * intervals;
  const double u = (x + 1.0) * scale;
  const double v = (y + 1.0) * scale;
  if (!(u >= 0.0 && u <= intervals && v >= 0.0 && v <= intervals)) return false;
  s.i = std::min(static_cast<int>(u), intervals - 1);
  s.j = std::min(static_cast<int>(v), intervals - 1);
  s.wx = u - s.i;
  s.wy = v - s.j;
  return true;
}

inline double gather(const ImageGrid& img, const BilinearStencil& s) {
  const double a = s.wx;
  const double b = s.wy;
  return (1 - a) * (1 - b) * img(s.i, s.j) + a * (1 - b) * img(s.i + 1, s.j) +
         (1 - a) * b * img(s.i, s.j + 1) + a * b * img(s.i + 1, s.j + 1);
}

/// Transpose of gather: adds value * weights into the four neighbours.
inline void scatter(ImageGrid& img, const BilinearStencil& s, double value) {
  const double a = s.wx;
  const double b = s.wy;
  img(s.i, s.j) += (1 - a) * (1 - b) * value;
  img(s.i + 1, s.j) += a * (1 - b) * value;
  img(s.i, s.j + 1) += (1 - a) * b * value;
  img(s.i + 1, s.j + 1) += a * b * value;
}

/// Bilinear interpolant T[f] at an arbitrary point; zero outside [-1,1]^2.
inline double bilinear_eval(const ImageGrid& img, double x, double y) {
  BilinearStencil s;
  if (!locate(img.intervals(), x, y, s)) return 0.0;
  return gather(img, s);
}

// ---------------------------------------------------------------------------
// Discrete gradient pair. Differences are in lattice units.

inline GradientField gradient(const ImageGrid& img) {
  const int n = img.n_side();
  GradientField g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double f = img(i, j);
      g.dx(i, j) = i + 1 < n ? img(i + 1, j) - f : 0.0;
      g.dy(i, j) = j + 1 < n ? img(i, j + 1) - f : 0.0;
    }
  return g;
}

/// D^* q, the exact transpose of gradient().
inline ImageGrid gradient_adjoint(const GradientField& q) {
  const int n = q.n_side();
  ImageGrid out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      if (i > 0) v += q.dx(i - 1, j);
      if (i + 1 < n) v -= q.dx(i, j);
      if (j > 0) v += q.dy(i, j - 1);
      if (j + 1 < n) v -= q.dy(i, j);
      out(i, j) = v;
    }
  return out;
}

/// Discrete divergence, div = -D^*.
inline ImageGrid divergence(const GradientField& q) {
  ImageGrid out = gradient_adjoint(q);
  for (double& v : out.flat()) v = -v;
  return out;
}

/// Projection onto the non-negative orthant.
inline ImageGrid project_nonneg(ImageGrid img) {
  for (double& v : img.flat()) v = std::max(v, 0.0);
  return img;
}

inline void project_nonneg_inplace(std::span<double> v) {
  for (double& x : v) x = std::max(x, 0.0);
}

}  // namespace vline
