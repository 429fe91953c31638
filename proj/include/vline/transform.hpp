#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vline/errors.hpp"
#include "vline/grid.hpp"
#include "vline/parallel.hpp"
#include "vline/weight.hpp"

namespace vline {

/// Discrete V-line data: row k is the vertex at angle 2 pi k / P,
/// column l the half-opening angle pi l / (2 Q).
class Sinogram {
 public:
  Sinogram() = default;
  Sinogram(int vertex_count, int angle_count, double fill = 0.0)
      : values_(static_cast<std::size_t>(vertex_count), static_cast<std::size_t>(angle_count),
                fill) {
    require(vertex_count >= 1 && angle_count >= 2, "sinogram needs P >= 1 and Q + 1 >= 2");
  }

  int vertex_count() const { return static_cast<int>(values_.rows()); }
  int angle_count() const { return static_cast<int>(values_.cols()); }

  double vertex_angle(int k) const { return 2.0 * std::numbers::pi * k / vertex_count(); }
  double opening_angle(int l) const {
    return std::numbers::pi * l / (2.0 * (angle_count() - 1));
  }

  double& operator()(int k, int l) { return values_(k, l); }
  double operator()(int k, int l) const { return values_(k, l); }

  Array2D<double>& values() { return values_; }
  const Array2D<double>& values() const { return values_; }
  std::span<double> flat() { return values_.flat(); }
  std::span<const double> flat() const { return values_.flat(); }

  bool same_shape(const Sinogram& o) const { return values_.same_shape(o.values_); }
  bool operator==(const Sinogram&) const = default;

 private:
  Array2D<double> values_;
};

/// Vertex/opening-angle sampling, radial quadrature and weight.
struct ScanGeometry {
  int P = 200;
  int Q = 150;
  int n_radii = 257;
  double r_max = 2.0;
  WeightSpec weight = WeightSpec::constant();

  /// The usual convention: N + 1 radii for an (N+1)^2 image.
  static ScanGeometry for_grid(int n_side, int P, int Q, WeightSpec weight) {
    return {P, Q, n_side, 2.0, std::move(weight)};
  }

  void validate() const {
    require(P >= 1, "geometry needs P >= 1");
    require(Q >= 1, "geometry needs Q >= 1");
    require(n_radii >= 2, "geometry needs at least 2 radii");
    require(r_max > 0.0, "geometry needs r_max > 0");
    weight.validate();
  }

  double radial_step() const { return r_max / (n_radii - 1); }
  Sinogram make_sinogram(double fill = 0.0) const { return Sinogram(P, Q + 1, fill); }
};

/// Forward V-line projector and its exact transpose for one image size.
///
/// Each branch integral is the composite trapezoidal rule in r applied to
/// U(r) T[f](z - r (cos(phi - s psi), sin(phi - s psi))), s = +-1, where T[f] is
/// the bilinear interpolant. adjoint() visits exactly the same samples and
/// scatters the same coefficients, so the pair is adjoint up to rounding.
class Projector {
 public:
  Projector(ScanGeometry geometry, int n_side, ExecutionPolicy policy = {})
      : geom_(std::move(geometry)), n_side_(n_side), policy_(policy) {
    geom_.validate();
    require(n_side >= 2, "image needs at least 2 samples per axis");
    const double h = geom_.radial_step();
    radial_weights_.resize(geom_.n_radii);
    for (int j = 0; j < geom_.n_radii; ++j) {
      const double trap = (j == 0 || j + 1 == geom_.n_radii) ? 0.5 * h : h;
      radial_weights_[j] = trap * geom_.weight(j * h);
    }
  }

  const ScanGeometry& geometry() const { return geom_; }
  int n_side() const { return n_side_; }
  const ExecutionPolicy& policy() const { return policy_; }

  Sinogram forward(const ImageGrid& img) const {
    require(img.n_side() == n_side_, "image size does not match projector");
    Sinogram out = geom_.make_sinogram();
    parallel_for(geom_.P, policy_, [&](std::ptrdiff_t k) {
      for (int l = 0; l <= geom_.Q; ++l) {
        double acc = 0.0;
        for_each_sample(static_cast<int>(k), l, [&](double w, const BilinearStencil& s) {
          acc += w * gather(img, s);
        });
        out(static_cast<int>(k), l) = acc;
      }
    });
    return out;
  }

  ImageGrid adjoint(const Sinogram& g) const {
    require(g.vertex_count() == geom_.P && g.angle_count() == geom_.Q + 1,
            "sinogram shape does not match geometry");
    // Fixed vertex chunks, each with a private accumulator, merged in order.
    const int chunks = policy_.deterministic ? std::min(geom_.P, kDeterministicChunks)
                                             : std::min(geom_.P, thread_count(policy_));
    std::vector<ImageGrid> partial(chunks, ImageGrid(n_side_));
    parallel_for(chunks, policy_, [&](std::ptrdiff_t c) {
      const int k0 = static_cast<int>(c * geom_.P / chunks);
      const int k1 = static_cast<int>((c + 1) * geom_.P / chunks);
      ImageGrid& acc = partial[c];
      for (int k = k0; k < k1; ++k)
        for (int l = 0; l <= geom_.Q; ++l) {
          const double gv = g(k, l);
          if (gv == 0.0) continue;
          for_each_sample(k, l, [&](double w, const BilinearStencil& s) {
            scatter(acc, s, w * gv);
          });
        }
    });
    ImageGrid out = std::move(partial[0]);
    for (int c = 1; c < chunks; ++c) axpy(1.0, partial[c].flat(), out.flat());
    return out;
  }

  /// Visits every quadrature sample of entry (k, l) that falls inside the
  /// square, passing the combined trapezoid-times-weight factor and stencil.
  template <typename Fn>
  void for_each_sample(int k, int l, Fn&& fn) const {
    const double phi = 2.0 * std::numbers::pi * k / geom_.P;
    const double psi = std::numbers::pi * l / (2.0 * geom_.Q);
    const double zx = std::cos(phi);
    const double zy = std::sin(phi);
    const double h = geom_.radial_step();
    const int intervals = n_side_ - 1;
    for (int sigma : {1, -1}) {
      const double dx = std::cos(phi - sigma * psi);
      const double dy = std::sin(phi - sigma * psi);
      double rlo = 0.0;
      double rhi = geom_.r_max;
      clip(zx, dx, rlo, rhi);
      clip(zy, dy, rlo, rhi);
      if (rlo > rhi) continue;
      const int jlo = std::max(0, static_cast<int>(std::floor(rlo / h)) - 1);
      const int jhi = std::min(geom_.n_radii - 1, static_cast<int>(std::ceil(rhi / h)) + 1);
      BilinearStencil s;
      for (int j = jlo; j <= jhi; ++j) {
        const double r = j * h;
        if (!locate(intervals, zx - r * dx, zy - r * dy, s)) continue;
        fn(radial_weights_[j], s);
      }
    }
  }

 private:
  static constexpr int kDeterministicChunks = 16;

  // Narrows [rlo, rhi] to the r with -1 <= z - r d <= 1 (one coordinate),
  // padded slightly; the stencil test decides membership exactly.
  static void clip(double z, double d, double& rlo, double& rhi) {
    constexpr double pad = 1e-9;
    if (std::abs(d) < 1e-14) {
      if (std::abs(z) > 1.0 + pad) rlo = rhi + 1.0;
      return;
    }
    double a = (z - 1.0) / d;
    double b = (z + 1.0) / d;
    if (a > b) std::swap(a, b);
    rlo = std::max(rlo, a - pad);
    rhi = std::min(rhi, b + pad);
  }

  ScanGeometry geom_;
  int n_side_;
  ExecutionPolicy policy_;
  std::vector<double> radial_weights_;
};

inline Sinogram forward(const ImageGrid& img, const ScanGeometry& geom,
                        ExecutionPolicy policy = {}) {
  return Projector(geom, img.n_side(), policy).forward(img);
}

inline ImageGrid adjoint(const Sinogram& g, const ScanGeometry& geom, int n_side,
                         ExecutionPolicy policy = {}) {
  return Projector(geom, n_side, policy).adjoint(g);
}

/// Continuous weighted backprojection at one point.
///
/// For each vertex z the delta constraint fixes cos psi = -<x - z, z> / |x - z|;
/// g is linearly interpolated in psi. In 2D the change of variables
/// (psi, r) -> x has Jacobian r, giving the factor U(|x - z|) / |x - z|.
/// The vertex integral uses the periodic trapezoid rule. Zero for |x| >= 1.
inline double backproject_at(const Sinogram& g, const ScanGeometry& geom, double x, double y) {
  if (x * x + y * y >= 1.0) return 0.0;
  const int P = g.vertex_count();
  const int Q = g.angle_count() - 1;
  const double dpsi = std::numbers::pi / (2.0 * Q);
  double acc = 0.0;
  for (int k = 0; k < P; ++k) {
    const double phi = g.vertex_angle(k);
    const double zx = std::cos(phi);
    const double zy = std::sin(phi);
    const double ex = x - zx;
    const double ey = y - zy;
    const double r = std::hypot(ex, ey);
    if (r == 0.0) continue;
    const double c = std::clamp(-(ex * zx + ey * zy) / r, -1.0, 1.0);
    const double psi = std::acos(c);
    if (psi > std::numbers::pi / 2) continue;
    const double t = psi / dpsi;
    const int l = std::min(static_cast<int>(t), Q - 1);
    const double a = t - l;
    const double gv = (1 - a) * g(k, l) + a * g(k, l + 1);
    acc += gv * geom.weight(r) / r;
  }
  return acc * 2.0 * std::numbers::pi / P;
}

inline ImageGrid backproject_continuous(const Sinogram& g, const ScanGeometry& geom, int n_side) {
  require(g.vertex_count() == geom.P && g.angle_count() == geom.Q + 1,
          "sinogram shape does not match geometry");
  ImageGrid out(n_side);
  for (int i = 0; i < n_side; ++i)
    for (int j = 0; j < n_side; ++j) {
      auto [x, y] = out.node(i, j);
      out(i, j) = backproject_at(g, geom, x, y);
    }
  return out;
}

}  // namespace vline
