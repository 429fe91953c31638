#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "vline/errors.hpp"
#include "vline/gegenbauer.hpp"
#include "vline/grid.hpp"
#include "vline/transform.hpp"
#include "vline/weight.hpp"

// Harmonic decomposition of images and V-line data, and the Abel-type
// integral operators linking the two.
//
// For n = 2 the circular harmonics are orthonormal on [0, 2 pi):
//   Y_{0,1} = 1/sqrt(2 pi),  Y_{l,1} = cos(l t)/sqrt(pi),  Y_{l,2} = sin(l t)/sqrt(pi).
// The coefficient profiles satisfy
//   (Cf)_l(psi) = |S^{n-2}| int_{sin psi}^1 f_l(rho) rho K_l(psi, rho) / sqrt(rho^2 - sin^2 psi) d rho
// with
//   K_l(psi, rho) = sin(psi)^{n-2} sum_s U(r_s) r_s^{n-2} C_l((sin^2 psi + s cos psi w) / rho),
//   w = sqrt(rho^2 - sin^2 psi),  r_s = cos psi - s w,
// where r_s is the distance from the vertex along the branch and the argument
// of C_l is the cosine of the polar angle of the integration point.

namespace vline {

/// Surface area of the unit sphere S^d in R^{d+1}; |S^0| = 2.
inline double sphere_area(int d) {
  require(d >= 0, "sphere dimension must be non-negative");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

struct AbelKernelContext {
  int n = 2;    // ambient dimension
  int ell = 0;  // harmonic degree
  WeightSpec weight = WeightSpec::constant();

  double gegenbauer_mu() const { return 0.5 * (n - 2); }
  double gegenbauer(double x) const { return gegenbauer_normalized(ell, gegenbauer_mu(), x); }
  /// U_n(r) = U(r) r^{n-2}
  double weight_n(double r) const { return weight(r) * std::pow(r, n - 2); }

  void validate() const {
    require(n >= 2, "dimension must be at least 2");
    require(ell >= 0, "harmonic degree must be non-negative");
  }
};

/// Sampled radial (rho) or angular (psi, t, s) coefficient profile.
struct HarmonicProfile {
  int ell = 0;
  int k = 1;  // 1: cosine, 2: sine
  std::vector<double> grid;
  std::vector<double> samples;

  /// Piecewise-linear interpolation, constant beyond the end nodes.
  double at(double x) const {
    require(!grid.empty() && grid.size() == samples.size(), "empty profile");
    if (x <= grid.front()) return samples.front();
    if (x >= grid.back()) return samples.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
    const double a = (x - grid[i]) / (grid[i + 1] - grid[i]);
    return (1 - a) * samples[i] + a * samples[i + 1];
  }
};

inline void validate_harmonic(int ell, int k) {
  require(ell >= 0, "harmonic degree must be non-negative");
  require(k == 1 || (ell > 0 && k == 2), "harmonic index k must be 1 (cosine) or 2 (sine, l > 0)");
}

/// Orthonormal circular harmonic Y_{l,k}(theta).
inline double circular_harmonic(int ell, int k, double theta) {
  if (ell == 0) return 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double c = 1.0 / std::sqrt(std::numbers::pi);
  return k == 1 ? c * std::cos(ell * theta) : c * std::sin(ell * theta);
}

/// f_{l,k}(rho) = int_0^{2 pi} T[f](rho cos t, rho sin t) Y_{l,k}(t) dt on
/// radial_nodes equidistant radii spanning [0, 1] (the origin included).
inline HarmonicProfile image_coeffs(const ImageGrid& img, int ell, int k, int radial_nodes,
                                    int angular_nodes = 0) {
  validate_harmonic(ell, k);
  require(radial_nodes >= 2, "need at least 2 radial nodes");
  if (angular_nodes <= 0) angular_nodes = std::max(256, 4 * img.n_side());
  std::vector<double> cs(angular_nodes), sn(angular_nodes), y(angular_nodes);
  for (int m = 0; m < angular_nodes; ++m) {
    const double t = 2.0 * std::numbers::pi * m / angular_nodes;
    cs[m] = std::cos(t);
    sn[m] = std::sin(t);
    y[m] = circular_harmonic(ell, k, t);
  }
  HarmonicProfile out{ell, k, {}, {}};
  out.grid.resize(radial_nodes);
  out.samples.resize(radial_nodes);
  const double dt = 2.0 * std::numbers::pi / angular_nodes;
  for (int i = 0; i < radial_nodes; ++i) {
    const double rho = static_cast<double>(i) / (radial_nodes - 1);
    double acc = 0.0;
    for (int m = 0; m < angular_nodes; ++m) acc += bilinear_eval(img, rho * cs[m], rho * sn[m]) * y[m];
    out.grid[i] = rho;
    out.samples[i] = acc * dt;
  }
  return out;
}

/// (Cf)_{l,k}(psi_l) by the periodic trapezoid rule over the vertex angles.
inline HarmonicProfile sino_coeffs(const Sinogram& g, int ell, int k) {
  validate_harmonic(ell, k);
  const int P = g.vertex_count();
  HarmonicProfile out{ell, k, {}, {}};
  out.grid.resize(g.angle_count());
  out.samples.assign(g.angle_count(), 0.0);
  for (int kk = 0; kk < P; ++kk) {
    const double y = circular_harmonic(ell, k, g.vertex_angle(kk));
    for (int l = 0; l < g.angle_count(); ++l) out.samples[l] += g(kk, l) * y;
  }
  for (int l = 0; l < g.angle_count(); ++l) {
    out.grid[l] = g.opening_angle(l);
    out.samples[l] *= 2.0 * std::numbers::pi / P;
  }
  return out;
}

namespace detail {
inline double sigma_term(const AbelKernelContext& ctx, double sin_psi, double cos_psi, double w,
                         double rho, int sigma) {
  const double r = cos_psi - sigma * w;
  const double arg = rho > 0.0 ? (sin_psi * sin_psi + sigma * cos_psi * w) / rho : sigma;
  return ctx.weight_n(r) * ctx.gegenbauer(std::clamp(arg, -1.0, 1.0));
}
}  // namespace detail

/// K_l(psi, rho) for sin psi <= rho <= 1.
inline double kernel_K(const AbelKernelContext& ctx, double psi, double rho) {
  ctx.validate();
  require(psi >= 0.0 && psi <= std::numbers::pi / 2 + 1e-15, "psi outside [0, pi/2]");
  const double s = std::sin(psi);
  const double c = std::cos(psi);
  const double d2 = rho * rho - s * s;
  require(d2 >= -1e-13 && rho <= 1.0 + 1e-13, "kernel_K needs sin(psi) <= rho <= 1");
  const double w = std::sqrt(std::max(d2, 0.0));
  const double sum =
      detail::sigma_term(ctx, s, c, w, rho, 1) + detail::sigma_term(ctx, s, c, w, rho, -1);
  return std::pow(s, ctx.n - 2) * sum;
}

/// |S^{n-2}| int_{sin psi}^1 f(rho) rho K(psi, rho) / sqrt(rho^2 - sin^2 psi) d rho.
///
/// The substitution rho = sqrt(sin^2 psi + t^2) turns the measure into dt on
/// [0, cos psi], removing the inverse square root; trapezoid with `nodes` points.
inline HarmonicProfile abel_apply(const AbelKernelContext& ctx, const HarmonicProfile& f_profile,
                                  std::span<const double> psi_grid, int nodes = 2001) {
  ctx.validate();
  require(nodes >= 2, "need at least 2 quadrature nodes");
  const double area = sphere_area(ctx.n - 2);
  HarmonicProfile out{f_profile.ell, f_profile.k, {psi_grid.begin(), psi_grid.end()}, {}};
  out.samples.reserve(psi_grid.size());
  for (double psi : psi_grid) {
    require(psi >= 0.0 && psi <= std::numbers::pi / 2 + 1e-15, "psi outside [0, pi/2]");
    const double s = std::sin(psi);
    const double tmax = std::cos(psi);
    if (tmax <= 0.0) {
      out.samples.push_back(0.0);
      continue;
    }
    const double h = tmax / (nodes - 1);
    double acc = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double t = i * h;
      const double rho = std::min(1.0, std::sqrt(s * s + t * t));
      const double v = f_profile.at(rho) * kernel_K(ctx, psi, rho);
      acc += (i == 0 || i + 1 == nodes) ? 0.5 * v : v;
    }
    out.samples.push_back(area * acc * h);
  }
  return out;
}

/// The same coefficient integral in the alpha parametrization,
///   |S^{n-2}| int_0^{pi - 2 psi} f(sin psi / sin(psi + a)) U(sin a / sin(psi + a))
///       sin(psi)^{n-1} sin(a)^{n-2} / sin(psi + a)^n C_l(cos a) da,
/// with alpha being the polar angle of the integration point.
///
/// The integrand concentrates within O(psi) of both endpoints, so the trapezoid
/// rule runs on the graded variable a = A (u - sin(2 pi u) / (2 pi)),
/// A = pi - 2 psi. At psi = 0 the integrand collapses onto the endpoints and
/// the n = 2 limit 2 int_0^1 f(rho) [U(1 - rho) + (-1)^l U(1 + rho)] d rho is
/// used; it vanishes for n >= 3.
inline HarmonicProfile coeff_forward_alpha(const AbelKernelContext& ctx,
                                           const HarmonicProfile& f_profile,
                                           std::span<const double> psi_grid, int nodes = 4001) {
  ctx.validate();
  require(nodes >= 3, "need at least 3 quadrature nodes");
  const double area = sphere_area(ctx.n - 2);
  const int n = ctx.n;
  HarmonicProfile out{f_profile.ell, f_profile.k, {psi_grid.begin(), psi_grid.end()}, {}};
  out.samples.reserve(psi_grid.size());
  for (double psi : psi_grid) {
    require(psi >= 0.0 && psi <= std::numbers::pi / 2 + 1e-15, "psi outside [0, pi/2]");
    if (psi == 0.0) {
      double acc = 0.0;
      if (n == 2) {
        const double sign = ctx.ell % 2 == 0 ? 1.0 : -1.0;
        const double h = 1.0 / (nodes - 1);
        for (int i = 0; i < nodes; ++i) {
          const double rho = i * h;
          const double v = f_profile.at(rho) * (ctx.weight(1 - rho) + sign * ctx.weight(1 + rho));
          acc += (i == 0 || i + 1 == nodes) ? 0.5 * v : v;
        }
        acc *= h;
      }
      out.samples.push_back(area * acc);
      continue;
    }
    const double span = std::numbers::pi - 2.0 * psi;
    if (span <= 0.0) {
      out.samples.push_back(0.0);
      continue;
    }
    const double sp = std::sin(psi);
    const double du = 1.0 / (nodes - 1);
    double acc = 0.0;
    // Endpoint terms vanish: the grading derivative is zero there.
    for (int i = 1; i + 1 < nodes; ++i) {
      const double u = i * du;
      const double a = span * (u - std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi));
      const double da = span * (1.0 - std::cos(2.0 * std::numbers::pi * u));
      const double spa = std::sin(psi + a);
      const double rho = sp / spa;
      const double r = std::sin(a) / spa;
      const double jac = std::pow(sp, n - 1) * std::pow(std::sin(a), n - 2) / std::pow(spa, n);
      acc += f_profile.at(rho) * ctx.weight(r) * jac * ctx.gegenbauer(std::cos(a)) * da;
    }
    out.samples.push_back(area * acc * du);
  }
  return out;
}

/// F_l(t, s) = sum_s s^l U_n(sqrt t - s sqrt(t - s)) C_l((sqrt t sqrt(t - s) + s (1 - t)) / sqrt(1 - s)),
/// 0 <= s <= t <= 1, s < 1. On the diagonal this is v(s) = 2 U_n(sqrt s) C_l(sqrt(1 - s)).
inline double kernel_F(const AbelKernelContext& ctx, double t, double s) {
  ctx.validate();
  require(s >= 0.0 && s <= t && t <= 1.0 && s < 1.0, "kernel_F needs 0 <= s <= t <= 1, s < 1");
  if (t == s) return 2.0 * ctx.weight_n(std::sqrt(s)) * ctx.gegenbauer(std::sqrt(1.0 - s));
  const double rt = std::sqrt(t);
  const double w = std::sqrt(t - s);
  const double denom = std::sqrt(1.0 - s);
  double sum = 0.0;
  for (int sigma : {1, -1}) {
    const double sign = (sigma < 0 && ctx.ell % 2 == 1) ? -1.0 : 1.0;
    const double arg = std::clamp((rt * w + sigma * (1.0 - t)) / denom, -1.0, 1.0);
    sum += sign * ctx.weight_n(rt - sigma * w) * ctx.gegenbauer(arg);
  }
  return sum;
}

struct HatProfiles {
  HarmonicProfile g_hat;  // over t
  HarmonicProfile f_hat;  // over s
};

/// g^(t) = |S^{n-2}|^{-1} (1 - t)^{-(n-2)/2} (Cf)(arccos sqrt t) and
/// f^(s) = f(sqrt(1 - s)) / 2, sampled on the requested grids.
inline HatProfiles hat_transforms(const HarmonicProfile& g_profile,
                                  const HarmonicProfile& f_profile, const AbelKernelContext& ctx,
                                  std::span<const double> t_grid, std::span<const double> s_grid) {
  ctx.validate();
  const double area = sphere_area(ctx.n - 2);
  HatProfiles out{{g_profile.ell, g_profile.k, {t_grid.begin(), t_grid.end()}, {}},
                  {f_profile.ell, f_profile.k, {s_grid.begin(), s_grid.end()}, {}}};
  for (double t : t_grid) {
    require(t >= 0.0 && t <= 1.0, "t outside [0, 1]");
    require(!(t == 1.0 && ctx.n >= 3), "t = 1 is a pole of the prefactor for n >= 3");
    const double pre = std::pow(1.0 - t, -0.5 * (ctx.n - 2)) / area;
    out.g_hat.samples.push_back(pre * g_profile.at(std::acos(std::sqrt(t))));
  }
  for (double s : s_grid) {
    require(s >= 0.0 && s <= 1.0, "s outside [0, 1]");
    out.f_hat.samples.push_back(0.5 * f_profile.at(std::sqrt(1.0 - s)));
  }
  return out;
}

/// int_0^t f^(s) F_l(t, s) / sqrt(t - s) ds via s = t - u^2, trapezoid in u.
inline double abel_volterra(const AbelKernelContext& ctx, const HarmonicProfile& f_hat, double t,
                            int nodes = 2001) {
  require(t >= 0.0 && t < 1.0, "abel_volterra needs 0 <= t < 1");
  require(nodes >= 2, "need at least 2 quadrature nodes");
  const double umax = std::sqrt(t);
  if (umax == 0.0) return 0.0;
  const double h = umax / (nodes - 1);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double u = i * h;
    const double s = std::max(0.0, t - u * u);
    const double v = f_hat.at(s) * kernel_F(ctx, t, s);
    acc += (i == 0 || i + 1 == nodes) ? 0.5 * v : v;
  }
  return 2.0 * acc * h;
}

/// min over s of (n + 1)/2 + sqrt(s) U'(sqrt s) / U(sqrt s). A positive value
/// certifies the uniqueness hypothesis on the sampled grid.
inline double uniqueness_margin(const WeightSpec& weight, int n, std::span<const double> s_grid) {
  require(!s_grid.empty(), "empty s grid");
  double margin = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    require(s >= 0.0, "s must be non-negative");
    const double r = std::sqrt(s);
    const double u = weight(r);
    require(u > 0.0, "weight must be positive on the s grid");
    margin = std::min(margin, 0.5 * (n + 1) + r * weight.u_prime(r) / u);
  }
  return margin;
}

inline std::vector<double> linspace(double a, double b, int count) {
  require(count >= 2, "linspace needs at least 2 points");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = a + (b - a) * i / (count - 1);
  v.back() = b;
  return v;
}

}  // namespace vline
