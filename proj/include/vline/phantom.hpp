#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "vline/errors.hpp"
#include "vline/grid.hpp"
#include "vline/transform.hpp"

namespace vline {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Ellipse {
  Point2 center;
  Point2 semi_axes{0.5, 0.5};
  double rotation = 0.0;  // radians
  double amplitude = 1.0;

  bool contains(double x, double y) const {
    const double c = std::cos(rotation);
    const double s = std::sin(rotation);
    const double dx = x - center.x;
    const double dy = y - center.y;
    const double u = (c * dx + s * dy) / semi_axes.x;
    const double v = (-s * dx + c * dy) / semi_axes.y;
    return u * u + v * v <= 1.0;
  }
  double extent() const { return std::hypot(center.x, center.y) + std::max(semi_axes.x, semi_axes.y); }
};

/// Star polygon with `points` tips, vertices alternating between the outer and
/// inner radius; the first tip sits at angle `rotation`.
struct Star {
  Point2 center;
  double inner_radius = 0.05;
  double outer_radius = 0.14;
  int points = 5;
  double rotation = 0.0;
  double amplitude = 1.0;

  std::vector<Point2> vertices() const {
    std::vector<Point2> v;
    v.reserve(2 * points);
    for (int m = 0; m < 2 * points; ++m) {
      const double a = rotation + std::numbers::pi * m / points;
      const double r = m % 2 == 0 ? outer_radius : inner_radius;
      v.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
    return v;
  }

  // Crossing-number point-in-polygon test.
  bool contains(double x, double y) const {
    if (std::hypot(x - center.x, y - center.y) > outer_radius) return false;
    const auto v = vertices();
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if ((v[i].y > y) != (v[j].y > y)) {
        const double xc = v[j].x + (y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
        if (x < xc) inside = !inside;
      }
    }
    return inside;
  }
  double extent() const { return std::hypot(center.x, center.y) + outer_radius; }
};

/// Superposition of indicator features scaled by their amplitudes.
struct PhantomSpec {
  std::vector<Ellipse> ellipses;
  std::vector<Star> stars;
  double support_margin = 0.95;

  /// Ellipse with two additive five-point stars.
  static PhantomSpec standard() {
    PhantomSpec spec;
    spec.ellipses.push_back({{-0.1, 0.0}, {0.55, 0.4}, 0.0, 1.0});
    spec.stars.push_back({{0.2, 0.25}, 0.05, 0.14, 5, 0.0, 1.0});
    spec.stars.push_back({{-0.3, -0.2}, 0.05, 0.14, 5, 0.0, 1.0});
    return spec;
  }

  static PhantomSpec disc(double radius, double amplitude = 1.0) {
    PhantomSpec spec;
    spec.ellipses.push_back({{0.0, 0.0}, {radius, radius}, 0.0, amplitude});
    return spec;
  }

  void validate() const {
    require(support_margin > 0.0 && support_margin <= 0.95, "support margin must be in (0, 0.95]");
    for (const auto& e : ellipses) {
      require(e.amplitude >= 0.0, "ellipse amplitude must be non-negative");
      require(e.semi_axes.x > 0.0 && e.semi_axes.y > 0.0, "ellipse semi-axes must be positive");
      require(e.extent() <= support_margin, "ellipse leaves the support margin");
    }
    for (const auto& s : stars) {
      require(s.amplitude >= 0.0, "star amplitude must be non-negative");
      require(s.points >= 2 && s.inner_radius > 0.0 && s.outer_radius >= s.inner_radius,
              "invalid star shape");
      require(s.extent() <= support_margin, "star leaves the support margin");
    }
  }

  double value(double x, double y) const {
    double v = 0.0;
    for (const auto& e : ellipses)
      if (e.contains(x, y)) v += e.amplitude;
    for (const auto& s : stars)
      if (s.contains(x, y)) v += s.amplitude;
    return v;
  }

  /// The spec of the phantom rotated counter-clockwise by `angle` about the origin.
  PhantomSpec rotated(double angle) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    auto rot = [&](Point2 p) { return Point2{c * p.x - s * p.y, s * p.x + c * p.y}; };
    PhantomSpec out = *this;
    for (auto& e : out.ellipses) {
      e.center = rot(e.center);
      e.rotation += angle;
    }
    for (auto& st : out.stars) {
      st.center = rot(st.center);
      st.rotation += angle;
    }
    return out;
  }
};

/// Rasterizes the phantom at the (N+1)^2 lattice nodes, no anti-aliasing.
inline ImageGrid make_phantom(int N, const PhantomSpec& spec) {
  require(N >= 2, "phantom needs N >= 2");
  spec.validate();
  return ImageGrid::sample(N + 1, [&](double x, double y) { return spec.value(x, y); });
}

/// Node value = fraction of the node's h x h cell covered by the phantom,
/// estimated on a sub x sub midpoint lattice. Used where a discretization of
/// the continuous indicator is wanted rather than the point-sampled phantom.
inline ImageGrid cell_average_phantom(int N, const PhantomSpec& spec, int sub = 16) {
  require(N >= 2, "phantom needs N >= 2");
  require(sub >= 1, "subsampling factor must be positive");
  spec.validate();
  const double h = 2.0 / N;
  return ImageGrid::sample(N + 1, [&](double x, double y) {
    double acc = 0.0;
    for (int a = 0; a < sub; ++a)
      for (int b = 0; b < sub; ++b)
        acc += spec.value(x + h * ((a + 0.5) / sub - 0.5), y + h * ((b + 0.5) / sub - 0.5));
    return acc / (sub * sub);
  });
}

/// Adds i.i.d. Gaussian noise rescaled so that ||xi|| / ||g|| == delta.
/// Returns the noisy data and the achieved ratio.
inline std::pair<Sinogram, double> add_noise(const Sinogram& g, double delta, std::uint64_t seed) {
  require(delta >= 0.0, "noise level must be non-negative");
  const double gnorm = norm(g.flat());
  require(gnorm > 0.0, "cannot calibrate noise against zero data");
  if (delta == 0.0) return {g, 0.0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> xi(g.flat().size());
  for (double& v : xi) v = normal(rng);
  const double scale = delta * gnorm / norm(xi);
  Sinogram out = g;
  axpy(scale, xi, out.flat());
  std::vector<double> diff(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) diff[i] = out.flat()[i] - g.flat()[i];
  return {std::move(out), norm(diff) / gnorm};
}

}  // namespace vline
