#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vline/errors.hpp"
#include "vline/grid.hpp"

namespace vline {

/// Power iteration on K^*K for the spectral norm of K.
///
/// apply(x) must return K x and apply_adjoint(y) K^* y, both as
/// std::vector<double>. Starts from a seeded Gaussian vector and returns the
/// square root of the largest Rayleigh quotient seen, so the estimate is a
/// lower bound on ||K|| that never decreases with more iterations.
template <typename Apply, typename ApplyAdjoint>
double estimate_opnorm(std::size_t dim, Apply&& apply, ApplyAdjoint&& apply_adjoint, int iters,
                       std::uint64_t seed) {
  require(iters >= 1, "power iteration needs at least one iteration");
  require(dim >= 1, "power iteration on an empty space");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(dim);
  for (double& v : x) v = normal(rng);
  double nx = norm(x);
  for (double& v : x) v /= nx;

  double best = 0.0;
  for (int it = 0; it < iters; ++it) {
    const std::vector<double> y = apply(std::span<const double>(x));
    best = std::max(best, squared_norm(y));
    std::vector<double> z = apply_adjoint(std::span<const double>(y));
    const double nz = norm(z);
    if (nz == 0.0) break;
    for (double& v : z) v /= nz;
    x = std::move(z);
  }
  return std::sqrt(best);
}

}  // namespace vline
