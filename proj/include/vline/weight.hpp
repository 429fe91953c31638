#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "vline/errors.hpp"

namespace vline {

/// Radial weight U(r) applied along each branch, with its derivative.
struct WeightSpec {
  std::function<double(double)> u;
  std::function<double(double)> u_prime;
  std::string label;

  double operator()(double r) const { return u(r); }

  /// Checks U >= 0 on an equidistant sample of [0, 2].
  void validate(int samples = 201) const {
    require(static_cast<bool>(u) && static_cast<bool>(u_prime), "weight functions unset");
    for (int i = 0; i < samples; ++i) {
      const double r = 2.0 * i / (samples - 1);
      const double v = u(r);
      require(std::isfinite(v) && v >= 0.0, "weight " + label + " is negative on [0,2]");
    }
  }

  static WeightSpec constant(double c = 1.0) {
    return {[c](double) { return c; }, [](double) { return 0.0; },
            c == 1.0 ? std::string("constant") : "constant(" + std::to_string(c) + ")"};
  }

  /// Attenuation weight e^{-mu r}.
  static WeightSpec exponential(double mu) {
    return {[mu](double r) { return std::exp(-mu * r); },
            [mu](double r) { return -mu * std::exp(-mu * r); },
            "exp(-" + std::to_string(mu) + " r)"};
  }
};

}  // namespace vline
