#pragma once

#include <cmath>

#include "vline/errors.hpp"

namespace vline {

/// Gegenbauer polynomial C_l^mu normalized so that C_l^mu(1) = 1.
///
/// mu = 0 is the Chebyshev polynomial T_l, the limit of the normalized family.
/// Evaluated by the three-term recurrence; the normalization constant comes
/// from running the same recurrence at x = 1.
inline double gegenbauer_normalized(int degree, double mu, double x) {
  require(degree >= 0, "Gegenbauer degree must be non-negative");
  require(mu >= 0.0, "Gegenbauer parameter must be non-negative");
  if (degree == 0) return 1.0;
  if (mu == 0.0) {
    double prev = 1.0;
    double cur = x;
    for (int l = 1; l < degree; ++l) {
      const double next = 2.0 * x * cur - prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }
  // (l+1) C_{l+1} = 2 (l + mu) x C_l - (l + 2 mu - 1) C_{l-1}
  double prev = 1.0, cur = 2.0 * mu * x;
  double prev1 = 1.0, cur1 = 2.0 * mu;
  for (int l = 1; l < degree; ++l) {
    const double next = (2.0 * (l + mu) * x * cur - (l + 2.0 * mu - 1.0) * prev) / (l + 1);
    const double next1 = (2.0 * (l + mu) * cur1 - (l + 2.0 * mu - 1.0) * prev1) / (l + 1);
    prev = cur;
    cur = next;
    prev1 = cur1;
    cur1 = next1;
  }
  return cur / cur1;
}

}  // namespace vline
