#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vline/errors.hpp"
#include "vline/grid.hpp"
#include "vline/opnorm.hpp"
#include "vline/parallel.hpp"
#include "vline/transform.hpp"

namespace vline {

enum class Regularizer { none, l2, h1, tv };

inline std::string to_string(Regularizer r) {
  switch (r) {
    case Regularizer::none: return "none";
    case Regularizer::l2: return "l2";
    case Regularizer::h1: return "h1";
    case Regularizer::tv: return "tv";
  }
  return "?";
}

inline Regularizer parse_regularizer(const std::string& s) {
  if (s == "none" || s == "NONE" || s == "ls") return Regularizer::none;
  if (s == "l2" || s == "L2") return Regularizer::l2;
  if (s == "h1" || s == "H1") return Regularizer::h1;
  if (s == "tv" || s == "TV") return Regularizer::tv;
  throw ValidationError("unknown regularizer '" + s + "'");
}

struct SolverConfig {
  Regularizer regularizer = Regularizer::tv;
  double alpha = 0.002;
  bool positivity = false;
  int max_iters = 700;
  double theta = 1.0;
  double norm_safety = 1.01;
  int opnorm_iters = 100;
  std::uint64_t seed = 0;
  int log_every = 10;
  double rel_tol = 0.0;  // 0 disables the relative-change stopping test

  void validate() const {
    require(alpha >= 0.0, "alpha must be non-negative");
    require(regularizer == Regularizer::none || alpha > 0.0,
            "alpha must be positive for a regularized method");
    require(theta >= 0.0 && theta <= 1.0, "theta must be in [0, 1]");
    require(max_iters >= 1, "need at least one iteration");
    require(norm_safety >= 1.0, "norm safety factor must be >= 1");
    require(opnorm_iters >= 1, "need at least one power iteration");
    require(log_every >= 1, "log_every must be >= 1");
    require(rel_tol >= 0.0, "rel_tol must be non-negative");
  }
};

struct IterateRecord {
  int iter = 0;
  double e2 = std::numeric_limits<double>::quiet_NaN();  // NaN without a reference image
  double r2 = 0.0;
  double seconds = 0.0;
  double objective = std::numeric_limits<double>::quiet_NaN();  // every log_every iterations
};

struct IterateLog {
  std::vector<IterateRecord> records;
  bool has_truth = false;
  double step_bound = 0.0;  // a = norm_safety * ||(C, L)|| estimate

  const IterateRecord& last() const { return records.back(); }

  double min_e2() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : records) m = std::min(m, r.e2);
    return m;
  }

  /// CSV with header iter,E2,R2,seconds; E2 left empty without a reference.
  void write_csv(std::ostream& os) const {
    os << "iter,E2,R2,seconds\n";
    os.precision(17);
    for (const auto& r : records) {
      os << r.iter << ',';
      if (has_truth) os << r.e2;
      os << ',' << r.r2 << ',' << r.seconds << '\n';
    }
  }
};

/// Dual variables of the primal-dual iteration. q is a gradient field for
/// H1/TV, an image for L2 and unused for the plain least-squares case.
struct DualState {
  Sinogram p;
  GradientField q_grad;
  ImageGrid q_image;
};

struct Reconstruction {
  ImageGrid image;
  IterateLog log;
};

/// Read-only view of the solver state after each iteration, for diagnostics.
struct IterationView {
  int iter;
  const ImageGrid& f;
  const DualState& dual;
  const SolverConfig& config;
};
using IterationObserver = std::function<void(const IterationView&)>;

struct ErrorMetrics {
  double e2;
  double r2;
};

/// E^2 = |f_j - f|^2 / |f|^2 and R^2 = |C f_j - g|^2 / |g|^2.
inline ErrorMetrics error_metrics(const ImageGrid& fj, const ImageGrid& truth, const Sinogram& g_ref,
                                  const Projector& projector) {
  require(fj.same_shape(truth), "image shapes differ");
  const double tn = squared_norm(truth.flat());
  const double gn = squared_norm(g_ref.flat());
  require(tn > 0.0, "reference image is zero");
  require(gn > 0.0, "reference data is zero");
  double e = 0.0;
  for (std::size_t i = 0; i < fj.flat().size(); ++i) {
    const double d = fj.flat()[i] - truth.flat()[i];
    e += d * d;
  }
  const Sinogram c = projector.forward(fj);
  double r = 0.0;
  for (std::size_t i = 0; i < c.flat().size(); ++i) {
    const double d = c.flat()[i] - g_ref.flat()[i];
    r += d * d;
  }
  return {e / tn, r / gn};
}

namespace detail {

inline std::vector<double> flatten(const GradientField& g) {
  std::vector<double> v(g.dx.flat().begin(), g.dx.flat().end());
  v.insert(v.end(), g.dy.flat().begin(), g.dy.flat().end());
  return v;
}

inline GradientField unflatten_gradient(std::span<const double> v, int n_side) {
  GradientField g(n_side);
  const std::size_t m = g.dx.size();
  std::copy(v.begin(), v.begin() + m, g.dx.flat().begin());
  std::copy(v.begin() + m, v.begin() + 2 * m, g.dy.flat().begin());
  return g;
}

inline ImageGrid image_from(std::span<const double> v, int n_side) {
  ImageGrid img(n_side);
  std::copy(v.begin(), v.end(), img.flat().begin());
  return img;
}

}  // namespace detail

/// Power-iteration estimate of ||(C, L)||, L = D for H1/TV, I for L2, absent otherwise.
inline double stacked_opnorm(const Projector& projector, Regularizer reg, int iters,
                             std::uint64_t seed) {
  const int n = projector.n_side();
  const std::size_t dim = static_cast<std::size_t>(n) * n;
  const auto& geom = projector.geometry();
  const std::size_t data_dim = static_cast<std::size_t>(geom.P) * (geom.Q + 1);
  auto apply = [&](std::span<const double> x) {
    const ImageGrid img = detail::image_from(x, n);
    const Sinogram c = projector.forward(img);
    std::vector<double> out(c.flat().begin(), c.flat().end());
    if (reg == Regularizer::l2) {
      out.insert(out.end(), x.begin(), x.end());
    } else if (reg == Regularizer::h1 || reg == Regularizer::tv) {
      const auto d = detail::flatten(gradient(img));
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  };
  auto apply_adjoint = [&](std::span<const double> y) {
    Sinogram p = geom.make_sinogram();
    std::copy(y.begin(), y.begin() + data_dim, p.flat().begin());
    ImageGrid out = projector.adjoint(p);
    const auto rest = y.subspan(data_dim);
    if (reg == Regularizer::l2) {
      axpy(1.0, rest, out.flat());
    } else if (reg == Regularizer::h1 || reg == Regularizer::tv) {
      axpy(1.0, gradient_adjoint(detail::unflatten_gradient(rest, n)).flat(), out.flat());
    }
    return std::vector<double>(out.flat().begin(), out.flat().end());
  };
  return estimate_opnorm(dim, apply, apply_adjoint, iters, seed);
}

/// Primal value 1/2 |C f - g|^2 + alpha/q |L f|_q^q (the indicator of M is zero on iterates).
inline double primal_objective(double residual_sq, const ImageGrid& f, const SolverConfig& cfg) {
  double reg = 0.0;
  switch (cfg.regularizer) {
    case Regularizer::none: break;
    case Regularizer::l2: reg = 0.5 * cfg.alpha * squared_norm(f.flat()); break;
    case Regularizer::h1: {
      const GradientField d = gradient(f);
      reg = 0.5 * cfg.alpha * (squared_norm(d.dx.flat()) + squared_norm(d.dy.flat()));
      break;
    }
    case Regularizer::tv: {
      const GradientField d = gradient(f);
      for (std::size_t i = 0; i < d.dx.size(); ++i)
        reg += std::hypot(d.dx.flat()[i], d.dy.flat()[i]);
      reg *= cfg.alpha;
      break;
    }
  }
  return 0.5 * residual_sq + reg;
}

/// Chambolle-Pock iteration for
///   1/2 |C f - g|^2 + alpha/q |L f|_q^q + I_M(f)
/// with tau = sigma = 1/a, a = norm_safety * ||(C, L)||, and zero initial state:
///   p <- (p + sigma (C u - g)) / (1 + sigma)
///   q <- alpha (q + sigma D u) / max(alpha, |q + sigma D u|)     (TV, per-pixel magnitude)
///   q <- alpha (q + sigma L u) / (alpha + sigma)                 (L2, H1)
///   f <- P_M(f - tau C^* p - tau L^* q)
///   u <- f + theta (f - f_prev)
/// C u and L u are formed from C f and L f by linearity, so each iteration
/// costs one forward and one adjoint projection.
inline Reconstruction chambolle_pock(const Sinogram& g, const Projector& projector,
                                     const SolverConfig& cfg,
                                     const std::optional<ImageGrid>& truth = std::nullopt,
                                     std::optional<double> known_opnorm = std::nullopt,
                                     const IterationObserver& observer = {}) {
  cfg.validate();
  const auto& geom = projector.geometry();
  const int n = projector.n_side();
  require(g.vertex_count() == geom.P && g.angle_count() == geom.Q + 1,
          "data shape does not match geometry");
  const double gnorm2 = squared_norm(g.flat());  // zero data: R2 falls back to the raw residual
  double tnorm2 = 0.0;
  if (truth) {
    require(truth->n_side() == n, "reference image size does not match");
    tnorm2 = squared_norm(truth->flat());
    require(tnorm2 > 0.0, "reference image is zero");
  }

  const auto reg = cfg.regularizer;
  const bool grad_dual = reg == Regularizer::h1 || reg == Regularizer::tv;
  const bool image_dual = reg == Regularizer::l2;

  const double opnorm = known_opnorm ? *known_opnorm
                                     : stacked_opnorm(projector, reg, cfg.opnorm_iters, cfg.seed);
  const double a = cfg.norm_safety * opnorm;
  require(a > 0.0, "operator norm estimate is zero");
  const double tau = 1.0 / a;
  const double sigma = 1.0 / a;
  const double alpha = cfg.alpha;
  const double theta = cfg.theta;

  Reconstruction out{ImageGrid(n), {}};
  out.log.has_truth = truth.has_value();
  out.log.step_bound = a;
  ImageGrid& f = out.image;

  DualState dual{geom.make_sinogram(), grad_dual ? GradientField(n) : GradientField{},
                 image_dual ? ImageGrid(n) : ImageGrid{}};
  Sinogram cf = geom.make_sinogram();
  Sinogram cu = geom.make_sinogram();
  GradientField df(n), du(n);
  ImageGrid fu(n);  // u itself, only needed for the L2 dual

  const auto start = std::chrono::steady_clock::now();
  for (int it = 1; it <= cfg.max_iters; ++it) {
    // dual data update
    {
      auto p = dual.p.flat();
      const auto cuv = cu.flat();
      const auto gv = g.flat();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = (p[i] + sigma * (cuv[i] - gv[i])) / (1.0 + sigma);
    }
    // dual regularizer update
    if (reg == Regularizer::tv) {
      auto qx = dual.q_grad.dx.flat();
      auto qy = dual.q_grad.dy.flat();
      const auto ux = du.dx.flat();
      const auto uy = du.dy.flat();
      for (std::size_t i = 0; i < qx.size(); ++i) {
        const double yx = qx[i] + sigma * ux[i];
        const double yy = qy[i] + sigma * uy[i];
        const double scale = alpha / std::max(alpha, std::hypot(yx, yy));
        qx[i] = yx * scale;
        qy[i] = yy * scale;
      }
    } else if (reg == Regularizer::h1) {
      const double c = alpha / (alpha + sigma);
      auto qx = dual.q_grad.dx.flat();
      auto qy = dual.q_grad.dy.flat();
      const auto ux = du.dx.flat();
      const auto uy = du.dy.flat();
      for (std::size_t i = 0; i < qx.size(); ++i) {
        qx[i] = c * (qx[i] + sigma * ux[i]);
        qy[i] = c * (qy[i] + sigma * uy[i]);
      }
    } else if (reg == Regularizer::l2) {
      const double c = alpha / (alpha + sigma);
      auto q = dual.q_image.flat();
      const auto uv = fu.flat();
      for (std::size_t i = 0; i < q.size(); ++i) q[i] = c * (q[i] + sigma * uv[i]);
    }

    // primal update
    ImageGrid step = projector.adjoint(dual.p);
    if (grad_dual) axpy(1.0, gradient_adjoint(dual.q_grad).flat(), step.flat());
    if (image_dual) axpy(1.0, dual.q_image.flat(), step.flat());
    ImageGrid f_new = f;
    axpy(-tau, step.flat(), f_new.flat());
    if (cfg.positivity) project_nonneg_inplace(f_new.flat());

    const Sinogram cf_new = projector.forward(f_new);
    GradientField df_new = grad_dual ? gradient(f_new) : GradientField{};

    // extrapolation, u = f_new + theta (f_new - f)
    {
      auto cuv = cu.flat();
      const auto a1 = cf_new.flat();
      const auto a0 = cf.flat();
      for (std::size_t i = 0; i < cuv.size(); ++i) cuv[i] = (1.0 + theta) * a1[i] - theta * a0[i];
    }
    if (grad_dual) {
      for (std::size_t i = 0; i < du.dx.size(); ++i) {
        du.dx.flat()[i] = (1.0 + theta) * df_new.dx.flat()[i] - theta * df.dx.flat()[i];
        du.dy.flat()[i] = (1.0 + theta) * df_new.dy.flat()[i] - theta * df.dy.flat()[i];
      }
    }
    if (image_dual) {
      for (std::size_t i = 0; i < fu.flat().size(); ++i)
        fu.flat()[i] = (1.0 + theta) * f_new.flat()[i] - theta * f.flat()[i];
    }

    // metrics
    double res2 = 0.0;
    for (std::size_t i = 0; i < cf_new.flat().size(); ++i) {
      const double d = cf_new.flat()[i] - g.flat()[i];
      res2 += d * d;
    }
    IterateRecord rec;
    rec.iter = it;
    rec.r2 = gnorm2 > 0.0 ? res2 / gnorm2 : res2;
    if (truth) {
      double e = 0.0;
      for (std::size_t i = 0; i < f_new.flat().size(); ++i) {
        const double d = f_new.flat()[i] - truth->flat()[i];
        e += d * d;
      }
      rec.e2 = e / tnorm2;
    }
    if (it % cfg.log_every == 0 || it == cfg.max_iters) rec.objective = primal_objective(res2, f_new, cfg);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(rec.r2) || (truth && !std::isfinite(rec.e2)))
      throw DivergenceError("iteration " + std::to_string(it) + ": non-finite error metric (E2=" +
                            std::to_string(rec.e2) + ", R2=" + std::to_string(rec.r2) + ")");
    out.log.records.push_back(rec);

    double change = 0.0;
    if (cfg.rel_tol > 0.0) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < f_new.flat().size(); ++i) {
        const double d = f_new.flat()[i] - f.flat()[i];
        d2 += d * d;
      }
      const double fn = norm(f.flat());
      change = fn > 0.0 ? std::sqrt(d2) / fn : std::numeric_limits<double>::infinity();
    }

    f = std::move(f_new);
    cf = cf_new;
    if (grad_dual) df = std::move(df_new);
    if (observer) observer({it, f, dual, cfg});
    if (cfg.rel_tol > 0.0 && change < cfg.rel_tol) break;
  }
  return out;
}

/// Plain (optionally non-negative) least squares: the same iteration without
/// the regularizer dual.
inline Reconstruction least_squares(const Sinogram& g, const Projector& projector, int iters,
                                    bool positivity,
                                    const std::optional<ImageGrid>& truth = std::nullopt,
                                    std::uint64_t seed = 0) {
  SolverConfig cfg;
  cfg.regularizer = Regularizer::none;
  cfg.alpha = 0.0;
  cfg.positivity = positivity;
  cfg.max_iters = iters;
  cfg.seed = seed;
  return chambolle_pock(g, projector, cfg, truth);
}

}  // namespace vline
