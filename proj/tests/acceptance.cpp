// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance           desk-scale checks (run under ctest)
//   acceptance --full    additionally runs the N = 256, P = 200, Q = 150 experiments

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vline/vline.hpp"

using namespace vline;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run(const std::string& id, const std::string& name, double budget_s,
         const std::function<void(Outcome&)>& body) {
  Outcome out;
  out.detail << std::setprecision(4);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    out.pass = false;
    out.detail << " [over time budget]";
  }
  if (!out.pass) ++failures;
  std::cout << (out.pass ? "PASS " : "FAIL ") << id << " " << name << ":" << out.detail.str()
            << " (" << std::fixed << std::setprecision(1) << secs << " s, budget " << budget_s
            << " s)" << std::defaultfloat << std::endl;
}

// Reference regularization parameters refer to N = 256, P = 200, Q = 150. The data
// term scales with the number of samples P Q; for images with jumps the
// discrete TV and H1 terms scale like N and the L2 term like N^2.
double alpha_scale(Regularizer reg, int N, int P, int Q) {
  const double data = static_cast<double>(P) * Q / (200.0 * 150.0);
  const double grid = 256.0 / N;
  return reg == Regularizer::l2 ? data * grid * grid : data * grid;
}

struct Scale {
  int N, P, Q;
};

constexpr Scale kDesk{64, 100, 75};
constexpr Scale kFull{256, 200, 150};

Projector make_projector(const Scale& s, ExecutionPolicy policy = {}) {
  return Projector(ScanGeometry::for_grid(s.N + 1, s.P, s.Q, WeightSpec::exponential(0.5)), s.N + 1,
                   policy);
}

SolverConfig method(Regularizer reg, double ref_alpha, const Scale& s, int iters, bool positivity) {
  SolverConfig cfg;
  cfg.regularizer = reg;
  cfg.alpha = reg == Regularizer::none ? 0.0 : ref_alpha * alpha_scale(reg, s.N, s.P, s.Q);
  cfg.max_iters = iters;
  cfg.positivity = positivity;
  cfg.seed = derive_seed(1, SeedStream::power_iteration);
  return cfg;
}

struct NormCache {
  const Projector& op;
  std::optional<double> none{}, l2{}, grad{};

  double get(Regularizer reg) {
    auto& slot = reg == Regularizer::none ? none : reg == Regularizer::l2 ? l2 : grad;
    if (!slot) slot = stacked_opnorm(op, reg, 100, derive_seed(1, SeedStream::power_iteration));
    return *slot;
  }
};

// Exact-data comparison: E2(TV) vs E2(L2), E2(H1) with and without positivity.
void exact_experiment(Outcome& o, const Scale& s, double margin) {
  const Projector op = make_projector(s);
  const ImageGrid truth = make_phantom(s.N, PhantomSpec::standard());
  const Sinogram g = op.forward(truth);
  NormCache norms{op};
  for (bool pos : {false, true}) {
    auto e2 = [&](Regularizer reg, double a) {
      const auto cfg = method(reg, a, s, 700, pos);
      return chambolle_pock(g, op, cfg, truth, norms.get(reg)).log.last().e2;
    };
    const double tv = e2(Regularizer::tv, 0.002);
    const double h1 = e2(Regularizer::h1, 0.002);
    const double l2 = e2(Regularizer::l2, 0.01);
    o.detail << (pos ? " | positivity:" : " no positivity:") << " E2 TV=" << tv << " H1=" << h1
             << " L2=" << l2 << " ratio=" << tv / std::min(h1, l2);
    o.check(tv < h1 && tv < l2, "TV not best");
    if (margin > 0.0) o.check(tv <= margin * std::min(h1, l2), "margin");
  }
}

// Noisy-data comparison on the first noise seed, semi-convergence of plain
// least squares over `ls_seeds` noise realisations.
void noisy_experiment(Outcome& o, const Scale& s, int ls_seeds, int ls_budget) {
  const Projector op = make_projector(s);
  const ImageGrid truth = make_phantom(s.N, PhantomSpec::standard());
  const Sinogram exact = op.forward(truth);
  NormCache norms{op};
  auto noisy = [&](std::uint64_t base) {
    auto [g, achieved] = add_noise(exact, 0.05, derive_seed(base, SeedStream::noise));
    return g;
  };
  const Sinogram g1 = noisy(1);
  for (bool pos : {false, true}) {
    auto e2 = [&](Regularizer reg, double a) {
      const auto cfg = method(reg, a, s, 200, pos);
      return chambolle_pock(g1, op, cfg, truth, norms.get(reg)).log.last().e2;
    };
    const double tv = e2(Regularizer::tv, 0.015);
    const double h1 = e2(Regularizer::h1, 0.06);
    const double l2 = e2(Regularizer::l2, 0.14);
    const double ls = chambolle_pock(g1, op, method(Regularizer::none, 0.0, s, 15, pos), truth,
                                     norms.get(Regularizer::none))
                          .log.last()
                          .e2;
    o.detail << (pos ? " | positivity:" : " no positivity:") << " E2 TV=" << tv << " H1=" << h1
             << " L2=" << l2 << " LS15=" << ls;
    o.check(tv < h1 && tv < l2 && tv < ls, "TV not best");
  }
  int semi = 0;
  o.detail << " | LS argmin iterations:";
  for (int seed = 1; seed <= ls_seeds; ++seed) {
    const Sinogram g = seed == 1 ? g1 : noisy(seed);
    const auto r = chambolle_pock(g, op, method(Regularizer::none, 0.0, s, ls_budget, false), truth,
                                  norms.get(Regularizer::none));
    const auto& recs = r.log.records;
    std::size_t best = 0;
    for (std::size_t i = 1; i < recs.size(); ++i)
      if (recs[i].e2 < recs[best].e2) best = i;
    const bool interior = best > 0 && best + 1 < recs.size() &&
                          recs.back().e2 > recs[best].e2 * (1.0 + 1e-3);
    semi += interior;
    o.detail << " " << recs[best].iter << (interior ? "" : "(edge)");
  }
  o.detail << " -> " << semi << "/" << ls_seeds << " semi-convergent";
  o.check(semi >= (4 * ls_seeds + 4) / 5, "semi-convergence on fewer than 4 of 5 seeds");
}

double rel_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(num) / norm(b);
}

}  // namespace

int main(int argc, char** argv) {
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full") == 0) {
      full = true;
    } else {
      std::cerr << "usage: acceptance [--full]\n";
      return 2;
    }
  }

  run("C1", "exact adjoint (N=16, P=20, Q=10, 20 seeds)", 1.0, [](Outcome& o) {
    double worst = 0.0;
    for (const auto& w : {WeightSpec::exponential(0.5), WeightSpec::constant()})
      worst = std::max(worst, adjoint_dot_test(16, 20, 10, w, 20, derive_seed(1, SeedStream::test_vectors)).max_defect);
    o.detail << " max defect=" << worst;
    o.check(worst < 1e-12, "defect >= 1e-12");
  });

  run("C2", "disc chord oracle (r=0.5, U=1, N=256)", 10.0, [](Outcome& o) {
    const int N = 256;
    const auto geom = ScanGeometry::for_grid(N + 1, 200, 150, WeightSpec::constant());
    auto deviation = [&](const ImageGrid& f) {
      const Sinogram g = forward(f, geom);
      double worst = 0.0;
      for (int k = 0; k < geom.P; ++k)
        for (int l = 0; l <= geom.Q; ++l) {
          const double s = std::sin(g.opening_angle(l));
          if (s >= 0.45) continue;
          const double chord = 4.0 * std::sqrt(0.25 - s * s);
          worst = std::max(worst, std::abs(g(k, l) - chord) / chord);
        }
      return worst;
    };
    // Cell averages discretize the indicator; point samples are reported for reference.
    const double cell = deviation(cell_average_phantom(N, PhantomSpec::disc(0.5)));
    const double point = deviation(make_phantom(N, PhantomSpec::disc(0.5)));
    o.detail << " max relative deviation=" << cell << " (point-sampled disc " << point << ")";
    o.check(cell < 0.01, "deviation >= 1%");
  });

  run("C3", "spectral decomposition (N=128, mu=0.5, l=0..3)", 60.0, [](Outcome& o) {
    const auto weight = WeightSpec::exponential(0.5);
    struct Level {
      int N, P, Q, abel;
    };
    const Level levels[] = {{64, 100, 75, 1001}, {128, 200, 150, 2001}, {256, 400, 300, 4001}};
    std::vector<SpectralReport> reps;
    for (const auto& lv : levels) {
      const ImageGrid f = make_phantom(lv.N, PhantomSpec::standard());
      reps.push_back(spectral_check(f, ScanGeometry::for_grid(lv.N + 1, lv.P, lv.Q, weight), 3, 0, 0,
                                    lv.abel, 0.1));
    }
    double worst = 0.0;
    for (const auto& r : reps[1].rows) worst = std::max(worst, r.rel_error);
    o.detail << " max error at N=128: " << worst << "; errors N=64/128/256:";
    bool decreasing = true;
    for (std::size_t i = 0; i < reps[1].rows.size(); ++i) {
      const auto& r = reps[1].rows[i];
      o.detail << " l" << r.ell << (r.k == 1 ? "c " : "s ") << reps[0].rows[i].rel_error << "/"
               << r.rel_error << "/" << reps[2].rows[i].rel_error;
      decreasing = decreasing && reps[1].rows[i].rel_error < reps[0].rows[i].rel_error &&
                   reps[2].rows[i].rel_error < reps[1].rows[i].rel_error;
    }
    o.check(worst < 1e-2, "error >= 1e-2 at N=128");
    o.check(decreasing, "error does not decrease under refinement");
  });

  run("C4", "uniqueness margin", 1.0, [](Outcome& o) {
    const auto s = linspace(0.0, 2.0, 2001);
    const double m05 = uniqueness_margin(WeightSpec::exponential(0.5), 2, s);
    const double m2 = uniqueness_margin(WeightSpec::exponential(2.0), 2, s);
    o.detail << " mu=0.5: " << std::setprecision(12) << m05 << " mu=2: " << m2;
    o.check(std::abs(m05 - (1.5 - 0.5 * std::sqrt(2.0))) < 1e-10, "mu=0.5 closed form");
    o.check(m2 < 0.0, "mu=2 margin not negative");
  });

  run("C5", "exact data, desk scale (N=64, P=100, Q=75, 700 iterations)", 300.0,
      [](Outcome& o) { exact_experiment(o, kDesk, 0.5); });

  run("C6", "noisy data, desk scale (delta=5%, 200 iterations, LS at 15)", 300.0,
      [](Outcome& o) { noisy_experiment(o, kDesk, 5, 200); });

  run("C7", "noise convergence, TV with alpha ~ delta (N=64)", 600.0, [](Outcome& o) {
    const Projector op = make_projector(kDesk);
    const ImageGrid truth = make_phantom(kDesk.N, PhantomSpec::standard());
    const Sinogram exact = op.forward(truth);
    const double opn = stacked_opnorm(op, Regularizer::tv, 100, derive_seed(1, SeedStream::power_iteration));
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : {0.04, 0.02, 0.01}) {
      const Sinogram g = add_noise(exact, delta, derive_seed(1, SeedStream::noise)).first;
      const auto cfg = method(Regularizer::tv, 0.015 * delta / 0.05, kDesk, 700, false);
      const double e2 = chambolle_pock(g, op, cfg, truth, opn).log.last().e2;
      o.detail << " delta=" << delta << ": E2=" << e2;
      o.check(e2 <= prev, "E2 increased as delta decreased");
      prev = e2;
    }
  });

  run("C8", "invariant suites", 120.0, [](Outcome& o) {
    std::mt19937_64 rng(derive_seed(1, SeedStream::test_vectors));
    std::normal_distribution<double> normal;
    auto random_image = [&](int n) {
      ImageGrid f(n);
      for (double& v : f.flat()) v = normal(rng);
      return f;
    };

    // gradient / divergence duality
    double duality = 0.0;
    for (int n : {5, 17, 33}) {
      const ImageGrid f = random_image(n);
      GradientField q(n);
      for (double& v : q.dx.flat()) v = normal(rng);
      for (double& v : q.dy.flat()) v = normal(rng);
      const GradientField df = gradient(f);
      const double lhs = dot(df.dx.flat(), q.dx.flat()) + dot(df.dy.flat(), q.dy.flat());
      const double rhs = -dot(f.flat(), divergence(q).flat());
      const double scale = std::sqrt((squared_norm(df.dx.flat()) + squared_norm(df.dy.flat())) *
                                     (squared_norm(q.dx.flat()) + squared_norm(q.dy.flat())));
      duality = std::max(duality, std::abs(lhs - rhs) / scale);
    }
    o.detail << " duality=" << duality;
    o.check(duality < 1e-12, "gradient/divergence duality");

    // TV dual feasibility and projection consistency
    const Scale small{32, 40, 30};
    const Projector op = make_projector(small);
    const ImageGrid truth = make_phantom(small.N, PhantomSpec::standard());
    const Sinogram g = add_noise(op.forward(truth), 0.05, derive_seed(1, SeedStream::noise)).first;
    auto cfg = method(Regularizer::tv, 0.015, small, 60, true);
    double dual_excess = -1.0, min_value = 0.0;
    chambolle_pock(g, op, cfg, truth, std::nullopt, [&](const IterationView& v) {
      const auto& q = v.dual.q_grad;
      for (std::size_t i = 0; i < q.dx.size(); ++i)
        dual_excess = std::max(dual_excess, std::hypot(q.dx.flat()[i], q.dy.flat()[i]) - cfg.alpha);
      for (double x : v.f.flat()) min_value = std::min(min_value, x);
    });
    o.detail << " max(|q|-alpha)=" << dual_excess << " min(f_k)=" << min_value;
    o.check(dual_excess <= 1e-12, "TV dual feasibility");
    o.check(min_value >= 0.0, "projection consistency");

    // rotation equivariance: smooth image for general shifts, quarter turn for the phantom
    {
      const int n = 65, P = 40;
      const auto geom = ScanGeometry::for_grid(n, P, 20, WeightSpec::exponential(0.5));
      auto blob = [](double x, double y) {
        const double r2 = x * x + y * y;
        const double taper = r2 < 0.64 ? std::pow(1.0 - r2 / 0.64, 3) : 0.0;
        return taper * std::exp(-((x - 0.2) * (x - 0.2) + (y + 0.1) * (y + 0.1)) / 0.08);
      };
      const Sinogram g0 = forward(ImageGrid::sample(n, blob), geom);
      double worst = 0.0;
      for (int m : {1, 3, 7}) {
        const double c = std::cos(2 * kPi * m / P), s = std::sin(2 * kPi * m / P);
        const Sinogram gr = forward(
            ImageGrid::sample(n, [&](double x, double y) { return blob(c * x + s * y, -s * x + c * y); }), geom);
        Sinogram shifted = geom.make_sinogram();
        for (int k = 0; k < P; ++k)
          for (int l = 0; l <= geom.Q; ++l) shifted((k + m) % P, l) = g0(k, l);
        worst = std::max(worst, rel_l2(gr.flat(), shifted.flat()));
      }
      const int N = 64;
      const auto geom2 = ScanGeometry::for_grid(N + 1, P, 20, WeightSpec::exponential(0.5));
      const ImageGrid f = make_phantom(N, PhantomSpec::standard());
      ImageGrid fr(N + 1);
      for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) fr(N - j, i) = f(i, j);
      const Sinogram a = forward(f, geom2), b = forward(fr, geom2);
      Sinogram shifted = geom2.make_sinogram();
      for (int k = 0; k < P; ++k)
        for (int l = 0; l <= geom2.Q; ++l) shifted((k + P / 4) % P, l) = a(k, l);
      const double quarter = rel_l2(b.flat(), shifted.flat());
      o.detail << " rotation=" << worst << " quarter-turn=" << quarter;
      o.check(worst < 1e-3, "rotation equivariance");
      o.check(quarter < 1e-10, "quarter-turn equivariance");
    }

    // kernel parity
    double parity = 0.0;
    for (int n : {2, 3})
      for (int ell = 0; ell <= 4; ++ell) {
        const AbelKernelContext ctx{n, ell, WeightSpec::exponential(0.5)};
        const double sign = ell % 2 ? -1.0 : 1.0;
        for (double psi : {0.1, 0.7, 1.2})
          for (double frac : {0.2, 0.6, 0.9}) {
            const double s = std::sin(psi), c = std::cos(psi);
            const double rho = s + frac * (1 - s);
            const double w = std::sqrt(rho * rho - s * s);
            double swapped = 0.0;
            for (int sigma : {-1, 1})
              swapped += ctx.weight_n(c - sigma * w) * sign * ctx.gegenbauer(-(s * s + sigma * c * w) / rho);
            parity = std::max(parity, std::abs(kernel_K(ctx, psi, rho) - std::pow(s, n - 2) * swapped));
          }
      }
    o.detail << " parity=" << parity;
    o.check(parity < 1e-13, "kernel parity");

    // deterministic reproducibility across runs and thread counts
    {
      const Projector one = make_projector(small, {true, 1});
      const Projector many = make_projector(small, {true, 4});
      auto c2 = method(Regularizer::tv, 0.015, small, 30, false);
      const auto r1 = chambolle_pock(g, one, c2, truth);
      const auto r2 = chambolle_pock(g, many, c2, truth);
      const auto r3 = chambolle_pock(g, one, c2, truth);
      bool same = r1.image == r2.image && r1.image == r3.image;
      for (std::size_t i = 0; i < r1.log.records.size(); ++i)
        same = same && r1.log.records[i].e2 == r2.log.records[i].e2 &&
               r1.log.records[i].r2 == r2.log.records[i].r2;
      o.detail << " deterministic=" << (same ? "yes" : "no");
      o.check(same, "deterministic reproducibility");
    }
  });

  if (full) {
    run("C5-full", "exact data, full scale (N=256, P=200, Q=150, 700 iterations)", 3600.0,
        [](Outcome& o) { exact_experiment(o, kFull, 0.0); });
    run("C6-full", "noisy data, full scale (delta=5%, 200 iterations, LS at 15)", 3600.0,
        [](Outcome& o) { noisy_experiment(o, kFull, 5, 200); });
  }

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
