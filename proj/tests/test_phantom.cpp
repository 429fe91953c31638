#include <gtest/gtest.h>

#include <algorithm>

#include "vline/phantom.hpp"

using namespace vline;

TEST(Phantom, EmptySpecIsZero) {
  const ImageGrid f = make_phantom(32, PhantomSpec{});
  for (double v : f.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Phantom, DiscAreaCount) {
  const int N = 256;
  const ImageGrid f = make_phantom(N, PhantomSpec::disc(0.5));
  int count = 0;
  for (double v : f.flat()) count += v == 1.0;
  const double expect = std::numbers::pi * 0.25 / (4.0 / (N * N));
  EXPECT_NEAR(count, expect, 0.02 * expect);
}

TEST(Phantom, DefaultSpecRangeAndSupport) {
  const int N = 256;
  const PhantomSpec spec = PhantomSpec::standard();
  const ImageGrid f = make_phantom(N, spec);
  double hi = 0.0;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) {
      const double v = f(i, j);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 2.0);
      hi = std::max(hi, v);
      const auto [x, y] = f.node(i, j);
      if (v != 0.0) {
        EXPECT_LT(std::hypot(x, y), 0.95);
      }
    }
  EXPECT_EQ(hi, 2.0);
  for (const auto& e : spec.ellipses) EXPECT_LE(e.extent(), 0.95);
  for (const auto& s : spec.stars) EXPECT_LE(s.extent(), 0.95);
}

TEST(Phantom, RejectsFeaturesOutsideMargin) {
  PhantomSpec spec = PhantomSpec::disc(0.96);
  EXPECT_THROW(make_phantom(16, spec), ValidationError);
  spec = PhantomSpec{};
  spec.stars.push_back({{0.85, 0.0}, 0.05, 0.14, 5, 0.0, 1.0});
  EXPECT_THROW(make_phantom(16, spec), ValidationError);
  spec = PhantomSpec::disc(0.3, -1.0);
  EXPECT_THROW(make_phantom(16, spec), ValidationError);
  EXPECT_THROW(make_phantom(1, PhantomSpec{}), ValidationError);
}

TEST(Phantom, StarGeometry) {
  const Star s{{0.0, 0.0}, 0.05, 0.14, 5, 0.0, 1.0};
  EXPECT_TRUE(s.contains(0.0, 0.0));
  EXPECT_TRUE(s.contains(0.13, 0.0));    // along the first tip
  EXPECT_FALSE(s.contains(-0.08, 0.0));  // beyond the inner vertex between two tips
  EXPECT_TRUE(s.contains(-0.045, 0.0));
  EXPECT_FALSE(s.contains(0.15, 0.0));
  EXPECT_EQ(s.vertices().size(), 10u);
}

// Pixels are node-centred, so a coarse pixel covers one full fine pixel plus
// halves of its neighbours: the area average is the 1-2-1 full weighting.
TEST(Phantom, ResolutionConsistency) {
  const PhantomSpec spec = PhantomSpec::standard();
  const ImageGrid fine = make_phantom(256, spec);
  const ImageGrid coarse = make_phantom(128, spec);
  const double scale = *std::max_element(fine.flat().begin(), fine.flat().end());
  EXPECT_EQ(scale, 2.0);
  int away = 0;
  for (int i = 1; i < 128; ++i)
    for (int j = 1; j < 128; ++j) {
      double avg = 0.0, lo = fine(2 * i, 2 * j), hi = lo;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
          const double v = fine(2 * i + a, 2 * j + b);
          avg += (2 - std::abs(a)) * (2 - std::abs(b)) * v / 16.0;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      if (lo == hi) {
        EXPECT_EQ(avg, coarse(i, j));
        ++away;
      } else {
        EXPECT_LE(std::abs(avg - coarse(i, j)), 0.5 * scale) << i << ',' << j;
      }
    }
  EXPECT_GT(away, 127 * 127 * 9 / 10);
}

TEST(Phantom, RotatedSpecMovesFeatures) {
  const PhantomSpec spec = PhantomSpec::standard();
  const PhantomSpec rot = spec.rotated(std::numbers::pi / 2);
  for (double x : {-0.4, 0.05, 0.31})
    for (double y : {-0.33, 0.1, 0.27}) EXPECT_EQ(rot.value(-y, x), spec.value(x, y));
}

TEST(Noise, ZeroDeltaIsIdentity) {
  Sinogram g(6, 4);
  for (std::size_t i = 0; i < g.flat().size(); ++i) g.flat()[i] = 0.1 * i;
  const auto [out, achieved] = add_noise(g, 0.0, 1);
  EXPECT_EQ(out.values(), g.values());
  EXPECT_EQ(achieved, 0.0);
}

TEST(Noise, CalibratedAndSeeded) {
  Sinogram g(20, 11);
  for (std::size_t i = 0; i < g.flat().size(); ++i) g.flat()[i] = std::sin(0.3 * i) + 1.0;
  const auto [a, da] = add_noise(g, 0.05, 7);
  const auto [b, db] = add_noise(g, 0.05, 7);
  const auto [c, dc] = add_noise(g, 0.05, 8);
  EXPECT_NEAR(da, 0.05, 1e-12);
  EXPECT_NEAR(dc, 0.05, 1e-12);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_NE(a.values(), c.values());
  EXPECT_TRUE(a.same_shape(g));
  EXPECT_LE(norm(a.flat()), norm(g.flat()) * 1.05 * (1 + 1e-14));
}

TEST(Noise, Errors) {
  EXPECT_THROW(add_noise(Sinogram(4, 3), 0.05, 1), ValidationError);
  Sinogram g(4, 3, 1.0);
  EXPECT_THROW(add_noise(g, -0.1, 1), ValidationError);
}
