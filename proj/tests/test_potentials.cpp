#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "beamsplit/config.hpp"
#include "beamsplit/potentials.hpp"
#include "support.hpp"

using namespace beamsplit;

TEST_CASE("rotation special cases") {
  GuideConfig g;
  g.gamma = 0.0;
  auto r = rotate(0.3e-3, -7e-3, g);
  CHECK(r.x == 0.3e-3);
  CHECK(close_rel(r.z, -3e-3, 1e-15));

  g = GuideConfig{};
  r = rotate(0.0, g.z_c, g);
  CHECK(r.x == 0.0);
  CHECK(r.z == 0.0);

  // Oracle: an Eigen rotation matrix applied to (x, z - z_c).
  const Eigen::Vector2d p = Eigen::Rotation2Dd(-g.gamma).toRotationMatrix() * Eigen::Vector2d(0.0, -10e-3 - g.z_c);
  r = rotate(0.0, -10e-3, g);
  CHECK(close_rel(r.x, p.x(), 1e-14));
  CHECK(close_rel(r.z, p.y(), 1e-14));
  CHECK(close_rel(r.x, -6e-3 * std::sin(0.12), 1e-14));
}

TEST_CASE("rotation is an isometry") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  std::uniform_real_distribution<double> ang(1e-3, 1.57);
  for (int i = 0; i < 20000; ++i) {
    GuideConfig g;
    g.gamma = ang(rng);
    g.z_c = -std::abs(u(rng));
    const double x = u(rng);
    const double z = u(rng);
    const auto r = rotate(x, z, g);
    const double lhs = r.x * r.x + r.z * r.z;
    const double rhs = x * x + (z - g.z_c) * (z - g.z_c);
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * rhs);
  }
}

TEST_CASE("guide potential values") {
  GuideConfig g;
  CHECK(guide_potential_2d(0.0, -1e-3, 0.0, g) == -g.U0);
  CHECK(guide_potential_2d(0.0, -1e-3, g.t0 * 0.999, g) == -g.U0);
  // Far away both guides vanish.
  CHECK(std::abs(guide_potential_2d(5e-3, 0.0, 1.0, g)) < 1e-200);
  // On the oblique axis at the probe height.
  const double x = (g.z_c - (-10e-3)) * std::tan(g.gamma);
  CHECK(std::abs(rotate(x, -10e-3, g).x) < 1e-18);
  const double expect = -g.U0 * std::exp(-2 * x * x / (g.w0 * g.w0)) - g.U1;
  CHECK(close_rel(guide_potential_2d(x, -10e-3, g.t0, g), expect, 1e-14));
  // Switch-on is inclusive at t0.
  CHECK(oblique_on(g.t0, g));
  CHECK_FALSE(oblique_on(std::nextafter(g.t0, 0.0), g));
}

TEST_CASE("potential bounds and time independence before switch-on") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-3e-3, 3e-3);
  std::uniform_real_distribution<double> uz(-12e-3, 1e-3);
  std::uniform_real_distribution<double> ut(0.0, 0.05);
  SimulationConfig cfg;
  const GuideConfig& g = cfg.guide;
  for (int i = 0; i < 20000; ++i) {
    const double v = guide_potential_2d(ux(rng), uz(rng), ut(rng), g);
    REQUIRE(v <= 0.0);
    REQUIRE(v >= -(g.U0 + g.U1));
    const double x = ux(rng);
    const double t1 = ut(rng) * g.t0 / 0.05;
    const double t2 = ut(rng) * g.t0 / 0.05;
    REQUIRE(std::abs(effective_potential_1d(x, t1, 1e-4, 0.01, cfg) -
                     effective_potential_1d(x, t2, -2e-4, -0.02, cfg)) <= 1e-15 * g.U0);
  }
}

TEST_CASE("gradient matches finite differences") {
  GuideConfig g;
  for (double x : {-0.3e-3, 0.1e-3, 0.5e-3}) {
    for (double z : {-3e-3, -6e-3}) {
      const double h = 1e-9;
      const Eigen::Vector2d grad = guide_gradient(x, z, 0.04, g);
      const double dx = (guide_potential_2d(x + h, z, 0.04, g) - guide_potential_2d(x - h, z, 0.04, g)) / (2 * h);
      const double dz = (guide_potential_2d(x, z + h, 0.04, g) - guide_potential_2d(x, z - h, 0.04, g)) / (2 * h);
      CHECK(close_rel(grad.x(), dx, 1e-6));
      CHECK(close_rel(grad.y(), dz, 1e-6));
    }
  }
}

TEST_CASE("free fall and arrival") {
  CHECK(free_fall_height(0.0, 1e-3, 0.2, 9.81) == 1e-3);
  CHECK(close_rel(free_fall_height(28.6e-3, 0.0, 0.0, 9.81), -4.0121e-3, 1e-4));
  const auto tf = arrival_time(-10e-3, 0.0, 0.0, 9.81);
  REQUIRE(tf);
  CHECK(close_rel(*tf, 45.152e-3, 1e-4));
  CHECK(*arrival_time(-10e-3, 0.0, 0.05, 9.81) < *tf);
  CHECK(*arrival_time(-10e-3, 0.0, -0.05, 9.81) > *tf);
  // Thrown upward fast enough it still comes down; a target above the apex is never reached.
  CHECK(arrival_time(-10e-3, 0.0, -1.0, 9.81).has_value());
  CHECK_FALSE(arrival_time(1e-2, 0.0, 0.0, 9.81).has_value());
}

TEST_CASE("effective potential wells") {
  SimulationConfig cfg;
  const GuideConfig& g = cfg.guide;
  auto t_at = [&](double z) { return *arrival_time(z, 0.0, 0.0, cfg.constants.g); };
  auto argmin = [&](double t, double lo, double hi) {
    double best = lo;
    double best_v = 1.0;
    for (int i = 0; i <= 200000; ++i) {
      const double x = lo + (hi - lo) * i / 200000.0;
      const double v = effective_potential_1d(x, t, 0.0, 0.0, cfg);
      if (v < best_v) {
        best_v = v;
        best = x;
      }
    }
    return best;
  };
  // At the crossing height both wells sit at x = 0.
  CHECK(std::abs(argmin(t_at(g.z_c), -1e-3, 1e-3)) < 2e-8);
  // At z = -8 mm the oblique minimum is at (z_c - z) tan(gamma); V0 pulls it slightly inward.
  const double centre = oblique_center(-8e-3, g);
  CHECK(close_rel(centre, 4e-3 * std::tan(0.12), 1e-14));
  CHECK(close_rel(centre, 0.483e-3, 2e-3));
  CHECK(close_rel(argmin(t_at(-8e-3), 0.35e-3, 0.7e-3), centre, 0.01));
  // At the probe the wells are resolved and the minimum sits at the centre within a grid step.
  const double probe_centre = oblique_center(g.z_p, g);
  CHECK(std::abs(argmin(t_at(g.z_p), 0.5e-3, 0.9e-3) - probe_centre) < 3e-3 / (1 << 18));
}
