#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "beamsplit/eigensolver.hpp"
#include "support.hpp"

using namespace beamsplit;

namespace {

GaussianWell small_well() {
  SimulationConfig cfg;
  cfg.guide.U0 = units::from_microkelvin(0.1);
  cfg.guide.w0 = 10e-6;
  return GaussianWell::from(cfg);
}

GaussianWell reference_well() { return GaussianWell::from(SimulationConfig{}); }

// Colbert-Miller sinc kinetic matrix on n points of spacing dx.
Eigen::MatrixXd sinc_kinetic(const GaussianWell& well, Eigen::Index n, double dx) {
  const double scale = well.hbar * well.hbar / (2.0 * well.mass * dx * dx);
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = static_cast<double>(i - j);
      t(i, j) = i == j ? scale * std::numbers::pi * std::numbers::pi / 3.0
                       : scale * 2.0 * ((i - j) % 2 ? -1.0 : 1.0) / (d * d);
    }
  }
  return t;
}

// Dense diagonalisation of the sinc-DVR Hamiltonian on [-L, L].
Eigen::VectorXd dvr_energies(const GaussianWell& well, double half_width, Eigen::Index n) {
  const double dx = 2.0 * half_width / static_cast<double>(n - 1);
  Eigen::MatrixXd h = sinc_kinetic(well, n, dx);
  for (Eigen::Index i = 0; i < n; ++i) h(i, i) += well.potential(-half_width + static_cast<double>(i) * dx);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace

TEST_CASE("numerov energies agree with a dense sinc-DVR diagonalisation") {
  const GaussianWell well = small_well();
  const int count = count_bound_states(well);
  REQUIRE(count == 34);
  const Eigen::VectorXd dvr = dvr_energies(well, 8.0 * well.waist, 1201);
  // Levels near threshold have tails reaching the box; stop a few short of the top.
  for (int i = 0; i < 20; ++i) {
    const int v = static_cast<int>(std::lround(i * 29.0 / 19.0));
    const double e = solve_energy(well, v);
    INFO("v=" << v << " numerov=" << e / well.depth << " dvr=" << dvr[v] / well.depth);
    CHECK(close_rel(e, dvr[v], 1e-8));
  }
}

TEST_CASE("bound-state counts") {
  const GaussianWell small = small_well();
  CHECK(count_bound_states_numerov(small) == count_bound_states(small));
  GaussianWell shallow = small;
  shallow.depth *= 1e-4;
  CHECK(count_bound_states(shallow) <= 1);
  CHECK(count_bound_states_numerov(shallow) <= 1);
  // WKB count is the phase-space estimate action(0) / (2 pi hbar) rounded.
  CHECK(close_abs(count_bound_states(small), small.action_scale() / std::sqrt(std::numbers::pi), 0.5));
}

TEST_CASE("ground state sits half a quantum above the bottom") {
  for (const GaussianWell& well : {small_well(), reference_well()}) {
    const double hw = well.hbar * well.omega();
    const double lambda = well.action_scale();
    // first-order quartic correction is -3/4 U0 / lambda^2
    const double expected = -well.depth + 0.5 * hw - 0.75 * well.depth / (lambda * lambda);
    const double e0 = solve_energy(well, 0);
    CHECK(close_abs(e0, expected, 2e-3 * hw));
    CHECK(close_abs(e0, -well.depth + 0.5 * hw, 0.02 * hw));
  }
}

TEST_CASE("eigenfunctions are orthonormal with definite parity and v nodes") {
  const GaussianWell well = small_well();
  const Grid1D grid(-6.0 * well.waist, 6.0 * well.waist, 1024);
  std::vector<EigenFunction> levels;
  for (int v : {0, 1, 2, 5, 10, 17, 24}) levels.push_back(solve_level(well, v, grid));
  const auto mid = grid.ssize() / 2;
  REQUIRE(close_abs(grid.x(mid), 0.0, 1e-18));
  for (std::size_t a = 0; a < levels.size(); ++a) {
    const EigenFunction& f = levels[a];
    CHECK(f.nodes == f.v);
    const double sign = f.v % 2 ? -1.0 : 1.0;
    double parity_error = 0;
    for (Eigen::Index j = 1; j < mid; ++j) {
      parity_error = std::max(parity_error, std::abs(f.samples[mid + j] - sign * f.samples[mid - j]));
    }
    CHECK(parity_error * std::sqrt(grid.dx()) < 1e-8);
    for (std::size_t b = 0; b <= a; ++b) {
      const double overlap = levels[a].samples.dot(levels[b].samples) * grid.dx();
      CHECK(close_abs(overlap, a == b ? 1.0 : 0.0, 1e-8));
    }
  }
}

TEST_CASE("eigenfunction residual under the grid hamiltonian") {
  const GaussianWell well = small_well();
  const Grid1D grid(-6.0 * well.waist, 6.0 * well.waist, 1024);
  Eigen::MatrixXd h = sinc_kinetic(well, grid.ssize(), grid.dx());
  for (Eigen::Index i = 0; i < grid.ssize(); ++i) h(i, i) += well.potential(grid.x(i));
  for (int v : {0, 7, 20, 28}) {
    const EigenFunction f = solve_level(well, v, grid);
    const double residual = (h * f.samples - f.energy * f.samples).norm() / f.samples.norm();
    INFO("v=" << v << " residual/U0=" << residual / well.depth);
    CHECK(residual < 1e-6 * well.depth);
  }
}

TEST_CASE("wkb tracks numerov above the lowest levels") {
  const GaussianWell well = reference_well();
  for (int v : {150, 1000, 4000, 8000, 11000}) {
    const double numerov = solve_energy(well, v);
    const double wkb = wkb_energy(well, v);
    INFO("v=" << v);
    CHECK(close_rel(wkb, numerov, 1e-3));
  }
}

TEST_CASE("density of states matches finite differences of the spectrum") {
  const GaussianWell well = reference_well();
  int v = 0;
  while (wkb_energy(well, v) < -0.5 * well.depth) v += 50;
  const double lower = solve_energy(well, v - 1);
  const double upper = solve_energy(well, v + 1);
  const double centre = solve_energy(well, v);
  CHECK(close_rel(density_of_states(well, centre), 2.0 / (upper - lower), 0.02));

  // bottom of the well: one level per quantum
  const double bottom = density_of_states(well, -well.depth * (1 - 1e-6));
  CHECK(close_rel(bottom * well.hbar * well.omega(), 1.0, 1e-3));

  // the period grows without bound towards threshold
  double previous = 0;
  for (double e : {-0.5, -0.1, -1e-2, -1e-3, -1e-5}) {
    const double rho = density_of_states(well, e * well.depth);
    CHECK(rho > previous);
    previous = rho;
  }
  CHECK_THROWS_AS(density_of_states(well, 0.0), EigenError);
  CHECK_THROWS_AS(density_of_states(well, -1.5 * well.depth), EigenError);
}

TEST_CASE("wkb action quantisation") {
  const GaussianWell well = small_well();
  for (int v : {0, 3, 20, 33}) {
    const double action = wkb_action(well, wkb_energy(well, v));
    CHECK(close_rel(action, 2.0 * std::numbers::pi * well.hbar * (v + 0.5), 1e-10));
  }
}

TEST_CASE("levels outside the spectrum or clipped by the grid are rejected") {
  const GaussianWell well = small_well();
  const int count = count_bound_states(well);
  const Grid1D wide(-6.0 * well.waist, 6.0 * well.waist, 1024);
  CHECK_THROWS_AS(solve_level(well, count, wide), EigenError);
  CHECK_THROWS_AS(solve_level(well, -1, wide), EigenError);
  CHECK_THROWS_AS(wkb_energy(well, count), EigenError);
  const Grid1D narrow(-1.2 * well.waist, 1.2 * well.waist, 256);
  CHECK_NOTHROW(solve_level(well, 0, narrow));
  CHECK_THROWS_AS(solve_level(well, count - 2, narrow), EigenError);
  const Grid1D off_centre(0.5 * well.waist, 3.0 * well.waist, 256);
  CHECK_THROWS_AS(solve_level(well, 0, off_centre), EigenError);
}

TEST_CASE("node counting ignores round-off crossings") {
  Eigen::VectorXd f(6);
  f << 1.0, -1e-15, 1e-15, 0.5, -0.5, 0.2;
  CHECK(count_nodes(f) == 2);
  CHECK(count_nodes(f, 0.0) == 4);
}

TEST_CASE("spectrum caches numerov energies") {
  const EigenSpectrum spectrum(small_well());
  CHECK(spectrum.count() == 34);
  const double e = spectrum.energy(12);
  CHECK(e == spectrum.energy(12));
  CHECK(close_rel(e, spectrum.wkb(12), 1e-2));
}

TEST_CASE("levels next to threshold solve without a grid") {
  const GaussianWell well = small_well();
  const double top = solve_energy(well, 33);
  CHECK(top < 0);
  CHECK(top > solve_energy(well, 32));
}
