#include "beamsplit/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "beamsplit/quadrature.hpp"

namespace beamsplit {

ThermalEnsemble ThermalEnsemble::from(const SimulationConfig& cfg) {
  const double kT = cfg.constants.k_B * cfg.cloud.T0;
  return {cfg.cloud.sigma0, std::sqrt(kT / cfg.constants.mass), kT};
}

namespace {

// The alternating terms peak near n = a at roughly e^a / sqrt(a), so the working
// precision has to grow with a.
template <typename Real>
SeriesValue trapping_series(double a, double s, int max_terms) {
  using std::abs, std::sqrt;
  const Real ra = a;
  const Real rs2 = Real(s) * Real(s);
  const Real prefactor = 2 * sqrt(ra / std::numbers::pi_v<long double>);
  Real power = 1;  // (-a)^n / n!
  Real sum = 0;
  Real largest = 0;
  const Real epsilon = std::numeric_limits<Real>::epsilon();
  SeriesValue out;
  for (int n = 0; n < max_terms; ++n) {
    const Real beta = prefactor / sqrt(1 + (4 * n + 2) * rs2);
    const Real term = power * beta / (2 * n + 1);
    sum += term;
    largest = std::max(largest, Real(abs(term)));
    out.terms = n + 1;
    out.tail = static_cast<double>(abs(term));
    // Terms shrink monotonically once n exceeds a.
    if (n > a && abs(term) < 1e-10) {
      out.value = static_cast<double>(sum);
      out.roundoff = static_cast<double>(largest * epsilon);
      return out;
    }
    power *= -ra / (n + 1);
  }
  out.value = static_cast<double>(sum);
  out.roundoff = static_cast<double>(largest * epsilon);
  throw SeriesError(out, "trapping series not converged to 1e-10");
}

}  // namespace

SeriesValue trapping_probability(double a, double s, int max_terms) {
  if (!(a > 0) || !(s > 0)) throw Error("trapping probability needs positive ratios");
  if (max_terms < 1) throw Error("trapping probability needs at least one term");
  if (a <= 5) return trapping_series<long double>(a, s, max_terms);
  return trapping_series<boost::multiprecision::cpp_bin_float_50>(a, s, max_terms);
}

SeriesValue trapping_probability(const SimulationConfig& cfg, int max_terms) {
  return trapping_probability(cfg.guide.U0 / (cfg.constants.k_B * cfg.cloud.T0),
                              cfg.cloud.sigma0 / cfg.guide.w0, max_terms);
}

double trapping_probability_2d(double a, double s, int max_terms) {
  const double p = trapping_probability(a, s, max_terms).value;
  return p * p;
}

double level_population_scaled(double e, double rho, double a, double s) {
  if (!(e > -1.0 && e < 0.0)) throw Error("level energy must lie in (-U0, 0)");
  if (!(rho > 0)) throw Error("density of states must be positive");
  // x = l sin(theta); kinetic energy E/U0 = -e expm1(2 l^2 cos^2 theta), so the
  // 1/sqrt(E) turning-point singularity cancels against dx = l cos(theta) dtheta.
  const double l = std::sqrt(0.5 * std::log(-1.0 / e));
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * s);
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    const double x = l * std::sin(theta);
    const double kin = -e * std::expm1(2.0 * l * l * c * c);
    const double jac = kin > 0.0 ? l * c / std::sqrt(kin) : 1.0 / std::sqrt(-2.0 * e);
    return norm * std::exp(-0.5 * x * x / (s * s)) * std::exp(-a * kin) * jac;
  };
  double previous = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  for (int order = 64; order <= 8192; order *= 2) {
    value = integrate_gauss_legendre(integrand, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi,
                                     gauss_legendre(order));
    if (std::abs(value - previous) <= 1e-10 * std::abs(value)) break;
    previous = value;
    if (order == 8192) throw Error("level population quadrature did not converge");
  }
  return std::sqrt(a / std::numbers::pi) * value / rho;
}

double level_population(double eps, double rho, const SimulationConfig& cfg) {
  const double U0 = cfg.guide.U0;
  return level_population_scaled(eps / U0, rho * U0, U0 / (cfg.constants.k_B * cfg.cloud.T0),
                                 cfg.cloud.sigma0 / cfg.guide.w0);
}

QuadratureSet initial_condition_quadrature(const ThermalEnsemble& ensemble, int order) {
  const QuadratureRule rule = gauss_hermite_normal(order);
  QuadratureSet set;
  set.order = order;
  for (int i = 0; i < order; ++i) {
    for (int j = 0; j < order; ++j) {
      set.nodes.push_back({ensemble.sigma0 * rule.nodes[i], ensemble.velocity_width * rule.nodes[j],
                           rule.weights[i] * rule.weights[j]});
    }
  }
  return set;
}

Ladder make_ladder(int level_count, int stride) {
  if (level_count < 1) throw Error("ladder needs at least one level");
  if (stride < 1) throw Error("ladder stride must be positive");
  Ladder ladder;
  for (int v = 0; v < level_count; v += stride) ladder.levels.push_back(v);
  if (ladder.levels.back() != level_count - 1) ladder.levels.push_back(level_count - 1);
  ladder.weights.assign(ladder.levels.size(), 0.0);
  // Sum_{v=a}^{b-1} f(v) ~ d (f_a + f_b) / 2 + (f_a - f_b) / 2 with d = b - a,
  // plus the top level itself.
  for (std::size_t i = 0; i + 1 < ladder.levels.size(); ++i) {
    const double d = ladder.levels[i + 1] - ladder.levels[i];
    ladder.weights[i] += 0.5 * d + 0.5;
    ladder.weights[i + 1] += 0.5 * d - 0.5;
  }
  ladder.weights.back() += 1.0;
  return ladder;
}

std::vector<LevelPopulation> level_populations(const EigenSpectrum& spectrum, const Ladder& ladder,
                                               const SimulationConfig& cfg) {
  std::vector<LevelPopulation> out;
  out.reserve(ladder.levels.size());
  for (int v : ladder.levels) {
    const double e = spectrum.energy(v);
    const double rho = spectrum.density(e);
    out.push_back({v, e, rho, level_population(e, rho, cfg)});
  }
  return out;
}

}  // namespace beamsplit
