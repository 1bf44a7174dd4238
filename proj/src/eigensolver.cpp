#include "beamsplit/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "beamsplit/quadrature.hpp"

namespace beamsplit {

// Internally lengths are in units of the waist and energies in units of the depth:
// k(x)^2 = lambda^2 (eps + exp(-2 x^2)) with lambda = action_scale().

double GaussianWell::action_scale() const { return std::sqrt(2.0 * mass * depth) * waist / hbar; }
double GaussianWell::max_wavenumber() const { return std::sqrt(2.0 * mass * depth) / hbar; }
double GaussianWell::potential(double x) const {
  return -depth * std::exp(-2.0 * x * x / (waist * waist));
}
double GaussianWell::turning_point(double eps) const {
  return waist * std::sqrt(0.5 * std::log(-depth / eps));
}
double GaussianWell::omega() const { return 2.0 / waist * std::sqrt(depth / mass); }

namespace {

double scaled_turning_point(double e) { return std::sqrt(0.5 * std::log(-1.0 / e)); }

// Integral over the classically allowed region of g(kinetic) using x = l sin(theta).
// The kinetic term eps + exp(-2 x^2) is evaluated as -eps * expm1(2 l^2 cos^2 theta),
// which is free of cancellation near the turning points.
template <typename G>
double orbit_integral(double e, G&& g) {
  const double l = scaled_turning_point(e);
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    const double kin = -e * std::expm1(2.0 * l * l * c * c);
    return g(kin, l * c);
  };
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int order = 64; order <= 8192; order *= 2) {
    const double value =
        integrate_gauss_legendre(integrand, -0.5 * std::numbers::pi, 0.5 * std::numbers::pi,
                                 gauss_legendre(order));
    if (std::abs(value - previous) <= 1e-13 * std::abs(value)) return value;
    previous = value;
  }
  return previous;
}

// Integral of sqrt(eps + exp(-2x^2)) over the allowed region.
double scaled_action(double e) {
  if (e >= 0.0) return std::sqrt(std::numbers::pi);
  if (e <= -1.0) return 0.0;
  return orbit_integral(e, [](double kin, double jac) { return std::sqrt(kin) * jac; });
}

// Integral of 1/sqrt(eps + exp(-2x^2)); jac / sqrt(kin) tends to 1/sqrt(-2 eps) at the ends.
double scaled_period(double e) {
  return orbit_integral(e, [e](double kin, double jac) {
    return kin > 0.0 ? jac / std::sqrt(kin) : 1.0 / std::sqrt(-2.0 * e);
  });
}

}  // namespace

double wkb_action(const GaussianWell& well, double eps) {
  const double e = eps / well.depth;
  return 2.0 * std::sqrt(2.0 * well.mass * well.depth) * well.waist * scaled_action(e);
}

int count_bound_states(const GaussianWell& well) {
  const double levels = well.action_scale() / std::sqrt(std::numbers::pi);
  return static_cast<int>(std::floor(levels + 0.5));
}

double density_of_states(const GaussianWell& well, double eps) {
  const double e = eps / well.depth;
  if (!(e > -1.0 && e < 0.0)) throw EigenError("density of states requested outside (-U0, 0)");
  return well.action_scale() * scaled_period(e) / (2.0 * std::numbers::pi * well.depth);
}

double wkb_energy(const GaussianWell& well, int v) {
  const int n = count_bound_states(well);
  if (v < 0 || v >= n) throw EigenError("level " + std::to_string(v) + " is not bound");
  const double lambda = well.action_scale();
  const double target = std::numbers::pi * (v + 0.5) / lambda;  // scaled_action(e) == target
  double lo = -1.0;
  double hi = 0.0;
  // Harmonic start, then safeguarded Newton (d action / d e = period / 2).
  double e = std::clamp(-1.0 + 2.0 * std::sqrt(2.0) * (v + 0.5) / lambda, -1.0 + 1e-300, -1e-300);
  for (int it = 0; it < 200; ++it) {
    const double f = scaled_action(e) - target;
    if (f > 0) hi = e;
    else lo = e;
    double next = e - f / (0.5 * scaled_period(e));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - e) <= 1e-15 * std::abs(e) || hi - lo <= 1e-16 * std::abs(e)) {
      e = next;
      break;
    }
    e = next;
  }
  return e * well.depth;
}

// --- Numerov ----------------------------------------------------------------------

namespace {

// Outward Numerov integration on x_n = n h from the origin with definite parity.
class NumerovShooter {
 public:
  NumerovShooter(double lambda, double h, std::size_t n_points)
      : c_(lambda * lambda * h * h / 12.0), g_(n_points) {
    for (std::size_t n = 0; n < n_points; ++n) {
      const double x = static_cast<double>(n) * h;
      g_[n] = std::exp(-2.0 * x * x);
    }
  }

  std::size_t size() const { return g_.size(); }

  double f(double e, std::size_t n) const { return 1.0 + c_ * (e + g_[n]); }

  /// Zeros of the parity solution on (0, x_{n_end}].
  int count_zeros(double e, int parity, std::size_t n_end) const {
    double prev = parity == 0 ? 1.0 : 0.0;
    double cur = parity == 0 ? prev * (12.0 - 10.0 * f(e, 0)) / (2.0 * f(e, 1)) : 1.0;
    int zeros = (parity == 0 && cur * prev < 0) ? 1 : 0;
    double f_prev = f(e, 0);
    double f_cur = f(e, 1);
    for (std::size_t n = 1; n < n_end; ++n) {
      const double f_next = f(e, n + 1);
      const double next = ((12.0 - 10.0 * f_cur) * cur - f_prev * prev) / f_next;
      if ((next < 0) != (cur < 0) || next == 0.0) ++zeros;
      prev = cur;
      cur = next;
      f_prev = f_cur;
      f_cur = f_next;
      if (std::abs(cur) > 1e200) {
        prev *= 1e-200;
        cur *= 1e-200;
      }
    }
    return zeros;
  }

  /// Bound-state shape on [0, x_{n_end}]: outward to the turning point, inward from n_end.
  std::vector<double> shape(double e, int parity, std::size_t n_match, std::size_t n_end) const {
    std::vector<double> psi(n_end + 1, 0.0);
    psi[0] = parity == 0 ? 1.0 : 0.0;
    psi[1] = parity == 0 ? psi[0] * (12.0 - 10.0 * f(e, 0)) / (2.0 * f(e, 1)) : 1.0;
    for (std::size_t n = 1; n < n_match; ++n) {
      psi[n + 1] = ((12.0 - 10.0 * f(e, n)) * psi[n] - f(e, n - 1) * psi[n - 1]) / f(e, n + 1);
    }
    std::vector<double> in(n_end + 1, 0.0);
    in[n_end] = 0.0;
    in[n_end - 1] = 1e-100;
    for (std::size_t n = n_end - 1; n > n_match; --n) {
      in[n - 1] = ((12.0 - 10.0 * f(e, n)) * in[n] - f(e, n + 1) * in[n + 1]) / f(e, n - 1);
      if (std::abs(in[n - 1]) > 1e200) {
        for (std::size_t j = n - 1; j <= n_end; ++j) in[j] *= 1e-200;
      }
    }
    const double scale = psi[n_match] / in[n_match];
    for (std::size_t n = n_match + 1; n <= n_end; ++n) psi[n] = in[n] * scale;
    return psi;
  }

 private:
  double c_;
  std::vector<double> g_;
};

// Tail e-folds accumulated from the turning point outward, in scaled units.
double tail_efolds(double lambda, double e, double x_from, double x_to) {
  if (e >= 0.0 || x_to <= x_from) return 0.0;
  const int steps = 4000;
  const double dx = (x_to - x_from) / steps;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double x = x_from + (i + 0.5) * dx;
    sum += std::sqrt(std::max(-e - std::exp(-2.0 * x * x), 0.0));
  }
  return lambda * sum * dx;
}

// Scaled extent needed to integrate `target` e-folds past the turning point.
double tail_extent(double lambda, double e, double target, double cap) {
  const double l = scaled_turning_point(e);
  if (!(l < cap)) return cap;
  double x = l;
  double acc = 0.0;
  const double dx = std::max(1e-4, 1e-2 / (lambda * std::sqrt(-e) + 1.0));
  while (acc < target && x < cap) {
    const double g = std::exp(-2.0 * (x + 0.5 * dx) * (x + 0.5 * dx));
    if (g < 1e-12 * -e) {
      // well negligible: plain exponential decay from here
      x += (target - acc) / (lambda * std::sqrt(-e));
      break;
    }
    acc += lambda * std::sqrt(std::max(-e - g, 0.0)) * dx;
    x += dx;
  }
  return std::min(x, cap);
}

// Half width (in waists) of the integration box when no grid is given.
constexpr double kMaxExtent = 64.0;

struct LevelSolution {
  double e;            // scaled energy
  std::vector<double> shape;  // on x_n = n h (scaled), n = 0..n_end
  double h;            // scaled step
};

LevelSolution shoot_level(const GaussianWell& well, int v, const NumerovOptions& opts,
                          double half_width_scaled, double h_scaled, bool want_shape) {
  const int total = count_bound_states(well);
  if (v < 0 || v >= total) {
    throw EigenError("level " + std::to_string(v) + " out of range [0, " + std::to_string(total) + ")");
  }
  const double lambda = well.action_scale();
  const int parity = v % 2;
  const int k = v / 2;

  const double e_guess = wkb_energy(well, v) / well.depth;
  const double spacing = 1.0 / (density_of_states(well, e_guess * well.depth) * well.depth);
  double lo = std::max(e_guess - 3.0 * spacing, -1.0);
  double hi = std::min(e_guess + 3.0 * spacing, -std::numeric_limits<double>::min());

  const double cap = half_width_scaled > 0 ? half_width_scaled : kMaxExtent;
  const double x_end = tail_extent(lambda, hi, opts.decay_target, cap);
  const auto n_end = static_cast<std::size_t>(std::floor(x_end / h_scaled));
  if (n_end < 8) throw EigenError("grid too small for level " + std::to_string(v));
  NumerovShooter shooter(lambda, h_scaled, n_end + 2);

  auto count = [&](double e) { return shooter.count_zeros(e, parity, n_end); };
  double step = spacing;
  while (count(lo) > k) {
    if (lo <= -1.0) throw EigenError("cannot bracket level " + std::to_string(v));
    lo = std::max(lo - step, -1.0);
    step *= 2;
  }
  step = spacing;
  while (count(hi) < k + 1) {
    if (hi >= -std::numeric_limits<double>::min()) {
      throw EigenError("level " + std::to_string(v) + " not bound on the available grid");
    }
    hi = std::min(hi + step, -std::numeric_limits<double>::min());
    step *= 2;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count(mid) <= k) lo = mid;
    else hi = mid;
  }
  LevelSolution sol{0.5 * (lo + hi), {}, h_scaled};

  const double l = scaled_turning_point(sol.e);
  if (tail_efolds(lambda, sol.e, l, x_end) < opts.clip_threshold) {
    throw EigenError("tail of level " + std::to_string(v) + " is clipped by the grid edge");
  }
  if (want_shape) {
    auto n_match = static_cast<std::size_t>(std::floor(l / h_scaled));
    n_match = std::clamp<std::size_t>(n_match, 2, n_end - 2);
    sol.shape = shooter.shape(sol.e, parity, n_match, n_end);
  }
  return sol;
}

// Six-point Lagrange interpolation of the parity-extended shape at scaled position x.
double interpolate_shape(const std::vector<double>& shape, double h, int parity, double x) {
  const double sign = (parity == 1 && x < 0) ? -1.0 : 1.0;
  const double u = std::abs(x) / h;
  const auto n_end = static_cast<long>(shape.size()) - 1;
  auto at = [&](long n) -> double {
    const double reflect = (n < 0 && parity == 1) ? -1.0 : 1.0;
    n = std::abs(n);
    return n > n_end ? 0.0 : reflect * shape[static_cast<std::size_t>(n)];
  };
  const long base = static_cast<long>(std::floor(u)) - 2;
  double value = 0.0;
  for (long i = 0; i < 6; ++i) {
    double w = 1.0;
    for (long j = 0; j < 6; ++j) {
      if (j != i) w *= (u - static_cast<double>(base + j)) / static_cast<double>(i - j);
    }
    value += w * at(base + i);
  }
  return sign * value;
}

}  // namespace

int count_bound_states_numerov(const GaussianWell& well, const NumerovOptions& opts) {
  const double lambda = well.action_scale();
  const double h = opts.kh / lambda;
  const double x_end = std::sqrt(0.5 * std::log(1e30));  // V0 below 1e-30 U0 beyond
  const auto n_end = static_cast<std::size_t>(std::ceil(x_end / h));
  NumerovShooter shooter(lambda, h, n_end + 2);
  int total = 0;
  for (int parity = 0; parity < 2; ++parity) {
    // Zero-energy solution: count zeros, then the linear continuation may add one more.
    total += shooter.count_zeros(0.0, parity, n_end);
    std::vector<double> tail = shooter.shape(0.0, parity, n_end, n_end + 1);
    const double psi = tail[n_end];
    const double slope = tail[n_end] - tail[n_end - 1];
    if (psi * slope < 0) ++total;
  }
  return total;
}

double solve_energy(const GaussianWell& well, int v, const NumerovOptions& opts, double half_width,
                    double h) {
  const double lambda = well.action_scale();
  const double h_scaled = h > 0 ? h / well.waist : opts.kh / lambda;
  return shoot_level(well, v, opts, half_width / well.waist, h_scaled, false).e * well.depth;
}

EigenFunction solve_level(const GaussianWell& well, int v, const Grid1D& grid,
                          const NumerovOptions& opts) {
  const double h_target = opts.kh / well.max_wavenumber();
  const double dx = grid.dx();
  // Refine the propagation step by an integer factor so that every grid point is a
  // Numerov node (x_min / h integral); otherwise fall back to interpolation.
  const long r0 = std::max<long>(1, static_cast<long>(std::ceil(dx / h_target)));
  long refine = 0;
  for (long r = r0; r <= 4 * r0 + 8; ++r) {
    const double q = grid.x_min() * static_cast<double>(r) / dx;
    if (std::abs(q - std::round(q)) < 1e-6) {
      refine = r;
      break;
    }
  }
  const double h = refine > 0 ? dx / static_cast<double>(refine) : h_target;
  const double half_width = std::min(-grid.x_min(), grid.x_max());
  if (!(half_width > 0)) throw EigenError("grid must contain x = 0");

  const LevelSolution sol = shoot_level(well, v, opts, half_width / well.waist, h / well.waist, true);
  const int parity = v % 2;

  EigenFunction ef;
  ef.v = v;
  ef.energy = sol.e * well.depth;
  ef.samples.resize(grid.ssize());
  const auto n_end = static_cast<long>(sol.shape.size()) - 1;
  for (Eigen::Index j = 0; j < grid.ssize(); ++j) {
    const double x = grid.x(j);
    if (refine > 0) {
      const long n = std::lround(std::abs(x) / h);
      const double value = n > n_end ? 0.0 : sol.shape[static_cast<std::size_t>(n)];
      ef.samples[j] = (parity == 1 && x < 0) ? -value : value;
    } else {
      ef.samples[j] = interpolate_shape(sol.shape, sol.h, parity, x / well.waist);
    }
  }
  ef.samples /= std::sqrt(ef.samples.squaredNorm() * dx);
  ef.nodes = count_nodes(ef.samples);
  return ef;
}

int count_nodes(const Eigen::VectorXd& f, double floor) {
  const double cut = floor * f.cwiseAbs().maxCoeff();
  int nodes = 0;
  int last_sign = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (std::abs(f[i]) <= cut) continue;
    const int s = f[i] > 0 ? 1 : -1;
    if (last_sign != 0 && s != last_sign) ++nodes;
    last_sign = s;
  }
  return nodes;
}

EigenSpectrum::EigenSpectrum(GaussianWell well, NumerovOptions opts)
    : well_(well), opts_(opts), count_(count_bound_states(well)) {}

double EigenSpectrum::energy(int v) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = energies_.find(v); it != energies_.end()) return it->second;
  }
  const double e = solve_energy(well_, v, opts_);
  std::lock_guard lock(mutex_);
  energies_[v] = e;
  return e;
}

}  // namespace beamsplit
