#include "beamsplit/classical.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "beamsplit/potentials.hpp"

namespace beamsplit {
namespace {

using State = Eigen::Vector4d;  // x, z, vx, vz

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Hairer's continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

class Rhs {
 public:
  Rhs(const SimulationConfig& cfg, bool oblique) : cfg_(cfg), oblique_(oblique) {}

  State operator()(const State& y) const {
    // Evaluate the Heaviside switch per segment, not per stage.
    const double t = oblique_ ? cfg_.guide.t0 : cfg_.guide.t0 - 1.0;
    const Eigen::Vector2d grad = guide_gradient(y[0], y[1], t, cfg_.guide);
    const double m = cfg_.constants.mass;
    return State(y[2], y[3], -grad.x() / m, -grad.y() / m - cfg_.constants.g);
  }

 private:
  const SimulationConfig& cfg_;
  bool oblique_;
};

ClassicalState to_sample(double t, const State& y) { return {t, y[0], y[1], y[2], y[3]}; }

}  // namespace

Trajectory integrate_trajectory(const ClassicalState& init, std::span<const double> output_times,
                                double rel_tol, double abs_tol, const SimulationConfig& cfg) {
  if (output_times.empty() || output_times.front() != init.t) {
    throw IntegrationError(init.t, "first output time must equal the initial time");
  }
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw IntegrationError(init.t, "tolerances must be positive");
  for (std::size_t i = 1; i < output_times.size(); ++i) {
    if (!(output_times[i] > output_times[i - 1])) {
      throw IntegrationError(output_times[i], "output times must be strictly increasing");
    }
  }

  Trajectory traj;
  traj.stats.rel_tol = rel_tol;
  traj.stats.abs_tol = abs_tol;
  traj.samples.push_back(init);

  const double t_end = output_times.back();
  std::vector<double> boundaries{init.t};
  if (cfg.guide.t0 > init.t && cfg.guide.t0 < t_end) boundaries.push_back(cfg.guide.t0);
  boundaries.push_back(t_end);

  State y(init.x, init.z, init.vx, init.vz);
  double t = init.t;
  std::size_t next_out = 1;
  double h = std::min(1e-4, 0.01 * (t_end - init.t));

  for (std::size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
    const double t_seg = boundaries[seg + 1];
    const Rhs f(cfg, oblique_on(t, cfg.guide));
    State k1 = f(y);
    while (t < t_seg) {
      bool last = false;
      const double h_proposed = h;
      if (t + h >= t_seg) {
        h = t_seg - t;
        last = true;
      }
      if (h < 1e-14 * std::max(1.0, std::abs(t))) throw IntegrationError(t, "step size underflow");

      const State k2 = f(y + h * a21 * k1);
      const State k3 = f(y + h * (a31 * k1 + a32 * k2));
      const State k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const State k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const State k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const State y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const State k7 = f(y_new);
      const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      const State scale =
          (abs_tol + rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
      const double err_norm = std::sqrt((err.array() / scale.array()).square().mean());
      if (!std::isfinite(err_norm) || !y_new.allFinite()) {
        throw IntegrationError(t, "non-finite state");
      }

      if (err_norm <= 1.0) {
        const double t_new = last ? t_seg : t + h;
        // Dense output for every requested time inside (t, t_new].
        while (next_out < output_times.size() && output_times[next_out] <= t_new) {
          const double theta = (output_times[next_out] - t) / h;
          const State r2 = y_new - y;
          const State r3 = h * k1 - r2;
          const State r4 = r2 - h * k7 - r3;
          const State r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
          const State yi =
              y + theta * (r2 + (1 - theta) * (r3 + theta * (r4 + (1 - theta) * r5)));
          traj.samples.push_back(to_sample(output_times[next_out], yi));
          ++next_out;
        }
        y = y_new;
        t = t_new;
        k1 = k7;
        ++traj.stats.accepted_steps;
        const double factor = err_norm == 0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h = (last ? std::max(h, h_proposed) : h) * factor;
      } else {
        ++traj.stats.rejected_steps;
        h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 0.9);
      }
    }
  }
  return traj;
}

Trajectory integrate_trajectory(const ClassicalState& init, double t_end, int samples,
                                double rel_tol, double abs_tol, const SimulationConfig& cfg) {
  if (!(t_end > init.t)) throw IntegrationError(init.t, "t_end must exceed the initial time");
  if (samples < 2) samples = 2;
  std::vector<double> times(samples);
  for (int i = 0; i < samples; ++i) {
    times[i] = init.t + (t_end - init.t) * i / (samples - 1);
  }
  times.back() = t_end;
  return integrate_trajectory(init, times, rel_tol, abs_tol, cfg);
}

std::vector<std::pair<double, double>> free_fall_deviation(const Trajectory& traj, double g) {
  std::vector<std::pair<double, double>> out;
  if (traj.samples.empty()) return out;
  const ClassicalState& s0 = traj.samples.front();
  for (const auto& s : traj.samples) {
    const double dt = s.t - s0.t;
    const double z_ff = free_fall_height(dt, s0.z, -s0.vz, g);
    if (z_ff == 0.0) continue;
    out.emplace_back(s.t, std::abs(s.z - z_ff) / std::abs(z_ff));
  }
  return out;
}

double transverse_kinetic_energy(const ClassicalState& s, const SimulationConfig& cfg) {
  const double v = s.vx * std::cos(cfg.guide.gamma) + s.vz * std::sin(cfg.guide.gamma);
  return 0.5 * cfg.constants.mass * v * v;
}

double total_energy(const ClassicalState& s, const SimulationConfig& cfg) {
  const double m = cfg.constants.mass;
  return 0.5 * m * (s.vx * s.vx + s.vz * s.vz) + guide_potential_2d(s.x, s.z, s.t, cfg.guide) +
         m * cfg.constants.g * s.z;
}

}  // namespace beamsplit
