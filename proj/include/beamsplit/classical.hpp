#pragma once

#include <span>
#include <utility>
#include <vector>

#include "beamsplit/config.hpp"

namespace beamsplit {

/// Point-particle state in the (x, z) plane. Velocities are plain time derivatives
/// (vz < 0 while falling).
struct ClassicalState {
  double t = 0;
  double x = 0;
  double z = 0;
  double vx = 0;
  double vz = 0;
};

struct IntegratorStats {
  long accepted_steps = 0;
  long rejected_steps = 0;
  double rel_tol = 0;
  double abs_tol = 0;
};

struct Trajectory {
  std::vector<ClassicalState> samples;
  IntegratorStats stats;
};

/// Newtonian motion in V_g + m g z with an embedded Dormand-Prince 5(4) pair and
/// dense output at `output_times` (strictly increasing, first equal to init.t).
/// A step boundary is forced at the oblique switch-on time.
Trajectory integrate_trajectory(const ClassicalState& init, std::span<const double> output_times,
                                double rel_tol, double abs_tol, const SimulationConfig& cfg);

/// Convenience overload: `samples` equally spaced outputs on [init.t, t_end].
Trajectory integrate_trajectory(const ClassicalState& init, double t_end, int samples,
                                double rel_tol, double abs_tol, const SimulationConfig& cfg);

/// |z(t) - z_ff(t)| / |z_ff(t)| for every sample, where z_ff starts from the
/// trajectory's first sample. Samples with z_ff == 0 are skipped.
std::vector<std::pair<double, double>> free_fall_deviation(const Trajectory& traj, double g);

/// Kinetic energy of the motion transverse to the oblique guide.
double transverse_kinetic_energy(const ClassicalState& s, const SimulationConfig& cfg);

/// Kinetic + guide + gravitational energy.
double total_energy(const ClassicalState& s, const SimulationConfig& cfg);

}  // namespace beamsplit
