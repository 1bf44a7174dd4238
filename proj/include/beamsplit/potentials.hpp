#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "beamsplit/config.hpp"

namespace beamsplit {

// Sign convention for the vertical motion: `fall_speed0` is positive downward,
// so the free-fall height is z0 - fall_speed0 * t - g t^2 / 2.

template <typename Scalar>
struct RotatedCoords {
  Scalar x;  // transverse to the oblique guide
  Scalar z;  // along the oblique guide
};

/// Coordinates in the frame of the oblique guide, pivoting at (0, z_c).
template <typename Scalar>
RotatedCoords<Scalar> rotate(Scalar x, Scalar z, const GuideConfig& g) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(Scalar(g.gamma));
  const Scalar s = sin(Scalar(g.gamma));
  const Scalar dz = z - Scalar(g.z_c);
  return {x * c + dz * s, dz * c - x * s};
}

template <typename Scalar>
Scalar vertical_potential(Scalar x, const GuideConfig& g) {
  using std::exp;
  return -Scalar(g.U0) * exp(Scalar(-2) * x * x / Scalar(g.w0 * g.w0));
}

/// Heaviside switch with u(0) = 1.
inline bool oblique_on(double t, const GuideConfig& g) { return t >= g.t0; }

template <typename Scalar>
Scalar oblique_potential(Scalar x, Scalar z, double t, const GuideConfig& g) {
  using std::exp;
  if (!oblique_on(t, g) || g.U1 == 0.0) return Scalar(0);
  const Scalar xr = rotate(x, z, g).x;
  return -Scalar(g.U1) * exp(Scalar(-2) * xr * xr / Scalar(g.w1 * g.w1));
}

template <typename Scalar>
Scalar guide_potential_2d(Scalar x, Scalar z, double t, const GuideConfig& g) {
  return vertical_potential(x, g) + oblique_potential(x, z, t, g);
}

/// Analytic gradient (dV/dx, dV/dz) of the guide potential.
inline Eigen::Vector2d guide_gradient(double x, double z, double t, const GuideConfig& g) {
  const double v0 = vertical_potential(x, g);
  Eigen::Vector2d grad(-4.0 * x / (g.w0 * g.w0) * v0, 0.0);
  if (oblique_on(t, g) && g.U1 != 0.0) {
    const double xr = rotate(x, z, g).x;
    const double v1 = -g.U1 * std::exp(-2.0 * xr * xr / (g.w1 * g.w1));
    const double dv1 = -4.0 * xr / (g.w1 * g.w1) * v1;  // dV1/dx'
    grad.x() += dv1 * std::cos(g.gamma);
    grad.y() += dv1 * std::sin(g.gamma);
  }
  return grad;
}

template <typename Scalar>
Scalar free_fall_height(Scalar t, Scalar z0, Scalar fall_speed0, Scalar g) {
  return z0 - fall_speed0 * t - Scalar(0.5) * g * t * t;
}

/// Downward speed after falling for t.
template <typename Scalar>
Scalar free_fall_speed(Scalar t, Scalar fall_speed0, Scalar g) {
  return fall_speed0 + g * t;
}

/// x position of the oblique guide axis on the horizontal line at height z.
inline double oblique_center(double z, const GuideConfig& g) {
  return (g.z_c - z) * std::tan(g.gamma);
}

/// V_g(x, z_ff(t), t): the potential seen by a wavepacket whose height follows free fall.
template <typename Scalar>
Scalar effective_potential_1d(Scalar x, double t, double z0, double fall_speed0,
                              const SimulationConfig& cfg) {
  const double z = free_fall_height(t, z0, fall_speed0, cfg.constants.g);
  return guide_potential_2d(x, Scalar(z), t, cfg.guide);
}

/// Samples the effective potential on a set of abscissae.
inline Eigen::ArrayXd effective_potential_1d(const Eigen::ArrayXd& x, double t, double z0,
                                             double fall_speed0, const SimulationConfig& cfg) {
  return x.unaryExpr([&](double xi) { return effective_potential_1d(xi, t, z0, fall_speed0, cfg); });
}

/// First positive time at which the free-fall height reaches z_target.
inline std::optional<double> arrival_time(double z_target, double z0, double fall_speed0,
                                          double g) {
  // g/2 t^2 + v t + (z_target - z0) = 0
  const double a = 0.5 * g;
  const double b = fall_speed0;
  const double c = z_target - z0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(sq, b == 0.0 ? 1.0 : b));
  double r1 = q / a;
  double r2 = (q != 0.0) ? c / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (r1 > 0) return r1;
  if (r2 > 0) return r2;
  return std::nullopt;
}

}  // namespace beamsplit
