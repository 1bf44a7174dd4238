#pragma once

#include <cmath>

// doctest::Approx carries an absolute floor of epsilon, useless for SI-sized values.
inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }
