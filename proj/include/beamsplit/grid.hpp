#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Dense>

#include "beamsplit/error.hpp"

namespace beamsplit {

/// Uniform periodic grid x_j = x_min + j dx, j < n, with dx = (x_max - x_min) / n.
class Grid1D {
 public:
  Grid1D(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
    if (n < 2 || (n & (n - 1)) != 0) throw Error("grid size must be a power of two");
    if (!(x_max > x_min)) throw Error("grid requires x_max > x_min");
    dx_ = (x_max - x_min) / static_cast<double>(n);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  Eigen::Index ssize() const { return static_cast<Eigen::Index>(n_); }
  double dx() const { return dx_; }
  double dk() const { return 2.0 * std::numbers::pi / (static_cast<double>(n_) * dx_); }

  double x(Eigen::Index j) const { return x_min_ + static_cast<double>(j) * dx_; }

  /// Wavenumber of FFT bin j in transform ordering.
  double k(Eigen::Index j) const {
    const auto n = ssize();
    return static_cast<double>(j < n / 2 ? j : j - n) * dk();
  }

  double k_nyquist() const { return std::numbers::pi / dx_; }

  Eigen::ArrayXd positions() const {
    return Eigen::ArrayXd::LinSpaced(ssize(), x_min_, x_min_ + dx_ * static_cast<double>(n_ - 1));
  }

  Eigen::ArrayXd wavenumbers() const {
    Eigen::ArrayXd k(ssize());
    for (Eigen::Index j = 0; j < ssize(); ++j) k[j] = this->k(j);
    return k;
  }

  /// First index with x_j >= x.
  Eigen::Index index_at_or_above(double x) const {
    const double r = std::ceil((x - x_min_) / dx_ - 1e-9);
    if (r <= 0) return 0;
    if (r >= static_cast<double>(n_)) return ssize();
    return static_cast<Eigen::Index>(r);
  }

 private:
  double x_min_;
  double x_max_;
  std::size_t n_;
  double dx_;
};

}  // namespace beamsplit
