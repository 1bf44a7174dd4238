#pragma once

#include <map>
#include <mutex>
#include <optional>

#include <Eigen/Dense>

#include "beamsplit/config.hpp"
#include "beamsplit/grid.hpp"

namespace beamsplit {

/// The vertical guide V0(x) = -depth * exp(-2 x^2 / waist^2) for a particle of given mass.
struct GaussianWell {
  double depth;
  double waist;
  double mass;
  double hbar;

  static GaussianWell from(const SimulationConfig& cfg) {
    return {cfg.guide.U0, cfg.guide.w0, cfg.constants.mass, cfg.constants.hbar};
  }

  /// sqrt(2 m depth) * waist / hbar: the phase scale of the well.
  double action_scale() const;
  double max_wavenumber() const;
  double potential(double x) const;
  /// Classical turning point for energy eps in (-depth, 0).
  double turning_point(double eps) const;
  /// Harmonic frequency at the well bottom.
  double omega() const;
};

// --- WKB --------------------------------------------------------------------

/// Closed-orbit action, integral of p dx around the orbit at energy eps.
double wkb_action(const GaussianWell& well, double eps);
/// Bound levels satisfying (v + 1/2) 2 pi hbar < action(0).
int count_bound_states(const GaussianWell& well);
/// Energy solving action(eps) = 2 pi hbar (v + 1/2).
double wkb_energy(const GaussianWell& well, int v);
/// Levels per unit energy, period(eps) / (2 pi hbar). Throws EigenError outside (-depth, 0).
double density_of_states(const GaussianWell& well, double eps);

// --- Numerov shooting ----------------------------------------------------------

struct NumerovOptions {
  double kh = 0.02;            // max wavenumber times step on the fine grid
  double decay_target = 36.0;  // e-folds of tail integrated past the turning point
  double clip_threshold = 18.42;  // e-folds required before the grid edge (1e-8 amplitude)
};

struct EigenFunction {
  int v = 0;
  double energy = 0;
  Eigen::VectorXd samples;  // on the propagation grid, unit grid norm
  int nodes = 0;
};

/// Bound-state count from node counting of the zero-energy solution.
int count_bound_states_numerov(const GaussianWell& well, const NumerovOptions& opts = {});

/// Energy of level v by parity-resolved node-counting bisection on a fine grid of step h
/// (h <= 0 picks kh / k_max).
double solve_energy(const GaussianWell& well, int v, const NumerovOptions& opts = {},
                    double half_width = 0.0, double h = 0.0);

/// Level v sampled on `grid`. The fine Numerov grid is commensurate with `grid` when
/// possible so samples are taken without interpolation.
EigenFunction solve_level(const GaussianWell& well, int v, const Grid1D& grid,
                          const NumerovOptions& opts = {});

/// Number of sign changes, ignoring samples below `floor` times the maximum modulus.
int count_nodes(const Eigen::VectorXd& f, double floor = 1e-12);

/// Bound spectrum of V0 with energies computed on demand and cached.
class EigenSpectrum {
 public:
  explicit EigenSpectrum(GaussianWell well, NumerovOptions opts = {});

  const GaussianWell& well() const { return well_; }
  int count() const { return count_; }
  double energy(int v) const;
  double wkb(int v) const { return wkb_energy(well_, v); }
  double density(double eps) const { return density_of_states(well_, eps); }

 private:
  GaussianWell well_;
  NumerovOptions opts_;
  int count_;
  mutable std::mutex mutex_;
  mutable std::map<int, double> energies_;
};

}  // namespace beamsplit
