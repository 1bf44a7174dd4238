#pragma once

#include <vector>

#include "beamsplit/config.hpp"
#include "beamsplit/eigensolver.hpp"

namespace beamsplit {

/// Gaussian position and Maxwell-Boltzmann velocity widths of the released cloud.
struct ThermalEnsemble {
  double sigma0;          // position width (m)
  double velocity_width;  // sqrt(k_B T0 / m) (m/s)
  double kT;              // J

  static ThermalEnsemble from(const SimulationConfig& cfg);
};

struct SeriesValue {
  double value = 0;
  double tail = 0;      // modulus of the last term added
  double roundoff = 0;  // largest term times the working precision
  int terms = 0;
};

class SeriesError : public Error {
 public:
  SeriesError(SeriesValue partial, const std::string& what) : Error(what), partial_(partial) {}
  const SeriesValue& partial() const { return partial_; }

 private:
  SeriesValue partial_;
};

/// One-dimensional trapping probability of a thermal cloud suddenly exposed to the
/// vertical guide, as the alternating series in U0/k_BT0. Summed in extended precision;
/// throws SeriesError (carrying the partial sum) if the tail is not below 1e-10 after
/// `max_terms` terms.
SeriesValue trapping_probability(double depth_over_kT, double sigma_over_waist, int max_terms = 1000);
SeriesValue trapping_probability(const SimulationConfig& cfg, int max_terms = 1000);

/// Probability of being trapped along both transverse axes: the 1D value squared.
double trapping_probability_2d(double depth_over_kT, double sigma_over_waist, int max_terms = 1000);

/// Population of a level of energy eps (in (-U0, 0)) with density of states rho.
double level_population(double eps, double rho, const SimulationConfig& cfg);

/// Same in dimensionless form: eps/U0, rho*U0, U0/k_BT0, sigma0/w0.
double level_population_scaled(double eps_over_depth, double rho_times_depth, double depth_over_kT,
                               double sigma_over_waist);

struct InitialCondition {
  double z0;
  double fall_speed0;  // positive downward
  double weight;
};

/// Product Gauss-Hermite nodes for the (z0, fall speed) distributions; weights sum to one.
struct QuadratureSet {
  std::vector<InitialCondition> nodes;
  int order = 1;
};

QuadratureSet initial_condition_quadrature(const ThermalEnsemble& ensemble, int order);

/// Decimated set of vibrational levels with weights approximating a sum over every level.
struct Ladder {
  std::vector<int> levels;
  std::vector<double> weights;
};

/// Levels 0, k, 2k, ... plus the top level; trapezoidal weights in v. Stride 1 is exact.
Ladder make_ladder(int level_count, int stride);

struct LevelPopulation {
  int v;
  double energy;
  double density;
  double population;
};

std::vector<LevelPopulation> level_populations(const EigenSpectrum& spectrum, const Ladder& ladder,
                                               const SimulationConfig& cfg);

}  // namespace beamsplit
