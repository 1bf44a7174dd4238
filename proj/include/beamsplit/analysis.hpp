#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "beamsplit/config.hpp"
#include "beamsplit/fft.hpp"
#include "beamsplit/grid.hpp"
#include "beamsplit/propagator.hpp"

namespace beamsplit {

/// Split of the probe line into the vertical branch [x_min, x_b) and the oblique branch
/// [x_b, x_max].
struct BranchPartition {
  enum class Method { BarrierMaximum, Midpoint };

  double boundary = 0;
  double oblique_center = 0;  // centre of the oblique well on the probe line
  Method method = Method::Midpoint;
};

/// x_b = position of the potential maximum between the two well centres at time t_f,
/// or their midpoint when the potential is monotone there. Throws AnalysisError when the
/// wells are closer than (w0 + w1) / 2.
BranchPartition find_branch_boundary(double t_f, const FallPath& path, const SimulationConfig& cfg,
                                     const Grid1D& grid);

struct BranchProbabilities {
  double right = 0;     // P_R
  double vertical = 0;  // P_0
  double leak = 0;      // 1 - P_R - P_0
};

double right_branch_probability(const Wavepacket& wp, double boundary);
BranchProbabilities branch_probabilities(const Wavepacket& wp, const BranchPartition& partition);

/// Largest change of P_R when the boundary moves by +-10% of the inter-well distance.
double partition_sensitivity(const Wavepacket& wp, const BranchPartition& partition);

/// Region integral of the energy density and the region's population. Energies are
/// measured from the bottom of the guide the branch belongs to.
struct BranchEnergy {
  double integral = 0;  // J, not normalised
  double population = 0;

  double mean() const { return integral / population; }
};

/// Energy expectations restricted to one branch. Holds an FFT plan; one per worker.
class BranchAnalyzer {
 public:
  BranchAnalyzer(const SimulationConfig& cfg, const Grid1D& grid);

  /// Smooth window selecting x >= boundary (erf edge, 4 grid spacings wide); the
  /// vertical window is its complement.
  Eigen::ArrayXd oblique_window(double boundary) const;

  BranchEnergy vertical(const Wavepacket& wp, const BranchPartition& partition);
  /// Absent when the oblique population is below 1e-6.
  std::optional<BranchEnergy> oblique(const Wavepacket& wp, const BranchPartition& partition);

 private:
  double expectation(const Eigen::VectorXcd& phi, const Eigen::ArrayXd& v);

  SimulationConfig cfg_;
  Grid1D grid_;
  Fft fft_;
  Eigen::ArrayXd x_;
  Eigen::ArrayXd kinetic_;  // hbar^2 k^2 / 2m
  Eigen::VectorXcd scratch_;
};

// --- thermal aggregates -----------------------------------------------------------

/// P(v0) <P_R>(v0).
inline double splitting_per_state(double population, double mean_right) {
  return population * mean_right;
}

/// (1 - P_s) <E_0> + P_s <E_1>.
inline double total_average_energy(double e_vertical, double e_oblique, double splitting) {
  return (1.0 - splitting) * e_vertical + splitting * e_oblique;
}

/// Per-level inputs of the aggregates; all quantities already averaged over initial
/// conditions.
struct LevelAverages {
  int v0 = 0;
  double ladder_weight = 1;
  double population = 0;      // P(v0)
  double mean_right = 0;      // <P_R>(v0)
  double mean_vertical = 0;   // <P_0>(v0)
  double e_vertical = 0;      // <E_0(v0)>, region integral (J)
  double e_oblique = 0;       // <E_1(v0)>, region integral (J)
};

struct Aggregates {
  double splitting = 0;            // P_s, normalised by P_trap
  double splitting_level_sum = 0;  // same, normalised by the ladder sum of P(v0)
  double level_sum = 0;            // ladder sum of P(v0)
  double e_vertical = 0;           // <E_0> (J)
  std::optional<double> e_oblique;  // <E_1> (J); absent below 1e-6 deflected fraction
  double e_total = 0;              // <E> (J)
  std::optional<double> mean_level_oblique;  // P_s(v0)-weighted mean of v0
  double truncation = 0;           // P(v0) <P_R>(v0) of the top ladder level
};

Aggregates aggregate(const std::vector<LevelAverages>& levels, double p_trap);

}  // namespace beamsplit
