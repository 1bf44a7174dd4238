#include "beamsplit/analysis.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "beamsplit/potentials.hpp"

namespace beamsplit {

using namespace std::complex_literals;

BranchPartition find_branch_boundary(double t_f, const FallPath& path, const SimulationConfig& cfg,
                                     const Grid1D& grid) {
  const GuideConfig& g = cfg.guide;
  const double z = path.height(t_f, cfg.constants.g);
  BranchPartition p;
  p.oblique_center = oblique_center(z, g);
  const double lo = 0.0;
  const double hi = p.oblique_center;
  if (!(hi - lo > 0.5 * (g.w0 + g.w1))) {
    throw AnalysisError("guides are not separated at the probe height");
  }
  if (!(hi < grid.x_max())) throw AnalysisError("oblique guide lies outside the grid");

  auto potential = [&](double x) { return guide_potential_2d(x, z, t_f, g); };

  // Coarse scan for the highest sample, then a bracketed refinement around it.
  constexpr int kScan = 2000;
  const double step = (hi - lo) / kScan;
  int best = 0;
  double best_v = potential(lo);
  for (int i = 1; i <= kScan; ++i) {
    const double v = potential(lo + i * step);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best == 0 || best == kScan) {
    p.boundary = 0.5 * (lo + hi);
    p.method = BranchPartition::Method::Midpoint;
    return p;
  }
  const auto r = boost::math::tools::brent_find_minima([&](double x) { return -potential(x); },
                                                       lo + (best - 1) * step, lo + (best + 1) * step,
                                                       std::numeric_limits<double>::digits / 2);
  p.boundary = r.first;
  p.method = BranchPartition::Method::BarrierMaximum;
  return p;
}

double right_branch_probability(const Wavepacket& wp, double boundary) {
  const Eigen::Index first = wp.grid.index_at_or_above(boundary);
  return wp.psi.tail(wp.psi.size() - first).squaredNorm() * wp.grid.dx();
}

BranchProbabilities branch_probabilities(const Wavepacket& wp, const BranchPartition& partition) {
  BranchProbabilities p;
  const Eigen::Index first = wp.grid.index_at_or_above(partition.boundary);
  p.vertical = wp.psi.head(first).squaredNorm() * wp.grid.dx();
  p.right = wp.psi.tail(wp.psi.size() - first).squaredNorm() * wp.grid.dx();
  // Norm lost to roundoff or an absorbing mask.
  p.leak = std::max(0.0, 1.0 - p.vertical - p.right);
  return p;
}

double partition_sensitivity(const Wavepacket& wp, const BranchPartition& partition) {
  const double shift = 0.1 * partition.oblique_center;
  const double ref = right_branch_probability(wp, partition.boundary);
  return std::max(std::abs(right_branch_probability(wp, partition.boundary - shift) - ref),
                  std::abs(right_branch_probability(wp, partition.boundary + shift) - ref));
}

BranchAnalyzer::BranchAnalyzer(const SimulationConfig& cfg, const Grid1D& grid)
    : cfg_(cfg), grid_(grid), fft_(grid.size()) {
  x_ = grid_.positions();
  const double hbar = cfg_.constants.hbar;
  kinetic_ = grid_.wavenumbers().square() * (hbar * hbar / (2.0 * cfg_.constants.mass));
}

Eigen::ArrayXd BranchAnalyzer::oblique_window(double boundary) const {
  const double width = 4.0 * grid_.dx();
  return x_.unaryExpr([&](double x) { return 0.5 * (1.0 + std::erf((x - boundary) / width)); });
}

double BranchAnalyzer::expectation(const Eigen::VectorXcd& phi, const Eigen::ArrayXd& v) {
  scratch_ = phi;
  fft_.forward(scratch_);
  // Parseval: sum |phi_k|^2 T_k / n equals the position-space sum of phi* T phi.
  const double kinetic =
      (scratch_.array().abs2() * kinetic_).sum() / static_cast<double>(grid_.size());
  const double potential = (phi.array().abs2() * v).sum();
  return (kinetic + potential) * grid_.dx();
}

BranchEnergy BranchAnalyzer::vertical(const Wavepacket& wp, const BranchPartition& partition) {
  const double t = wp.t;
  const double z = wp.path.height(t, cfg_.constants.g);
  const Eigen::ArrayXd window = 1.0 - oblique_window(partition.boundary);
  const Eigen::VectorXcd phi = (wp.psi.array() * window).matrix();
  const Eigen::ArrayXd v =
      x_.unaryExpr([&](double x) { return guide_potential_2d(x, z, t, cfg_.guide) + cfg_.guide.U0; });
  BranchEnergy e;
  e.integral = expectation(phi, v);
  e.population = branch_probabilities(wp, partition).vertical;
  return e;
}

std::optional<BranchEnergy> BranchAnalyzer::oblique(const Wavepacket& wp,
                                                    const BranchPartition& partition) {
  const double population = right_branch_probability(wp, partition.boundary);
  if (population < 1e-6) return std::nullopt;
  const GuideConfig& g = cfg_.guide;
  const double t = wp.t;
  const double z = wp.path.height(t, cfg_.constants.g);
  const double m = cfg_.constants.mass;
  // Guide drift on the probe line is (fall speed) tan(gamma); remove it.
  const double drift = wp.path.speed(t, cfg_.constants.g) * std::tan(g.gamma);
  const double q = m * drift / cfg_.constants.hbar;
  const Eigen::ArrayXd window = oblique_window(partition.boundary);
  Eigen::VectorXcd phi(wp.psi.size());
  for (Eigen::Index j = 0; j < phi.size(); ++j) {
    phi[j] = wp.psi[j] * window[j] * std::polar(1.0, -q * x_[j]);
  }
  const double tilt = m * cfg_.constants.g * std::sin(g.gamma);
  const Eigen::ArrayXd v = x_.unaryExpr([&](double x) {
    return guide_potential_2d(x, z, t, g) + tilt * rotate(x, z, g).x + g.U1;
  });
  BranchEnergy e;
  e.integral = expectation(phi, v);
  e.population = population;
  return e;
}

Aggregates aggregate(const std::vector<LevelAverages>& levels, double p_trap) {
  if (!(p_trap > 0)) throw AnalysisError("trapping probability must be positive");
  Aggregates a;
  double split = 0;
  double e0 = 0;
  double p0 = 0;
  double e1 = 0;
  double weighted_v = 0;
  for (const LevelAverages& l : levels) {
    const double w = l.ladder_weight * l.population;
    a.level_sum += w;
    split += w * l.mean_right;
    e0 += w * l.e_vertical;
    p0 += w * l.mean_vertical;
    e1 += w * l.e_oblique;
    weighted_v += w * l.mean_right * l.v0;
  }
  a.splitting = split / p_trap;
  a.splitting_level_sum = a.level_sum > 0 ? split / a.level_sum : 0.0;
  if (p0 > 0) a.e_vertical = e0 / p0;
  // Same threshold as the per-state oblique energy.
  if (split > 1e-6 * a.level_sum) {
    a.e_oblique = e1 / split;
    a.mean_level_oblique = weighted_v / split;
  }
  a.e_total = total_average_energy(a.e_vertical, a.e_oblique.value_or(0.0), a.splitting);
  if (!levels.empty()) {
    a.truncation = splitting_per_state(levels.back().population, levels.back().mean_right);
  }
  return a;
}

}  // namespace beamsplit
