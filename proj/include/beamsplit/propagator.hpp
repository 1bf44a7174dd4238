#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "beamsplit/config.hpp"
#include "beamsplit/eigensolver.hpp"
#include "beamsplit/fft.hpp"
#include "beamsplit/grid.hpp"

namespace beamsplit {

/// Vertical motion that parametrises the 1D potential: free fall from (z0, fall_speed0),
/// or a fixed height (used to freeze the potential in tests).
struct FallPath {
  double z0 = 0;
  double fall_speed0 = 0;  // positive downward
  std::optional<double> frozen_z;

  double height(double t, double g) const;
  double speed(double t, double g) const;  // downward speed
};

struct Wavepacket {
  Grid1D grid;
  Eigen::VectorXcd psi;
  double t = 0;
  int v0 = -1;
  FallPath path;
  /// Set while psi is still the untouched eigenstate of V0 with this energy.
  std::optional<double> stationary_energy;

  double norm() const { return psi.squaredNorm() * grid.dx(); }
  Eigen::ArrayXd density() const { return psi.array().abs2(); }
  /// max(|psi| at the two outermost points) / max |psi|.
  double edge_ratio() const;
};

/// Wraps an eigenfunction as the initial packet; throws PropagationError when its edge
/// amplitude exceeds 1e-8 of the maximum.
Wavepacket prepare_initial(const EigenFunction& level, const Grid1D& grid, const FallPath& path);

struct PropagationStats {
  long steps = 0;
  double t_start = 0;
  double t_end = 0;
  double max_edge_ratio = 0;
  double norm_initial = 0;
  double norm_final = 0;
};

/// Callback for snapshots: packet and the free-fall height at its time.
using SnapshotSink = std::function<void(const Wavepacket&, double z)>;

/// Strang split-operator propagation under T + V_1D(x, t). One instance per worker.
class Propagator {
 public:
  Propagator(const SimulationConfig& cfg, const Grid1D& grid);

  const Grid1D& grid() const { return grid_; }
  const SimulationConfig& config() const { return cfg_; }

  /// One symmetric step: half kinetic, potential at t + dt/2, half kinetic.
  void step(Wavepacket& wp, double dt);

  /// Steps of the configured dt (fused half-kinetic factors) up to t_end, with step
  /// boundaries forced at the switch-on time and at t_end.
  PropagationStats propagate_to(Wavepacket& wp, double t_end, const SnapshotSink& sink = {},
                                int snapshot_every = 0);

  /// Arrival time of the packet's fall path at the probe height; throws if unreachable.
  double probe_time(const FallPath& path) const;
  PropagationStats propagate_to_probe(Wavepacket& wp, const SnapshotSink& sink = {},
                                      int snapshot_every = 0);

  /// V_1D sampled on the grid at time t.
  Eigen::ArrayXd potential(double t, const FallPath& path) const;

  /// (T + V) psi with the kinetic term applied spectrally.
  Eigen::VectorXcd apply_hamiltonian(const Eigen::VectorXcd& psi, const Eigen::ArrayXd& v);
  /// <psi|T + V|psi> dx (not normalised).
  double energy(const Eigen::VectorXcd& psi, const Eigen::ArrayXd& v);

 private:
  void kinetic(Eigen::VectorXcd& psi, double tau);
  void potential_phase(Wavepacket& wp, double t_mid, double dt);
  void apply_tabulated_phase(Eigen::Ref<Eigen::VectorXcd> psi, double scale);
  const Eigen::ArrayXcd& kinetic_factor(double tau);
  void apply_mask(Eigen::VectorXcd& psi) const;

  SimulationConfig cfg_;
  Grid1D grid_;
  Fft fft_;
  Eigen::ArrayXd x_;
  Eigen::ArrayXd k2_;  // k^2 in transform ordering
  Eigen::ArrayXd v0_;
  Eigen::ArrayXd mask_;
  // Cached factors for the configured dt.
  double cached_tau_[2] = {-1, -1};
  Eigen::ArrayXcd kinetic_cache_[2];
  Eigen::ArrayXcd kinetic_scratch_;
  Eigen::ArrayXcd v0_phase_dt_;
  // exp(i A u) tabulated on u in [0, 1] for A = U1 dt / hbar
  double phase_table_scale_ = -1;
  std::vector<std::complex<double>> phase_table_;
  Eigen::ArrayXd profile_;
};

/// Snapshot stream. Layout (host byte order, little-endian on x86):
///   header: char[8] "BSNAP001", uint32 points (1024), uint32 reserved (0),
///           float64 x_min, float64 x_max
///   record: float64 t (s), float64 z (m), float64[points] block-averaged |psi|^2 (1/m)
class SnapshotWriter {
 public:
  static constexpr std::uint32_t kPoints = 1024;

  SnapshotWriter(const std::filesystem::path& path, const Grid1D& grid);
  void write(const Wavepacket& wp, double z);
  SnapshotSink sink();
  std::size_t records() const { return records_; }

 private:
  std::ofstream out_;
  std::size_t records_ = 0;
};

struct SnapshotRecord {
  double t;
  double z;
  std::vector<double> density;
};

std::vector<SnapshotRecord> read_snapshots(const std::filesystem::path& path, double* x_min = nullptr,
                                           double* x_max = nullptr);

}  // namespace beamsplit
