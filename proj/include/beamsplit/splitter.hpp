#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "beamsplit/analysis.hpp"
#include "beamsplit/config.hpp"
#include "beamsplit/eigensolver.hpp"
#include "beamsplit/propagator.hpp"
#include "beamsplit/thermal.hpp"

namespace beamsplit {

/// Outcome of one propagation from level v0 and one initial condition, analysed at the
/// probe height.
struct StateResult {
  int v0 = 0;
  double level_energy = 0;  // J
  double z0 = 0;
  double fall_speed0 = 0;
  double t_f = 0;
  double boundary = 0;
  int boundary_method = 0;  // BranchPartition::Method
  double oblique_center = 0;
  BranchProbabilities probabilities;
  BranchEnergy e_vertical;
  std::optional<BranchEnergy> e_oblique;
  double partition_shift = 0;
  double norm_drift = 0;
  double max_edge_ratio = 0;
  long steps = 0;
};

std::string serialize(const StateResult& r);
StateResult deserialize_state(const std::string& line);

/// Propagates and analyses single states; owns the FFT plans, so one per worker.
class StateRunner {
 public:
  StateRunner(const SimulationConfig& cfg, const Grid1D& grid);

  StateResult run(const EigenFunction& level, double z0, double fall_speed0,
                  const SnapshotSink& sink = {}, int snapshot_every = 0);
  /// Final packet of the last run.
  const Wavepacket& last_packet() const { return *last_; }

  Propagator& propagator() { return propagator_; }

 private:
  SimulationConfig cfg_;
  Grid1D grid_;
  Propagator propagator_;
  BranchAnalyzer analyzer_;
  std::optional<Wavepacket> last_;
};

Grid1D make_grid(const SimulationConfig& cfg);

/// Append-only file of serialized StateResults keyed by a hash of everything that
/// determines the propagation. Safe to share between workers.
class ResultCache {
 public:
  explicit ResultCache(std::filesystem::path file);

  static std::string key(const SimulationConfig& cfg, int v0, double z0, double fall_speed0);
  std::optional<StateResult> find(const std::string& key) const;
  void store(const std::string& key, const StateResult& r);
  std::size_t size() const;

 private:
  std::filesystem::path file_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> entries_;
};

struct EnsembleOptions {
  int workers = 1;
  int quadrature_order = 1;
  int ladder_stride = 100;
  /// Explicit level list; when empty the decimated ladder over every bound level is used.
  std::vector<int> levels;
  ResultCache* cache = nullptr;
  std::function<void(const StateResult&, std::size_t done, std::size_t total)> progress;
};

struct SplitterReport {
  std::vector<StateResult> states;  // level-major, initial condition minor
  std::vector<LevelAverages> levels;
  Aggregates totals;
  double p_trap = 0;
  int level_count = 0;
  int top_level = -1;  // highest level that fits the grid, standing in for the true top
  double max_leak = 0;
  double max_partition_shift = 0;
  double max_edge_ratio = 0;
  double max_norm_drift = 0;
};

/// Highest bound level whose tails fit the grid, searching down from the top.
int highest_fitting_level(const GaussianWell& well, const Grid1D& grid, int count);

/// Runs (ladder levels) x (initial-condition nodes) and aggregates them. Results do not
/// depend on the worker count.
SplitterReport run_ensemble(const SimulationConfig& cfg, const EnsembleOptions& opts);

/// Averages per-state results into per-level quantities and aggregates.
SplitterReport summarize(const SimulationConfig& cfg, std::vector<StateResult> states,
                         const std::vector<int>& levels, const std::vector<double>& ladder_weights,
                         const QuadratureSet& quadrature);

/// Runs tasks[0..n) on a pool of worker threads; each worker calls make_context() once.
/// Rethrows the first task exception after all workers stop.
template <typename Context>
void run_pool(std::size_t n, int workers, const std::function<Context()>& make_context,
              const std::function<void(Context&, std::size_t)>& task);

struct TimeStepCheck {
  double dt = 0;
  double p_right = 0;
  double p_right_half = 0;
  int halvings = 0;
  bool converged = false;
};

/// Starting from the configured dt, halves it until P_R of the given state changes by less
/// than `tolerance` under a further halving (at most `max_halvings` times).
TimeStepCheck select_time_step(const SimulationConfig& cfg, int v0, double z0, double fall_speed0,
                               double tolerance = 1e-4, int max_halvings = 3);

}  // namespace beamsplit

#include "beamsplit/detail/pool.hpp"
