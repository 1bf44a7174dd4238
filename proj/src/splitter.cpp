#include "beamsplit/splitter.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace beamsplit {

namespace {

void put(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
  out += ',';
}

struct FieldReader {
  std::string_view rest;

  double next() {
    const auto comma = rest.find(',');
    const std::string_view field = rest.substr(0, comma);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw Error("malformed cached result field '" + std::string(field) + "'");
    }
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    return v;
  }
};

}  // namespace

std::string serialize(const StateResult& r) {
  std::string out;
  put(out, r.v0);
  put(out, r.level_energy);
  put(out, r.z0);
  put(out, r.fall_speed0);
  put(out, r.t_f);
  put(out, r.boundary);
  put(out, r.boundary_method);
  put(out, r.oblique_center);
  put(out, r.probabilities.right);
  put(out, r.probabilities.vertical);
  put(out, r.probabilities.leak);
  put(out, r.e_vertical.integral);
  put(out, r.e_vertical.population);
  put(out, r.e_oblique ? 1 : 0);
  put(out, r.e_oblique ? r.e_oblique->integral : 0.0);
  put(out, r.e_oblique ? r.e_oblique->population : 0.0);
  put(out, r.partition_shift);
  put(out, r.norm_drift);
  put(out, r.max_edge_ratio);
  put(out, static_cast<double>(r.steps));
  out.pop_back();
  return out;
}

StateResult deserialize_state(const std::string& line) {
  FieldReader in{line};
  StateResult r;
  r.v0 = static_cast<int>(in.next());
  r.level_energy = in.next();
  r.z0 = in.next();
  r.fall_speed0 = in.next();
  r.t_f = in.next();
  r.boundary = in.next();
  r.boundary_method = static_cast<int>(in.next());
  r.oblique_center = in.next();
  r.probabilities.right = in.next();
  r.probabilities.vertical = in.next();
  r.probabilities.leak = in.next();
  r.e_vertical.integral = in.next();
  r.e_vertical.population = in.next();
  const bool has_oblique = in.next() != 0.0;
  BranchEnergy e1{in.next(), in.next()};
  if (has_oblique) r.e_oblique = e1;
  r.partition_shift = in.next();
  r.norm_drift = in.next();
  r.max_edge_ratio = in.next();
  r.steps = static_cast<long>(in.next());
  return r;
}

Grid1D make_grid(const SimulationConfig& cfg) {
  return Grid1D(cfg.numerics.x_min, cfg.numerics.x_max, cfg.numerics.grid_points());
}

StateRunner::StateRunner(const SimulationConfig& cfg, const Grid1D& grid)
    : cfg_(cfg), grid_(grid), propagator_(cfg, grid), analyzer_(cfg, grid) {}

StateResult StateRunner::run(const EigenFunction& level, double z0, double fall_speed0,
                             const SnapshotSink& sink, int snapshot_every) {
  const FallPath path{z0, fall_speed0, std::nullopt};
  Wavepacket wp = prepare_initial(level, grid_, path);
  const PropagationStats stats = propagator_.propagate_to_probe(wp, sink, snapshot_every);

  StateResult r;
  r.v0 = level.v;
  r.level_energy = level.energy;
  r.z0 = z0;
  r.fall_speed0 = fall_speed0;
  r.t_f = wp.t;
  const BranchPartition partition = find_branch_boundary(wp.t, path, cfg_, grid_);
  r.boundary = partition.boundary;
  r.boundary_method = static_cast<int>(partition.method);
  r.oblique_center = partition.oblique_center;
  r.probabilities = branch_probabilities(wp, partition);
  r.e_vertical = analyzer_.vertical(wp, partition);
  r.e_oblique = analyzer_.oblique(wp, partition);
  r.partition_shift = partition_sensitivity(wp, partition);
  r.norm_drift = stats.norm_final - stats.norm_initial;
  r.max_edge_ratio = stats.max_edge_ratio;
  r.steps = stats.steps;
  last_ = std::move(wp);
  return r;
}

// --- cache ------------------------------------------------------------------------

ResultCache::ResultCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    // A torn last line from an interrupted run is skipped.
    if (tab == std::string::npos) continue;
    try {
      deserialize_state(line.substr(tab + 1));
    } catch (const Error&) {
      continue;
    }
    entries_[line.substr(0, tab)] = line.substr(tab + 1);
  }
}

std::string ResultCache::key(const SimulationConfig& cfg, int v0, double z0, double fall_speed0) {
  SimulationConfig c = cfg;
  // Settings that do not change a single propagation.
  c.cloud = CloudConfig{};
  c.numerics.snapshot_every = 0;
  c.numerics.quadrature_order = 1;
  c.numerics.ladder_stride = 1;
  char buf[96];
  std::snprintf(buf, sizeof buf, "|%d|%.17g|%.17g", v0, z0, fall_speed0);
  return hash_hex(fnv1a(to_config_text(c) + buf));
}

std::optional<StateResult> ResultCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return deserialize_state(it->second);
}

void ResultCache::store(const std::string& key, const StateResult& r) {
  const std::string line = serialize(r);
  std::lock_guard lock(mutex_);
  entries_[key] = line;
  std::ofstream out(file_, std::ios::app);
  out << key << '\t' << line << '\n';
  if (!out) throw Error("cannot write result cache " + file_.string());
}

std::size_t ResultCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

// --- ensembles ----------------------------------------------------------------------

int highest_fitting_level(const GaussianWell& well, const Grid1D& grid, int count) {
  static std::mutex mutex;
  static std::map<std::string, int> known;
  char key[160];
  std::snprintf(key, sizeof key, "%.17g|%.17g|%.17g|%.17g|%.17g|%zu|%d", well.depth, well.waist,
                well.mass, grid.x_min(), grid.x_max(), grid.size(), count);
  {
    std::lock_guard lock(mutex);
    if (const auto it = known.find(key); it != known.end()) return it->second;
  }
  for (int v = count - 1; v >= 0 && v >= count - 200; --v) {
    try {
      solve_level(well, v, grid);
    } catch (const EigenError&) {
      continue;
    }
    std::lock_guard lock(mutex);
    known[key] = v;
    return v;
  }
  throw EigenError("no level near the top of the well fits the grid");
}

SplitterReport summarize(const SimulationConfig& cfg, std::vector<StateResult> states,
                         const std::vector<int>& levels, const std::vector<double>& ladder_weights,
                         const QuadratureSet& quadrature) {
  const std::size_t nodes = quadrature.nodes.size();
  if (states.size() != levels.size() * nodes) throw Error("state table does not match the ladder");
  const GaussianWell well = GaussianWell::from(cfg);
  SplitterReport report;
  report.level_count = count_bound_states(well);
  report.p_trap = trapping_probability(cfg).value;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    LevelAverages l;
    l.v0 = levels[i];
    l.ladder_weight = ladder_weights[i];
    const double eps = states[i * nodes].level_energy;
    l.population = level_population(eps, density_of_states(well, eps), cfg);
    for (std::size_t j = 0; j < nodes; ++j) {
      const StateResult& s = states[i * nodes + j];
      const double w = quadrature.nodes[j].weight;
      l.mean_right += w * s.probabilities.right;
      l.mean_vertical += w * s.probabilities.vertical;
      l.e_vertical += w * s.e_vertical.integral;
      if (s.e_oblique) l.e_oblique += w * s.e_oblique->integral;
      report.max_leak = std::max(report.max_leak, s.probabilities.leak);
      report.max_partition_shift = std::max(report.max_partition_shift, s.partition_shift);
      report.max_edge_ratio = std::max(report.max_edge_ratio, s.max_edge_ratio);
      report.max_norm_drift = std::max(report.max_norm_drift, std::abs(s.norm_drift));
    }
    report.levels.push_back(l);
  }
  report.totals = aggregate(report.levels, report.p_trap);
  report.states = std::move(states);
  return report;
}

SplitterReport run_ensemble(const SimulationConfig& cfg, const EnsembleOptions& opts) {
  const Grid1D grid = make_grid(cfg);
  const GaussianWell well = GaussianWell::from(cfg);
  std::vector<int> levels;
  std::vector<double> weights;
  int top = -1;
  if (opts.levels.empty()) {
    const int count = count_bound_states(well);
    Ladder ladder = make_ladder(count, opts.ladder_stride);
    top = highest_fitting_level(well, grid, count);
    // Levels too close to threshold to fit the grid are represented by `top`.
    double folded = 0;
    while (!ladder.levels.empty() && ladder.levels.back() > top) {
      folded += ladder.weights.back();
      ladder.levels.pop_back();
      ladder.weights.pop_back();
    }
    if (folded > 0) {
      if (!ladder.levels.empty() && ladder.levels.back() == top) {
        ladder.weights.back() += folded;
      } else {
        ladder.levels.push_back(top);
        ladder.weights.push_back(folded);
      }
    }
    levels = std::move(ladder.levels);
    weights = std::move(ladder.weights);
  } else {
    levels = opts.levels;
    weights.assign(levels.size(), 1.0);
  }

  const QuadratureSet quadrature =
      initial_condition_quadrature(ThermalEnsemble::from(cfg), opts.quadrature_order);
  const std::size_t nodes = quadrature.nodes.size();
  std::vector<StateResult> states(levels.size() * nodes);
  std::mutex progress_mutex;
  std::size_t done = 0;

  run_pool<StateRunner>(
      levels.size(), opts.workers, [&] { return StateRunner(cfg, grid); },
      [&](StateRunner& runner, std::size_t i) {
        std::optional<EigenFunction> level;
        for (std::size_t j = 0; j < nodes; ++j) {
          const InitialCondition& ic = quadrature.nodes[j];
          std::string key;
          std::optional<StateResult> r;
          if (opts.cache) {
            key = ResultCache::key(cfg, levels[i], ic.z0, ic.fall_speed0);
            r = opts.cache->find(key);
          }
          if (!r) {
            if (!level) level = solve_level(well, levels[i], grid);
            r = runner.run(*level, ic.z0, ic.fall_speed0);
            if (opts.cache) opts.cache->store(key, *r);
          }
          states[i * nodes + j] = *r;
          if (opts.progress) {
            std::lock_guard lock(progress_mutex);
            opts.progress(*r, ++done, states.size());
          }
        }
      });

  SplitterReport report = summarize(cfg, std::move(states), levels, weights, quadrature);
  report.top_level = top;
  return report;
}

TimeStepCheck select_time_step(const SimulationConfig& cfg, int v0, double z0, double fall_speed0,
                               double tolerance, int max_halvings) {
  const Grid1D grid = make_grid(cfg);
  const EigenFunction level = solve_level(GaussianWell::from(cfg), v0, grid);
  auto p_right = [&](double dt) {
    SimulationConfig c = cfg;
    c.numerics.dt = dt;
    StateRunner runner(c, grid);
    return runner.run(level, z0, fall_speed0).probabilities.right;
  };
  TimeStepCheck check;
  check.dt = cfg.numerics.dt;
  check.p_right = p_right(check.dt);
  for (;;) {
    check.p_right_half = p_right(0.5 * check.dt);
    if (std::abs(check.p_right_half - check.p_right) < tolerance) {
      check.converged = true;
      return check;
    }
    if (check.halvings == max_halvings) return check;
    check.dt *= 0.5;
    check.p_right = check.p_right_half;
    ++check.halvings;
  }
}

}  // namespace beamsplit
