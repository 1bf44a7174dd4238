#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "beamsplit/analysis.hpp"
#include "beamsplit/classical.hpp"
#include "beamsplit/config.hpp"
#include "beamsplit/eigensolver.hpp"
#include "beamsplit/potentials.hpp"
#include "beamsplit/propagator.hpp"
#include "beamsplit/splitter.hpp"
#include "beamsplit/sweep.hpp"
#include "beamsplit/thermal.hpp"

using namespace beamsplit;

namespace {

struct Common {
  std::string config_path;
  std::string out = "-";
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool full_scale = false;
  int snapshot_every = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value configuration file (defaults if omitted)")
      ->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output file, - for stdout");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--full-scale", c.full_scale, "2^20 grid and order-7 initial-condition quadrature");
  app->add_option("--snapshot-every", c.snapshot_every, "snapshot period in steps (0 disables)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--set", c.overrides, "config override key=value (repeatable)");
}

SimulationConfig resolve(const Common& c) {
  SimulationConfig cfg = c.config_path.empty() ? default_config() : load_config(c.config_path);
  if (c.full_scale) {
    cfg.numerics.grid_log2 = 20;
    cfg.numerics.quadrature_order = 7;
    cfg.numerics.dt = 40e-6;
  }
  if (c.snapshot_every >= 0) cfg.numerics.snapshot_every = c.snapshot_every;
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(kv, "override must be key=value");
    const std::string value = kv.substr(eq + 1);
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw ConfigError(kv.substr(0, eq), "unparseable value '" + value + "'");
    }
    set_config_value(cfg, kv.substr(0, eq), v);
  }
  validate(cfg);
  return cfg;
}

/// stdout or a file, closed on scope exit.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_.open(path);
      if (!file_) throw Error("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string num(double v) { return format_number(v); }

int run_trajectory(const Common& c, const std::vector<double>& x0_mm, double z0_mm,
                   double fall_speed_mm_s, double t_end_ms, int samples) {
  const SimulationConfig cfg = resolve(c);
  Output out(c.out);
  std::ostream& os = out.stream();
  write_config_block(os, cfg, {{"command", "trajectory"}});
  os << "x0_mm,t_ms,x_mm,z_mm,vx_mm_s,vz_mm_s,E_total_uK,E_transverse_uK,free_fall_deviation,"
        "distance_to_oblique_mm\n";
  for (double x0 : x0_mm) {
    ClassicalState init{0.0, x0 * 1e-3, z0_mm * 1e-3, 0.0, -fall_speed_mm_s * 1e-3};
    const Trajectory traj = integrate_trajectory(init, t_end_ms * 1e-3, samples, cfg.numerics.ode_rel_tol,
                                                 cfg.numerics.ode_abs_tol, cfg);
    const auto dev = free_fall_deviation(traj, cfg.constants.g);
    std::size_t d = 0;
    for (const ClassicalState& s : traj.samples) {
      double deviation = std::numeric_limits<double>::quiet_NaN();
      if (d < dev.size() && dev[d].first == s.t) deviation = dev[d++].second;
      const double to_oblique = std::abs(rotate(s.x, s.z, cfg.guide).x);
      os << num(x0) << ',' << num(s.t * 1e3) << ',' << num(s.x * 1e3) << ',' << num(s.z * 1e3) << ','
         << num(s.vx * 1e3) << ',' << num(s.vz * 1e3) << ','
         << num(units::to_microkelvin(total_energy(s, cfg))) << ','
         << num(units::to_microkelvin(transverse_kinetic_energy(s, cfg))) << ',' << num(deviation)
         << ',' << num(to_oblique * 1e3) << '\n';
    }
  }
  return 0;
}

int run_trapping(const Common& c, double ratio_min, double ratio_max, int count,
                 const std::vector<double>& sigma_ratios) {
  const SimulationConfig cfg = resolve(c);
  Output out(c.out);
  std::ostream& os = out.stream();
  write_config_block(os, cfg, {{"command", "trapping"}});
  os << "sigma0_over_w0,U0_over_kT0,P_trap_1d,P_trap_2d,terms,tail\n";
  for (double s : sigma_ratios) {
    for (int i = 0; i < count; ++i) {
      // Logarithmic spacing in U0 / k_B T0.
      const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      const double a = ratio_min * std::pow(ratio_max / ratio_min, f);
      const SeriesValue p = trapping_probability(a, s);
      os << num(s) << ',' << num(a) << ',' << num(p.value) << ',' << num(p.value * p.value) << ','
         << p.terms << ',' << num(p.tail) << '\n';
    }
  }
  return 0;
}

int run_levels(const Common& c, int stride, bool wkb_only) {
  const SimulationConfig cfg = resolve(c);
  const GaussianWell well = GaussianWell::from(cfg);
  const EigenSpectrum spectrum(well, NumerovOptions{cfg.numerics.numerov_kh});
  const Ladder ladder = make_ladder(spectrum.count(), stride > 0 ? stride : cfg.numerics.ladder_stride);
  const double p_trap = trapping_probability(cfg).value;

  std::vector<LevelPopulation> pops;
  if (wkb_only) {
    for (int v : ladder.levels) {
      const double eps = spectrum.wkb(v);
      const double rho = spectrum.density(eps);
      pops.push_back({v, eps, rho, level_population(eps, rho, cfg)});
    }
  } else {
    pops = level_populations(spectrum, ladder, cfg);
  }
  double level_sum = 0;
  for (std::size_t i = 0; i < pops.size(); ++i) level_sum += ladder.weights[i] * pops[i].population;
  const double p_ground = level_population(spectrum.wkb(0), spectrum.density(spectrum.wkb(0)), cfg);

  Output out(c.out);
  std::ostream& os = out.stream();
  write_config_block(os, cfg,
                     {{"command", "levels"},
                      {"bound_levels", std::to_string(spectrum.count())},
                      {"energies", wkb_only ? "wkb" : "numerov"},
                      {"P_trap", num(p_trap)},
                      {"ladder_sum_P_v0", num(level_sum)}});
  os << "v0,ladder_weight,energy_uK,energy_over_U0,wkb_energy_uK,density_per_uK,P_v0,P_v0_over_P0\n";
  for (std::size_t i = 0; i < pops.size(); ++i) {
    const LevelPopulation& p = pops[i];
    os << p.v << ',' << num(ladder.weights[i]) << ',' << num(units::to_microkelvin(p.energy)) << ','
       << num(p.energy / well.depth) << ',' << num(units::to_microkelvin(spectrum.wkb(p.v))) << ','
       << num(p.density * units::from_microkelvin(1.0)) << ',' << num(p.population) << ','
       << num(p.population / p_ground) << '\n';
  }
  return 0;
}

int run_evolve(const Common& c, int v0, double z0_mm, double fall_speed_mm_s,
               const std::string& snapshot_path, const std::string& density_path) {
  const SimulationConfig cfg = resolve(c);
  const Grid1D grid = make_grid(cfg);
  const GaussianWell well = GaussianWell::from(cfg);
  const int count = count_bound_states(well);
  if (v0 < 0 || v0 >= count) {
    throw EigenError("level " + std::to_string(v0) + " is not bound (0 <= v0 < " +
                     std::to_string(count) + ")");
  }
  const EigenFunction level = solve_level(well, v0, grid, NumerovOptions{cfg.numerics.numerov_kh});
  StateRunner runner(cfg, grid);
  std::optional<SnapshotWriter> writer;
  if (cfg.numerics.snapshot_every > 0) {
    if (snapshot_path.empty()) throw ConfigError("snapshot_every", "snapshots need --snapshots PATH");
    writer.emplace(snapshot_path, grid);
  }
  const StateResult r = runner.run(level, z0_mm * 1e-3, fall_speed_mm_s * 1e-3,
                                   writer ? writer->sink() : SnapshotSink{}, cfg.numerics.snapshot_every);
  Output out(c.out);
  std::ostream& os = out.stream();
  write_config_block(os, cfg, {{"command", "evolve"}});
  write_state_table(os, {r});

  if (!density_path.empty()) {
    std::ofstream dens(density_path);
    if (!dens) throw Error("cannot open " + density_path);
    write_config_block(dens, cfg, {{"command", "evolve"}, {"t_f_ms", num(r.t_f * 1e3)}});
    dens << "x_mm,density_per_mm\n";
    const Wavepacket& wp = runner.last_packet();
    const Eigen::Index block = std::max<Eigen::Index>(1, grid.ssize() / SnapshotWriter::kPoints);
    for (Eigen::Index b = 0; b * block < grid.ssize(); ++b) {
      const double x = grid.x(b * block) + 0.5 * (block - 1) * grid.dx();
      const double rho = wp.psi.segment(b * block, block).cwiseAbs2().mean();
      dens << num(x * 1e3) << ',' << num(rho * 1e-3) << '\n';
    }
  }
  return 0;
}

struct SweepArgs {
  std::string param;
  double min = 0;
  double max = 0;
  int count = 1;
  std::vector<double> values;
  int order = 0;
  int stride = 0;
  std::string cache;
  std::string levels_out;
  bool quiet = false;
};

void add_sweep_options(CLI::App* app, SweepArgs& s, const std::string& default_param) {
  s.param = default_param;
  app->add_option("--param", s.param, "z_c (mm), U1_over_U0, sigma0 (mm), w1 (mm) or v0")
      ->capture_default_str();
  app->add_option("--min", s.min, "first value");
  app->add_option("--max", s.max, "last value");
  app->add_option("--count", s.count, "number of values")->check(CLI::PositiveNumber);
  app->add_option("--values", s.values, "explicit values (override --min/--max/--count)");
  app->add_option("--order", s.order, "quadrature order per axis (default from config)");
  app->add_option("--stride", s.stride, "ladder stride (default from config)");
  app->add_option("--cache", s.cache, "per-propagation result cache file (resumable)");
  app->add_option("--levels-out", s.levels_out, "per-level table for every point");
  app->add_flag("--quiet", s.quiet, "no progress on stderr");
}

int run_sweep_command(const Common& c, const SweepArgs& s, bool energy) {
  const SimulationConfig cfg = resolve(c);
  SweepSpec spec;
  spec.parameter = parse_sweep_parameter(s.param);
  spec.values = s.values.empty() ? linear_values(s.min, s.max, s.count) : s.values;

  std::optional<ResultCache> cache;
  if (!s.cache.empty()) cache.emplace(s.cache);
  EnsembleOptions opts;
  opts.workers = c.workers;
  opts.quadrature_order = s.order > 0 ? s.order : cfg.numerics.quadrature_order;
  opts.ladder_stride = s.stride > 0 ? s.stride : cfg.numerics.ladder_stride;
  opts.cache = cache ? &*cache : nullptr;
  if (!s.quiet) {
    opts.progress = [](const StateResult& r, std::size_t done, std::size_t total) {
      std::fprintf(stderr, "[%zu/%zu] v0=%d z0=%.4g mm P_R=%.6f\n", done, total, r.v0, r.z0 * 1e3,
                   r.probabilities.right);
    };
  }
  const std::vector<SweepPoint> points = run_sweep(cfg, spec, opts);

  std::vector<std::pair<std::string, std::string>> extra = {
      {"command", energy ? "energy-sweep" : "split-sweep"},
      {"sweep_parameter", std::string(sweep_parameter_name(spec.parameter))},
      {"quadrature_order", std::to_string(opts.quadrature_order)},
      {"ladder_stride", std::to_string(opts.ladder_stride)}};
  int failed = 0;
  for (const SweepPoint& p : points) {
    if (p.report) continue;
    ++failed;
    extra.emplace_back("failed_point", num(p.value) + ": " + p.error);
    std::fprintf(stderr, "sweep point %s failed: %s\n", num(p.value).c_str(), p.error.c_str());
  }
  Output out(c.out);
  std::ostream& os = out.stream();
  write_config_block(os, cfg, extra);
  if (spec.parameter == SweepParameter::Level) {
    SplitterReport merged;
    for (const SweepPoint& p : points) merged.levels.push_back(p.report->levels.front());
    write_level_table(os, merged);
  } else if (energy) {
    write_energy_table(os, spec.parameter, points);
  } else {
    write_split_table(os, spec.parameter, points);
  }
  if (!s.levels_out.empty()) {
    std::ofstream lv(s.levels_out);
    if (!lv) throw Error("cannot open " + s.levels_out);
    write_config_block(lv, cfg, extra);
    for (const SweepPoint& p : points) {
      if (!p.report) continue;
      lv << "# point " << sweep_parameter_name(spec.parameter) << " = " << num(p.value) << '\n';
      write_level_table(lv, *p.report);
    }
  }
  return failed == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cold-atom beam splitter simulator"};
  app.require_subcommand(1);

  Common common;

  auto* traj = app.add_subcommand("trajectory", "classical trajectories in the crossed guides");
  add_common(traj, common);
  std::vector<double> x0_mm = {-0.2, 0.0, 0.2};
  double z0_mm = 0;
  double fall_mm_s = 0;
  double t_end_ms = 45;
  int samples = 451;
  traj->add_option("--x0", x0_mm, "initial x positions (mm)")->capture_default_str();
  traj->add_option("--z0", z0_mm, "initial height (mm)");
  traj->add_option("--fall-speed0", fall_mm_s, "initial downward speed (mm/s)");
  traj->add_option("--t-end", t_end_ms, "duration (ms)");
  traj->add_option("--samples", samples, "output samples")->check(CLI::Range(2, 10000000));

  auto* trap = app.add_subcommand("trapping", "trapping probability vs U0/k_B T0");
  add_common(trap, common);
  double ratio_min = 0.1;
  double ratio_max = 30;
  int ratio_count = 60;
  std::vector<double> sigma_ratios = {0.5, 1.5, 2.5};
  trap->add_option("--ratio-min", ratio_min)->check(CLI::PositiveNumber);
  trap->add_option("--ratio-max", ratio_max)->check(CLI::PositiveNumber);
  trap->add_option("--count", ratio_count)->check(CLI::PositiveNumber);
  trap->add_option("--sigma-ratio", sigma_ratios, "sigma0 / w0 values")->capture_default_str();

  auto* levels = app.add_subcommand("levels", "bound levels of the vertical guide and their populations");
  add_common(levels, common);
  int level_stride = 0;
  bool wkb_only = false;
  levels->add_option("--stride", level_stride, "ladder stride (default from config)");
  levels->add_flag("--wkb", wkb_only, "WKB energies instead of Numerov");

  auto* evolve = app.add_subcommand("evolve", "propagate one level from one initial condition");
  add_common(evolve, common);
  int v0 = 6000;
  double ev_z0 = 0;
  double ev_fall = 0;
  std::string snapshot_path;
  std::string density_path;
  evolve->add_option("--v0", v0, "initial vibrational level");
  evolve->add_option("--z0", ev_z0, "initial height (mm)");
  evolve->add_option("--fall-speed0", ev_fall, "initial downward speed (mm/s)");
  evolve->add_option("--snapshots", snapshot_path, "binary snapshot stream path");
  evolve->add_option("--density-out", density_path, "final density on 1024 points (CSV)");

  auto* split = app.add_subcommand("split-sweep", "splitting efficiency over a parameter sweep");
  add_common(split, common);
  SweepArgs split_args;
  add_sweep_options(split, split_args, "z_c");

  auto* energy = app.add_subcommand("energy-sweep", "branch energies over a parameter sweep");
  add_common(energy, common);
  SweepArgs energy_args;
  add_sweep_options(energy, energy_args, "U1_over_U0");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*traj) return run_trajectory(common, x0_mm, z0_mm, fall_mm_s, t_end_ms, samples);
    if (*trap) return run_trapping(common, ratio_min, ratio_max, ratio_count, sigma_ratios);
    if (*levels) return run_levels(common, level_stride, wkb_only);
    if (*evolve) return run_evolve(common, v0, ev_z0, ev_fall, snapshot_path, density_path);
    if (*split) return run_sweep_command(common, split_args, false);
    if (*energy) return run_sweep_command(common, energy_args, true);
  } catch (const ConfigError& e) {
    std::cerr << "config error (" << e.key() << "): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
