#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "beamsplit/sweep.hpp"
#include "support.hpp"

using namespace beamsplit;

namespace {

SimulationConfig small_config() {
  SimulationConfig cfg;
  cfg.guide.U0 = units::from_microkelvin(0.05);
  cfg.guide.U1 = units::from_microkelvin(0.04);
  cfg.numerics.x_min = -0.3e-3;
  cfg.numerics.x_max = 1.2e-3;
  cfg.numerics.grid_log2 = 12;
  cfg.numerics.dt = 200e-6;
  return cfg;
}

std::vector<std::string> serialized(const SplitterReport& r) {
  std::vector<std::string> out;
  for (const StateResult& s : r.states) out.push_back(serialize(s));
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

std::vector<std::string> lines_of(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("sweep parameter names") {
  for (auto name : {"z_c", "U1_over_U0", "sigma0", "w1", "v0"}) {
    CHECK(sweep_parameter_name(parse_sweep_parameter(name)) == name);
  }
  CHECK(sweep_parameter_unit(SweepParameter::CrossingHeight) == "mm");
  CHECK(sweep_parameter_unit(SweepParameter::DepthRatio) == "1");
  CHECK_THROWS_AS(parse_sweep_parameter("T0"), ConfigError);
}

TEST_CASE("linear sweep values") {
  const std::vector<double> v = linear_values(-6.0, -2.0, 5);
  REQUIRE(v.size() == 5);
  CHECK(v.front() == -6.0);
  CHECK(v.back() == -2.0);
  CHECK(v[2] == -4.0);
  CHECK(linear_values(1.5, 9.0, 1) == std::vector<double>{1.5});
  CHECK_THROWS_AS(linear_values(0, 1, 0), ConfigError);
}

TEST_CASE("sweep values land in SI fields") {
  const SimulationConfig base;
  CHECK(close_rel(apply_sweep_value(base, SweepParameter::CrossingHeight, -5.2).guide.z_c, -5.2e-3, 1e-15));
  CHECK(close_rel(apply_sweep_value(base, SweepParameter::DepthRatio, 0.75).guide.U1, 0.75 * base.guide.U0, 1e-15));
  CHECK(close_rel(apply_sweep_value(base, SweepParameter::CloudSize, 0.45).cloud.sigma0, 0.45e-3, 1e-15));
  CHECK(close_rel(apply_sweep_value(base, SweepParameter::ObliqueWaist, 0.25).guide.w1, 0.25e-3, 1e-15));
  CHECK(config_hash(apply_sweep_value(base, SweepParameter::Level, 300)) == config_hash(base));
  CHECK_THROWS_AS(apply_sweep_value(base, SweepParameter::ObliqueWaist, -0.1), ConfigError);
}

TEST_CASE("csv header block carries the resolved config") {
  SimulationConfig cfg = small_config();
  cfg.guide.gamma = 0.1;
  std::ostringstream out;
  write_config_block(out, cfg, {{"subcommand", "test"}});
  const std::string text = out.str();
  CHECK(text.find("# config_hash = " + hash_hex(config_hash(cfg)) + "\n") != std::string::npos);
  CHECK(text.find("# subcommand = test\n") != std::string::npos);
  // stripping the comment markers gives back the same config
  std::istringstream in(text);
  std::string body;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("# config_hash", 0) == 0 || line.rfind("# subcommand", 0) == 0) continue;
    body += line.substr(2) + "\n";
  }
  CHECK(config_hash(parse_config(body)) == config_hash(cfg));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("state results serialise exactly") {
  StateResult r;
  r.v0 = 6000;
  r.level_energy = -1.234567890123e-29;
  r.z0 = 1e-4 / 3;
  r.fall_speed0 = -2.5e-2;
  r.t_f = 0.0451524;
  r.boundary = 3.6e-4;
  r.boundary_method = 1;
  r.oblique_center = 7.2347e-4;
  r.probabilities = {0.27756912345, 0.72243, 1e-15};
  r.e_vertical = {1.1e-28, 0.7};
  r.partition_shift = 3e-9;
  r.norm_drift = -1e-14;
  r.max_edge_ratio = 2e-14;
  r.steps = 414;
  const StateResult back = deserialize_state(serialize(r));
  CHECK(serialize(back) == serialize(r));
  CHECK_FALSE(back.e_oblique.has_value());
  r.e_oblique = BranchEnergy{2e-29, 0.27};
  const StateResult with_oblique = deserialize_state(serialize(r));
  REQUIRE(with_oblique.e_oblique.has_value());
  CHECK(with_oblique.e_oblique->integral == 2e-29);
  CHECK(with_oblique.steps == 414);
  CHECK_THROWS_AS(deserialize_state("1,2,x"), Error);
}

TEST_CASE("ensemble results do not depend on the worker count") {
  const SimulationConfig cfg = small_config();
  EnsembleOptions opts;
  opts.levels = {150, 320};
  opts.quadrature_order = 2;
  opts.workers = 1;
  const SplitterReport serial = run_ensemble(cfg, opts);
  opts.workers = 3;
  const SplitterReport parallel = run_ensemble(cfg, opts);
  REQUIRE(serial.states.size() == 8);
  CHECK(serialized(serial) == serialized(parallel));
  CHECK(serial.totals.splitting == parallel.totals.splitting);
  CHECK(serial.max_edge_ratio < 1e-8);
  CHECK(serial.max_leak < 1e-6);
}

TEST_CASE("an interrupted run resumes from its cache") {
  const SimulationConfig cfg = small_config();
  const auto file = temp_file("beamsplit_test_cache.tsv");
  EnsembleOptions opts;
  opts.levels = {100, 250, 400};
  SplitterReport fresh;
  {
    ResultCache cache(file);
    opts.cache = &cache;
    fresh = run_ensemble(cfg, opts);
    CHECK(cache.size() == 3);
  }
  // keep one finished line and tear the next one
  const std::vector<std::string> lines = lines_of(file);
  REQUIRE(lines.size() == 3);
  {
    std::ofstream out(file, std::ios::trunc);
    out << lines[0] << '\n' << lines[1].substr(0, 10);
  }
  std::size_t computed = 0;
  ResultCache cache(file);
  CHECK(cache.size() == 1);
  opts.cache = &cache;
  opts.progress = [&](const StateResult&, std::size_t, std::size_t) { ++computed; };
  const SplitterReport resumed = run_ensemble(cfg, opts);
  CHECK(computed == 3);
  CHECK(serialized(resumed) == serialized(fresh));
  CHECK(cache.size() == 3);

  // a different config does not hit the cache
  SimulationConfig other = cfg;
  other.guide.z_c = -3e-3;
  CHECK(ResultCache::key(other, 100, 0, 0) != ResultCache::key(cfg, 100, 0, 0));
  SimulationConfig reordered = cfg;
  reordered.numerics.quadrature_order = 5;
  reordered.cloud.T0 = 20e-6;
  CHECK(ResultCache::key(reordered, 100, 0, 0) == ResultCache::key(cfg, 100, 0, 0));
  std::filesystem::remove(file);
}

TEST_CASE("a single-point sweep equals a direct run") {
  const SimulationConfig cfg = small_config();
  EnsembleOptions opts;
  opts.levels = {200};
  const SplitterReport direct = run_ensemble(cfg, opts);
  const std::vector<SweepPoint> points =
      run_sweep(cfg, SweepSpec{SweepParameter::CrossingHeight, {cfg.guide.z_c * 1e3}}, opts);
  REQUIRE(points.size() == 1);
  REQUIRE(points[0].report.has_value());
  CHECK(serialized(*points[0].report) == serialized(direct));
}

TEST_CASE("level sweeps and per-point failures") {
  const SimulationConfig cfg = small_config();
  EnsembleOptions opts;
  const std::vector<SweepPoint> levels = run_sweep(cfg, SweepSpec{SweepParameter::Level, {50, 350}}, opts);
  REQUIRE(levels.size() == 2);
  CHECK(levels[1].report->levels.at(0).v0 == 350);
  CHECK(levels[1].report->states.at(0).v0 == 350);
  CHECK_THROWS_AS(run_sweep(cfg, SweepSpec{SweepParameter::Level, {2.5}}, opts), ConfigError);

  opts.levels = {50};
  const std::vector<SweepPoint> mixed =
      run_sweep(cfg, SweepSpec{SweepParameter::ObliqueWaist, {0.3, -1.0}}, opts);
  REQUIRE(mixed.size() == 2);
  CHECK(mixed[0].report.has_value());
  CHECK(mixed[0].error.empty());
  CHECK_FALSE(mixed[1].report.has_value());
  CHECK_FALSE(mixed[1].error.empty());

  std::ostringstream split, energy;
  write_split_table(split, SweepParameter::ObliqueWaist, mixed);
  write_energy_table(energy, SweepParameter::ObliqueWaist, mixed);
  CHECK(split.str().rfind("w1_mm,P_s,", 0) == 0);
  CHECK(energy.str().rfind("w1_mm,E0_uK,E1_uK,E_uK,P_s,max_partition_shift\n", 0) == 0);
}

TEST_CASE("the full ladder folds unresolved top levels into the highest that fits") {
  const SimulationConfig cfg = small_config();
  const GaussianWell well = GaussianWell::from(cfg);
  const int count = count_bound_states(well);
  const int top = highest_fitting_level(well, make_grid(cfg), count);
  CHECK(top < count);
  CHECK_NOTHROW(solve_level(well, top, make_grid(cfg)));
  if (top + 1 < count) CHECK_THROWS_AS(solve_level(well, top + 1, make_grid(cfg)), EigenError);

  EnsembleOptions opts;
  opts.ladder_stride = 150;
  opts.workers = 4;
  const SplitterReport report = run_ensemble(cfg, opts);
  CHECK(report.top_level == top);
  CHECK(report.levels.back().v0 == top);
  double weight = 0;
  for (const LevelAverages& l : report.levels) weight += l.ladder_weight;
  CHECK(close_rel(weight, count, 1e-14));
  CHECK(report.level_count == count);
  CHECK(close_rel(report.p_trap, trapping_probability(cfg).value, 1e-15));

  std::ostringstream table;
  write_level_table(table, report);
  write_state_table(table, report.states);
  CHECK(table.str().find("v0,level_energy_uK,z0_mm") != std::string::npos);
}
