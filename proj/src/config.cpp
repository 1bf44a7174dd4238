#include "beamsplit/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

namespace beamsplit {
namespace {

enum class Kind { Real, Integer, Flag };

// One entry per documented key. `scale` converts interface units to SI.
struct KeySpec {
  const char* key;
  bool required;
  Kind kind;
  double scale;
  std::function<double&(SimulationConfig&)> field;
  std::function<int&(SimulationConfig&)> int_field;
  std::function<bool&(SimulationConfig&)> flag_field;
};

const double uK = units::micro * units::k_B;

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = [] {
    std::vector<KeySpec> t;
    auto real = [&t](const char* k, bool req, double scale, auto get) {
      t.push_back({k, req, Kind::Real, scale, get, nullptr, nullptr});
    };
    auto integer = [&t](const char* k, auto get) {
      t.push_back({k, false, Kind::Integer, 1.0, nullptr, get, nullptr});
    };
    real("U0_uK", true, uK, [](SimulationConfig& c) -> double& { return c.guide.U0; });
    real("U1_uK", true, uK, [](SimulationConfig& c) -> double& { return c.guide.U1; });
    real("w0_mm", true, 1e-3, [](SimulationConfig& c) -> double& { return c.guide.w0; });
    real("w1_mm", true, 1e-3, [](SimulationConfig& c) -> double& { return c.guide.w1; });
    real("gamma_rad", true, 1.0, [](SimulationConfig& c) -> double& { return c.guide.gamma; });
    real("zc_mm", true, 1e-3, [](SimulationConfig& c) -> double& { return c.guide.z_c; });
    real("t0_ms", true, 1e-3, [](SimulationConfig& c) -> double& { return c.guide.t0; });
    real("zp_mm", true, 1e-3, [](SimulationConfig& c) -> double& { return c.guide.z_p; });
    real("sigma0_mm", true, 1e-3, [](SimulationConfig& c) -> double& { return c.cloud.sigma0; });
    real("T0_uK", true, 1e-6, [](SimulationConfig& c) -> double& { return c.cloud.T0; });
    real("mass_kg", false, 1.0, [](SimulationConfig& c) -> double& { return c.constants.mass; });
    real("g_ms2", false, 1.0, [](SimulationConfig& c) -> double& { return c.constants.g; });
    real("x_min_mm", false, 1e-3, [](SimulationConfig& c) -> double& { return c.numerics.x_min; });
    real("x_max_mm", false, 1e-3, [](SimulationConfig& c) -> double& { return c.numerics.x_max; });
    integer("grid_log2", [](SimulationConfig& c) -> int& { return c.numerics.grid_log2; });
    real("dt_us", false, 1e-6, [](SimulationConfig& c) -> double& { return c.numerics.dt; });
    integer("quadrature_order", [](SimulationConfig& c) -> int& { return c.numerics.quadrature_order; });
    integer("ladder_stride", [](SimulationConfig& c) -> int& { return c.numerics.ladder_stride; });
    real("numerov_kh", false, 1.0, [](SimulationConfig& c) -> double& { return c.numerics.numerov_kh; });
    integer("snapshot_every", [](SimulationConfig& c) -> int& { return c.numerics.snapshot_every; });
    real("mask_width_mm", false, 1e-3, [](SimulationConfig& c) -> double& { return c.numerics.mask_width; });
    t.push_back({"stationary_start", false, Kind::Flag, 1.0, nullptr, nullptr,
                 [](SimulationConfig& c) -> bool& { return c.numerics.stationary_start; }});
    real("ode_rel_tol", false, 1.0, [](SimulationConfig& c) -> double& { return c.numerics.ode_rel_tol; });
    real("ode_abs_tol_m", false, 1.0, [](SimulationConfig& c) -> double& { return c.numerics.ode_abs_tol; });
    return t;
  }();
  return table;
}

const KeySpec& find_key(const std::string& key) {
  for (const auto& spec : key_table()) {
    if (key == spec.key) return spec;
  }
  throw ConfigError(key, "unknown key");
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key, "unparseable value '" + text + "'");
  if (!std::isfinite(value)) throw ConfigError(key, "non-finite value");
  return value;
}

void assign(SimulationConfig& cfg, const KeySpec& spec, double value) {
  switch (spec.kind) {
    case Kind::Real:
      spec.field(cfg) = value * spec.scale;
      break;
    case Kind::Integer:
      if (value != std::floor(value)) throw ConfigError(spec.key, "expected an integer");
      spec.int_field(cfg) = static_cast<int>(value);
      break;
    case Kind::Flag:
      if (value != 0.0 && value != 1.0) throw ConfigError(spec.key, "expected 0 or 1");
      spec.flag_field(cfg) = value != 0.0;
      break;
  }
}

double read(const SimulationConfig& cfg, const KeySpec& spec) {
  auto& c = const_cast<SimulationConfig&>(cfg);
  switch (spec.kind) {
    case Kind::Real:
      return spec.field(c) / spec.scale;
    case Kind::Integer:
      return spec.int_field(c);
    case Kind::Flag:
      return spec.flag_field(c) ? 1.0 : 0.0;
  }
  return 0.0;
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(key, what);
}

}  // namespace

void validate(const SimulationConfig& cfg) {
  const auto& p = cfg.constants;
  const auto& g = cfg.guide;
  const auto& c = cfg.cloud;
  const auto& n = cfg.numerics;
  require(p.mass > 0, "mass_kg", "must be positive");
  require(p.g > 0, "g_ms2", "must be positive");
  require(p.k_B > 0 && p.hbar > 0, "constants", "must be positive");
  require(g.U0 > 0, "U0_uK", "must be positive");
  require(g.U1 >= 0, "U1_uK", "must be non-negative");
  require(g.w0 > 0, "w0_mm", "must be positive");
  require(g.w1 > 0, "w1_mm", "must be positive");
  require(g.gamma > 0 && g.gamma < std::numbers::pi / 2, "gamma_rad", "must lie in (0, pi/2)");
  require(g.z_c <= 0, "zc_mm", "crossing must not lie above the MOT");
  require(g.z_p < g.z_c, "zp_mm", "probe must lie below the crossing");
  require(g.t0 >= 0, "t0_ms", "must be non-negative");
  require(c.sigma0 > 0, "sigma0_mm", "must be positive");
  require(c.T0 > 0, "T0_uK", "must be positive");
  require(n.x_min < n.x_max, "x_max_mm", "must exceed x_min_mm");
  require(n.grid_log2 >= 4 && n.grid_log2 <= 26, "grid_log2", "must lie in [4, 26]");
  require(n.dt > 0, "dt_us", "must be positive");
  require(n.quadrature_order >= 1, "quadrature_order", "must be at least 1");
  require(n.ladder_stride >= 1, "ladder_stride", "must be at least 1");
  require(n.numerov_kh > 0 && n.numerov_kh < 1, "numerov_kh", "must lie in (0, 1)");
  require(n.snapshot_every >= 0, "snapshot_every", "must be non-negative");
  require(n.mask_width >= 0, "mask_width_mm", "must be non-negative");
  require(n.ode_rel_tol > 0, "ode_rel_tol", "must be positive");
  require(n.ode_abs_tol > 0, "ode_abs_tol_m", "must be positive");
}

SimulationConfig parse_config(const std::string& text) {
  SimulationConfig cfg = default_config();
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeySpec& spec = find_key(key);
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    if (value.empty()) throw ConfigError(key, "missing value");
    assign(cfg, spec, parse_number(key, value));
  }
  for (const auto& spec : key_table()) {
    if (spec.required && !seen.count(spec.key)) throw ConfigError(spec.key, "missing key");
  }
  validate(cfg);
  return cfg;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_config_text(const SimulationConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& spec : key_table()) {
    out << spec.key << " = " << read(cfg, spec) << '\n';
  }
  return out.str();
}

void set_config_value(SimulationConfig& cfg, const std::string& key, double value) {
  assign(cfg, find_key(key), value);
}

double get_config_value(const SimulationConfig& cfg, const std::string& key) {
  return read(cfg, find_key(key));
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t config_hash(const SimulationConfig& cfg) { return fnv1a(to_config_text(cfg)); }

std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

SimulationConfig default_config() { return SimulationConfig{}; }

}  // namespace beamsplit
