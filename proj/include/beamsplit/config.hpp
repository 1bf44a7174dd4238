#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "beamsplit/error.hpp"

namespace beamsplit {

namespace units {
inline constexpr double k_B = 1.380649e-23;          // J/K, exact
inline constexpr double hbar = 1.054571817e-34;      // J s
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg
inline constexpr double micro = 1e-6;
inline constexpr double milli = 1e-3;

/// Energy of X microkelvin, in joules.
constexpr double from_microkelvin(double uK) { return uK * micro * k_B; }
constexpr double to_microkelvin(double joule) { return joule / (micro * k_B); }
}  // namespace units

struct PhysicalConstants {
  double mass = 87.0 * units::atomic_mass;  // kg
  double g = 9.81;                          // m s^-2
  double k_B = units::k_B;
  double hbar = units::hbar;
};

/// Laser guide geometry. All fields SI.
struct GuideConfig {
  double U0 = units::from_microkelvin(30.0);  // vertical depth (J)
  double U1 = units::from_microkelvin(10.0);  // oblique depth (J)
  double w0 = 0.2e-3;                         // vertical waist (m)
  double w1 = 0.3e-3;                         // oblique waist (m)
  double gamma = 0.12;                        // crossing angle (rad)
  double z_c = -4e-3;                         // crossing height (m)
  double t0 = 28.6e-3;                        // oblique switch-on time (s)
  double z_p = -10e-3;                        // probe height (m)
};

struct CloudConfig {
  double sigma0 = 0.30e-3;  // rms cloud size (m)
  double T0 = 14e-6;        // temperature (K)
};

/// Discretisation and run parameters.
struct NumericsConfig {
  double x_min = -1.0e-3;
  double x_max = 2.0e-3;
  int grid_log2 = 18;
  double dt = 40e-6;
  int quadrature_order = 1;  // Gauss-Hermite nodes per axis for (z0, zdot0)
  int ladder_stride = 100;   // every k-th vibrational level
  double numerov_kh = 0.02;  // max k*h on the Numerov fine grid
  int snapshot_every = 0;    // 0 disables snapshots
  double mask_width = 0.0;   // absorbing edge width (m); 0 disables
  bool stationary_start = true;  // skip the trivial V0-only phase before t0
  double ode_rel_tol = 1e-9;
  double ode_abs_tol = 1e-12;

  std::size_t grid_points() const { return std::size_t{1} << grid_log2; }
};

struct SimulationConfig {
  PhysicalConstants constants;
  GuideConfig guide;
  CloudConfig cloud;
  NumericsConfig numerics;
};

/// Checks every invariant; throws ConfigError naming the first offending key.
void validate(const SimulationConfig& cfg);

/// Parses the flat `key = value` format (with `#` comments).
/// Guide and cloud keys are mandatory; constants and numerics fall back to defaults.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::filesystem::path& path);

/// Serialises in interface units; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const SimulationConfig& cfg);

/// Applies one `key = value` override in interface units (used by sweeps and the CLI).
void set_config_value(SimulationConfig& cfg, const std::string& key, double value);
double get_config_value(const SimulationConfig& cfg, const std::string& key);

/// FNV-1a hash of the canonical serialisation.
std::uint64_t config_hash(const SimulationConfig& cfg);
std::string hash_hex(std::uint64_t h);
std::uint64_t fnv1a(const std::string& text, std::uint64_t seed = 1469598103934665603ull);

/// Reference setup: 30/10 uK guides, 0.2/0.3 mm waists, sigma0 = 0.30 mm, T0 = 14 uK.
SimulationConfig default_config();

}  // namespace beamsplit
