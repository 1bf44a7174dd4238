#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "beamsplit/config.hpp"
#include "beamsplit/splitter.hpp"

namespace beamsplit {

enum class SweepParameter { CrossingHeight, DepthRatio, CloudSize, ObliqueWaist, Level };

/// Accepts z_c, U1_over_U0, sigma0, w1 and v0; throws ConfigError otherwise.
SweepParameter parse_sweep_parameter(std::string_view name);
std::string_view sweep_parameter_name(SweepParameter p);
/// Unit of the values as given on the command line and written to CSV.
std::string_view sweep_parameter_unit(SweepParameter p);

struct SweepSpec {
  SweepParameter parameter = SweepParameter::CrossingHeight;
  std::vector<double> values;  // interface units (mm, ratio, level index)
};

/// count points from min to max inclusive.
std::vector<double> linear_values(double min, double max, int count);

/// Base configuration with the swept parameter set; the level sweep leaves it unchanged.
SimulationConfig apply_sweep_value(const SimulationConfig& base, SweepParameter p, double value);

struct SweepPoint {
  double value = 0;
  SimulationConfig config;
  std::optional<SplitterReport> report;
  std::string error;
};

/// One ensemble per point (levels run in parallel within it). A level sweep runs a single
/// ensemble over the listed levels and yields one point per level. Failures are recorded
/// per point.
std::vector<SweepPoint> run_sweep(const SimulationConfig& base, const SweepSpec& spec,
                                  const EnsembleOptions& opts);

// --- CSV ------------------------------------------------------------------------------

/// "# key = value" lines for the resolved config, its hash and any extra entries.
void write_config_block(std::ostream& out, const SimulationConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extra = {});

std::string format_number(double v);

void write_state_table(std::ostream& out, const std::vector<StateResult>& states);
void write_level_table(std::ostream& out, const SplitterReport& report);
void write_split_table(std::ostream& out, SweepParameter p, const std::vector<SweepPoint>& points);
void write_energy_table(std::ostream& out, SweepParameter p, const std::vector<SweepPoint>& points);

}  // namespace beamsplit
