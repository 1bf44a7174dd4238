#include "beamsplit/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace beamsplit {

namespace {

constexpr double kMilli = 1e-3;

double to_uk(double joule) { return units::to_microkelvin(joule); }

}  // namespace

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "z_c") return SweepParameter::CrossingHeight;
  if (name == "U1_over_U0") return SweepParameter::DepthRatio;
  if (name == "sigma0") return SweepParameter::CloudSize;
  if (name == "w1") return SweepParameter::ObliqueWaist;
  if (name == "v0") return SweepParameter::Level;
  throw ConfigError(std::string(name), "unknown sweep parameter");
}

std::string_view sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::CrossingHeight: return "z_c";
    case SweepParameter::DepthRatio: return "U1_over_U0";
    case SweepParameter::CloudSize: return "sigma0";
    case SweepParameter::ObliqueWaist: return "w1";
    case SweepParameter::Level: return "v0";
  }
  return "";
}

std::string_view sweep_parameter_unit(SweepParameter p) {
  switch (p) {
    case SweepParameter::CrossingHeight:
    case SweepParameter::CloudSize:
    case SweepParameter::ObliqueWaist: return "mm";
    case SweepParameter::DepthRatio:
    case SweepParameter::Level: return "1";
  }
  return "";
}

std::vector<double> linear_values(double min, double max, int count) {
  if (count < 1) throw ConfigError("count", "sweep needs at least one point");
  if (count == 1) return {min};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = min + (max - min) * i / (count - 1);
  return v;
}

SimulationConfig apply_sweep_value(const SimulationConfig& base, SweepParameter p, double value) {
  SimulationConfig c = base;
  switch (p) {
    case SweepParameter::CrossingHeight: c.guide.z_c = value * kMilli; break;
    case SweepParameter::DepthRatio: c.guide.U1 = value * base.guide.U0; break;
    case SweepParameter::CloudSize: c.cloud.sigma0 = value * kMilli; break;
    case SweepParameter::ObliqueWaist: c.guide.w1 = value * kMilli; break;
    case SweepParameter::Level: break;
  }
  validate(c);
  return c;
}

std::vector<SweepPoint> run_sweep(const SimulationConfig& base, const SweepSpec& spec,
                                  const EnsembleOptions& opts) {
  std::vector<SweepPoint> points;
  if (spec.parameter == SweepParameter::Level) {
    EnsembleOptions o = opts;
    o.levels.clear();
    for (double v : spec.values) {
      if (v != std::floor(v) || v < 0) throw ConfigError("v0", "levels must be non-negative integers");
      o.levels.push_back(static_cast<int>(v));
    }
    SplitterReport report = run_ensemble(base, o);
    const std::size_t nodes = report.states.size() / report.levels.size();
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
      SplitterReport single;
      single.p_trap = report.p_trap;
      single.level_count = report.level_count;
      single.levels = {report.levels[i]};
      single.states.assign(report.states.begin() + static_cast<long>(i * nodes),
                           report.states.begin() + static_cast<long>((i + 1) * nodes));
      single.totals = aggregate(single.levels, single.p_trap);
      points.push_back({spec.values[i], base, std::move(single), {}});
    }
    return points;
  }
  for (double value : spec.values) {
    SweepPoint point;
    point.value = value;
    try {
      point.config = apply_sweep_value(base, spec.parameter, value);
      point.report = run_ensemble(point.config, opts);
    } catch (const std::exception& e) {
      point.error = e.what();
    }
    points.push_back(std::move(point));
  }
  return points;
}

// --- CSV ------------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_config_block(std::ostream& out, const SimulationConfig& cfg,
                        const std::vector<std::pair<std::string, std::string>>& extra) {
  std::istringstream text(to_config_text(cfg));
  std::string line;
  while (std::getline(text, line)) {
    if (line.empty() || line.front() == '#') continue;
    out << "# " << line << '\n';
  }
  out << "# config_hash = " << hash_hex(config_hash(cfg)) << '\n';
  for (const auto& [k, v] : extra) out << "# " << k << " = " << v << '\n';
}

void write_state_table(std::ostream& out, const std::vector<StateResult>& states) {
  out << "v0,level_energy_uK,z0_mm,fall_speed0_mm_s,t_f_ms,x_b_mm,oblique_center_mm,P_R,P_0,leak,"
         "E0_uK,E1_uK,partition_shift,norm_drift,max_edge_ratio,steps\n";
  for (const StateResult& s : states) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double e0 = s.e_vertical.population > 0 ? s.e_vertical.mean() : nan;
    const double e1 = s.e_oblique ? s.e_oblique->mean() : nan;
    out << s.v0 << ',' << format_number(to_uk(s.level_energy)) << ',' << format_number(s.z0 / kMilli)
        << ',' << format_number(s.fall_speed0 / kMilli) << ',' << format_number(s.t_f / kMilli) << ','
        << format_number(s.boundary / kMilli) << ',' << format_number(s.oblique_center / kMilli) << ','
        << format_number(s.probabilities.right) << ',' << format_number(s.probabilities.vertical)
        << ',' << format_number(s.probabilities.leak) << ',' << format_number(to_uk(e0)) << ','
        << format_number(to_uk(e1)) << ',' << format_number(s.partition_shift) << ','
        << format_number(s.norm_drift) << ',' << format_number(s.max_edge_ratio) << ',' << s.steps
        << '\n';
  }
}

void write_level_table(std::ostream& out, const SplitterReport& report) {
  out << "v0,ladder_weight,P_v0,mean_P_R,mean_P_0,P_s_v0,E0_uK,E1_uK\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const LevelAverages& l : report.levels) {
    out << l.v0 << ',' << format_number(l.ladder_weight) << ',' << format_number(l.population) << ','
        << format_number(l.mean_right) << ',' << format_number(l.mean_vertical) << ','
        << format_number(splitting_per_state(l.population, l.mean_right)) << ','
        << format_number(l.mean_vertical > 0 ? to_uk(l.e_vertical / l.mean_vertical) : nan) << ','
        << format_number(l.mean_right > 1e-6 ? to_uk(l.e_oblique / l.mean_right) : nan) << '\n';
  }
}

void write_split_table(std::ostream& out, SweepParameter p, const std::vector<SweepPoint>& points) {
  out << sweep_parameter_name(p) << '_' << sweep_parameter_unit(p)
      << ",P_s,P_s_level_sum,P_trap,mean_v0_oblique,truncation,max_leak,max_partition_shift,"
         "max_edge_ratio,levels,states\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepPoint& pt : points) {
    if (!pt.report) continue;
    const SplitterReport& r = *pt.report;
    out << format_number(pt.value) << ',' << format_number(r.totals.splitting) << ','
        << format_number(r.totals.splitting_level_sum) << ',' << format_number(r.p_trap) << ','
        << format_number(r.totals.mean_level_oblique.value_or(nan)) << ','
        << format_number(r.totals.truncation) << ',' << format_number(r.max_leak) << ','
        << format_number(r.max_partition_shift) << ',' << format_number(r.max_edge_ratio) << ','
        << r.levels.size() << ',' << r.states.size() << '\n';
  }
}

void write_energy_table(std::ostream& out, SweepParameter p, const std::vector<SweepPoint>& points) {
  out << sweep_parameter_name(p) << '_' << sweep_parameter_unit(p)
      << ",E0_uK,E1_uK,E_uK,P_s,max_partition_shift\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const SweepPoint& pt : points) {
    if (!pt.report) continue;
    const Aggregates& a = pt.report->totals;
    out << format_number(pt.value) << ',' << format_number(to_uk(a.e_vertical)) << ','
        << format_number(a.e_oblique ? to_uk(*a.e_oblique) : nan) << ','
        << format_number(to_uk(a.e_total)) << ',' << format_number(a.splitting) << ','
        << format_number(pt.report->max_partition_shift) << '\n';
  }
}

}  // namespace beamsplit
