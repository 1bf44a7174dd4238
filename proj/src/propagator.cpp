#include "beamsplit/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "beamsplit/potentials.hpp"

namespace beamsplit {

using namespace std::complex_literals;

double FallPath::height(double t, double g) const {
  return frozen_z ? *frozen_z : free_fall_height(t, z0, fall_speed0, g);
}

double FallPath::speed(double t, double g) const {
  return frozen_z ? 0.0 : free_fall_speed(t, fall_speed0, g);
}

double Wavepacket::edge_ratio() const {
  const double peak = psi.cwiseAbs().maxCoeff();
  if (peak == 0.0) return 0.0;
  return std::max(std::abs(psi[0]), std::abs(psi[psi.size() - 1])) / peak;
}

Wavepacket prepare_initial(const EigenFunction& level, const Grid1D& grid, const FallPath& path) {
  if (level.samples.size() != grid.ssize()) throw PropagationError("eigenfunction/grid size mismatch");
  Wavepacket wp{grid, level.samples.cast<std::complex<double>>(), 0.0, level.v, path, level.energy};
  if (wp.edge_ratio() > 1e-8) {
    throw PropagationError("level " + std::to_string(level.v) + " is clipped by the grid edges");
  }
  return wp;
}

Propagator::Propagator(const SimulationConfig& cfg, const Grid1D& grid)
    : cfg_(cfg), grid_(grid), fft_(grid.size()) {
  x_ = grid_.positions();
  k2_ = grid_.wavenumbers().square();
  v0_ = x_.unaryExpr([&](double x) { return vertical_potential(x, cfg_.guide); });
  const double hbar = cfg_.constants.hbar;
  v0_phase_dt_ = (-1i * v0_ * (cfg_.numerics.dt / hbar)).exp();
  if (cfg_.numerics.mask_width > 0) {
    const double w = cfg_.numerics.mask_width;
    mask_ = x_.unaryExpr([&](double x) {
      const double d = std::min(x - grid_.x_min(), grid_.x_max() - x);
      if (d >= w) return 1.0;
      return std::pow(std::cos(0.5 * M_PI * (w - d) / w), 0.125);
    });
  }
}

const Eigen::ArrayXcd& Propagator::kinetic_factor(double tau) {
  const double dt = cfg_.numerics.dt;
  const int slot = tau == dt ? 0 : (tau == 0.5 * dt ? 1 : -1);
  auto build = [&](Eigen::ArrayXcd& out) {
    const double c = cfg_.constants.hbar * tau / (2.0 * cfg_.constants.mass);
    out = (-1i * c * k2_).exp();
  };
  if (slot < 0) {
    build(kinetic_scratch_);
    return kinetic_scratch_;
  }
  if (cached_tau_[slot] != tau) {
    build(kinetic_cache_[slot]);
    cached_tau_[slot] = tau;
  }
  return kinetic_cache_[slot];
}

void Propagator::kinetic(Eigen::VectorXcd& psi, double tau) {
  if (tau == 0.0) return;
  fft_.forward(psi);
  psi.array() *= kinetic_factor(tau);
  fft_.inverse(psi);
}

void Propagator::potential_phase(Wavepacket& wp, double t_mid, double dt) {
  const double hbar = cfg_.constants.hbar;
  if (dt == cfg_.numerics.dt) {
    wp.psi.array() *= v0_phase_dt_;
  } else {
    wp.psi.array() *= (-1i * v0_ * (dt / hbar)).exp();
  }
  const GuideConfig& g = cfg_.guide;
  if (oblique_on(t_mid, g) && g.U1 > 0.0) {
    const double z = wp.path.height(t_mid, cfg_.constants.g);
    const double c = std::cos(g.gamma);
    const double s = std::sin(g.gamma);
    // Beyond |x'| = 4.5 w1 the phase is below 3e-18 U1 dt / hbar.
    const double reach = 4.5 * g.w1;
    const double shift = (z - g.z_c) * s;
    const Eigen::Index lo = grid_.index_at_or_above((-reach - shift) / c);
    const Eigen::Index hi = grid_.index_at_or_above((reach - shift) / c);
    const double inv_w2 = 2.0 / (g.w1 * g.w1);
    const double scale = g.U1 * dt / hbar;
    const Eigen::Index n = hi - lo;
    if (n > 0) {
      profile_ = (-inv_w2 * (x_.segment(lo, n) * c + shift).square()).exp();
      if (dt == cfg_.numerics.dt) {
        apply_tabulated_phase(wp.psi.segment(lo, n), scale);
      } else {
        for (Eigen::Index j = 0; j < n; ++j) wp.psi[lo + j] *= std::polar(1.0, scale * profile_[j]);
      }
    }
  }
  apply_mask(wp.psi);
}

void Propagator::apply_tabulated_phase(Eigen::Ref<Eigen::VectorXcd> psi, double scale) {
  constexpr int kTable = 1 << 16;
  if (phase_table_scale_ != scale) {
    phase_table_.resize(kTable + 1);
    for (int i = 0; i <= kTable; ++i) phase_table_[i] = std::polar(1.0, scale * i / kTable);
    phase_table_scale_ = scale;
  }
  // exp(i A (u_i + d)) = table[i] exp(i A d) with |A d| <= A / 2^17; the series is cut
  // after the fourth power.
  const double step = scale / kTable;
  for (Eigen::Index j = 0; j < psi.size(); ++j) {
    const double u = profile_[j] * kTable;  // in [0, kTable]
    const auto i = static_cast<std::size_t>(u + 0.5);
    const double a = (u - static_cast<double>(i)) * step;
    const double a2 = a * a;
    const double cr = 1.0 - a2 * (0.5 - a2 / 24.0);
    const double ci = a * (1.0 - a2 / 6.0);
    // written out: std::complex products carry NaN-recovery calls
    const double tr = phase_table_[i].real() * cr - phase_table_[i].imag() * ci;
    const double ti = phase_table_[i].real() * ci + phase_table_[i].imag() * cr;
    const double pr = psi[j].real();
    const double pi = psi[j].imag();
    psi[j] = {pr * tr - pi * ti, pr * ti + pi * tr};
  }
}

void Propagator::apply_mask(Eigen::VectorXcd& psi) const {
  if (mask_.size() == psi.size()) psi.array() *= mask_;
}

void Propagator::step(Wavepacket& wp, double dt) {
  if (!(dt > 0)) throw PropagationError("time step must be positive");
  kinetic(wp.psi, 0.5 * dt);
  potential_phase(wp, wp.t + 0.5 * dt, dt);
  kinetic(wp.psi, 0.5 * dt);
  wp.t += dt;
  wp.stationary_energy.reset();
}

PropagationStats Propagator::propagate_to(Wavepacket& wp, double t_end, const SnapshotSink& sink,
                                          int snapshot_every) {
  const double dt = cfg_.numerics.dt;
  const double g = cfg_.constants.g;
  const double t0 = cfg_.guide.t0;
  PropagationStats stats;
  stats.t_start = wp.t;
  stats.norm_initial = wp.norm();
  stats.max_edge_ratio = wp.edge_ratio();
  const bool snapshots = sink && snapshot_every > 0;
  long step_index = 0;  // counts nominal steps, including skipped stationary ones

  if (snapshots) sink(wp, wp.path.height(wp.t, g));

  // Before the switch-on the potential is V0 alone; an eigenstate of V0 only picks up
  // a global phase there.
  if (wp.stationary_energy && cfg_.numerics.stationary_start && wp.t < t0 && t_end > wp.t) {
    const double t_jump = std::min(t0, t_end);
    if (snapshots) {
      const double t_begin = wp.t;
      for (double t = t_begin + dt; t < t_jump - 1e-12 * dt; t += dt) {
        ++step_index;
        if (step_index % snapshot_every == 0) {
          wp.t = t;
          sink(wp, wp.path.height(t, g));
        }
      }
      ++step_index;
    }
    wp.psi *= std::polar(1.0, -*wp.stationary_energy * (t_jump - wp.t) / cfg_.constants.hbar);
    wp.t = t_jump;
    if (snapshots && step_index % snapshot_every == 0) sink(wp, wp.path.height(wp.t, g));
  }

  std::vector<double> boundaries;
  if (wp.t < t0 && t0 < t_end) boundaries.push_back(t0);
  if (t_end > wp.t) boundaries.push_back(t_end);

  double pending = 0.0;  // deferred half kinetic step
  for (double boundary : boundaries) {
    const double span = boundary - wp.t;
    const long n = std::max<long>(1, static_cast<long>(std::ceil(span / dt - 1e-9)));
    for (long i = 0; i < n; ++i) {
      const double h = (i + 1 < n) ? dt : boundary - wp.t;
      if (!(h > 0)) continue;
      kinetic(wp.psi, pending + 0.5 * h);
      potential_phase(wp, wp.t + 0.5 * h, h);
      pending = 0.5 * h;
      wp.t = (i + 1 < n) ? wp.t + h : boundary;
      wp.stationary_energy.reset();
      ++stats.steps;
      ++step_index;
      if ((stats.steps & 63) == 0) stats.max_edge_ratio = std::max(stats.max_edge_ratio, wp.edge_ratio());
      if (snapshots && step_index % snapshot_every == 0) {
        kinetic(wp.psi, pending);
        pending = 0.0;
        sink(wp, wp.path.height(wp.t, g));
      }
    }
  }
  kinetic(wp.psi, pending);
  stats.t_end = wp.t;
  stats.norm_final = wp.norm();
  stats.max_edge_ratio = std::max(stats.max_edge_ratio, wp.edge_ratio());
  return stats;
}

double Propagator::probe_time(const FallPath& path) const {
  if (path.frozen_z) throw PropagationError("a frozen path never reaches the probe");
  const auto t = arrival_time(cfg_.guide.z_p, path.z0, path.fall_speed0, cfg_.constants.g);
  if (!t) throw PropagationError("probe height is unreachable from this initial condition");
  return *t;
}

PropagationStats Propagator::propagate_to_probe(Wavepacket& wp, const SnapshotSink& sink,
                                                int snapshot_every) {
  return propagate_to(wp, probe_time(wp.path), sink, snapshot_every);
}

Eigen::ArrayXd Propagator::potential(double t, const FallPath& path) const {
  const double z = path.height(t, cfg_.constants.g);
  return x_.unaryExpr([&](double x) { return guide_potential_2d(x, z, t, cfg_.guide); });
}

Eigen::VectorXcd Propagator::apply_hamiltonian(const Eigen::VectorXcd& psi, const Eigen::ArrayXd& v) {
  Eigen::VectorXcd t_psi = psi;
  fft_.forward(t_psi);
  t_psi.array() *= k2_ * (cfg_.constants.hbar * cfg_.constants.hbar / (2.0 * cfg_.constants.mass));
  fft_.inverse(t_psi);
  t_psi.array() += v * psi.array();
  return t_psi;
}

double Propagator::energy(const Eigen::VectorXcd& psi, const Eigen::ArrayXd& v) {
  return psi.dot(apply_hamiltonian(psi, v)).real() * grid_.dx();
}

// --- snapshots ------------------------------------------------------------------

SnapshotWriter::SnapshotWriter(const std::filesystem::path& path, const Grid1D& grid)
    : out_(path, std::ios::binary) {
  if (!out_) throw Error("cannot open snapshot file " + path.string());
  const char magic[8] = {'B', 'S', 'N', 'A', 'P', '0', '0', '1'};
  const std::uint32_t points = kPoints;
  const std::uint32_t reserved = 0;
  const double x_min = grid.x_min();
  const double x_max = grid.x_max();
  out_.write(magic, 8);
  out_.write(reinterpret_cast<const char*>(&points), sizeof points);
  out_.write(reinterpret_cast<const char*>(&reserved), sizeof reserved);
  out_.write(reinterpret_cast<const char*>(&x_min), sizeof x_min);
  out_.write(reinterpret_cast<const char*>(&x_max), sizeof x_max);
}

void SnapshotWriter::write(const Wavepacket& wp, double z) {
  const Eigen::Index n = wp.psi.size();
  const Eigen::Index block = std::max<Eigen::Index>(1, n / kPoints);
  std::vector<double> record(2 + kPoints, 0.0);
  record[0] = wp.t;
  record[1] = z;
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(kPoints); ++b) {
    const Eigen::Index first = b * block;
    if (first >= n) break;
    const Eigen::Index count = std::min(block, n - first);
    record[2 + b] = wp.psi.segment(first, count).cwiseAbs2().mean();
  }
  out_.write(reinterpret_cast<const char*>(record.data()),
             static_cast<std::streamsize>(record.size() * sizeof(double)));
  ++records_;
}

SnapshotSink SnapshotWriter::sink() {
  return [this](const Wavepacket& wp, double z) { write(wp, z); };
}

std::vector<SnapshotRecord> read_snapshots(const std::filesystem::path& path, double* x_min,
                                           double* x_max) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot file " + path.string());
  char magic[8];
  std::uint32_t points = 0;
  std::uint32_t reserved = 0;
  double lo = 0;
  double hi = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&points), sizeof points);
  in.read(reinterpret_cast<char*>(&reserved), sizeof reserved);
  in.read(reinterpret_cast<char*>(&lo), sizeof lo);
  in.read(reinterpret_cast<char*>(&hi), sizeof hi);
  if (!in || std::memcmp(magic, "BSNAP001", 8) != 0) throw Error("not a snapshot file");
  if (x_min) *x_min = lo;
  if (x_max) *x_max = hi;
  std::vector<SnapshotRecord> records;
  std::vector<double> buf(2 + points);
  while (in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(double)))) {
    records.push_back({buf[0], buf[1], std::vector<double>(buf.begin() + 2, buf.end())});
  }
  return records;
}

}  // namespace beamsplit
