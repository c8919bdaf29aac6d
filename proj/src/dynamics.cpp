#include "orbitq/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

double ManyBodyState::norm() const {
  double sum = 0.0;
  for (const auto& a : amplitudes) sum += a.squaredNorm();
  return std::sqrt(sum);
}

std::vector<double> ManyBodyState::sector_weights() const {
  std::vector<double> w;
  for (const auto& a : amplitudes) w.push_back(a.squaredNorm());
  return w;
}

std::complex<double> ManyBodyState::amplitude(std::uint64_t mask) const {
  const int n_up = std::popcount(mask & layout.spin_mask(Spin::Up));
  const int n_down = std::popcount(mask & layout.spin_mask(Spin::Down));
  for (std::size_t k = 0; k < sectors.size(); ++k) {
    if (sectors[k]->n_up != n_up || sectors[k]->n_down != n_down) continue;
    const std::int64_t idx = sectors[k]->find(mask);
    return idx < 0 ? 0.0 : amplitudes[k][idx];
  }
  return 0.0;
}

ManyBodyState prepare_plus_product(int n_sites, int n_orbitals) {
  if (n_sites < 2) throw ConfigError("prepare_plus_product: need at least two sites");
  ManyBodyState state;
  state.layout = {n_sites, n_orbitals};
  if (state.layout.n_modes() > 64) throw ConfigError("prepare_plus_product: more than 64 modes");
  const double amp = std::pow(2.0, -0.5 * n_sites);
  for (int n_down = 0; n_down <= n_sites; ++n_down) {
    auto sector = std::make_shared<SectorBasis>(build_sector(n_sites, n_sites - n_down, n_down, n_orbitals));
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(sector->size());
    state.sectors.push_back(sector);
    state.amplitudes.push_back(std::move(v));
  }
  // Ascending creation order means every term enters with sign +1.
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n_sites); ++bits) {
    std::uint64_t mask = 0;
    for (int i = 0; i < n_sites; ++i) {
      const Spin s = (bits >> i & 1) ? Spin::Down : Spin::Up;
      mask |= std::uint64_t{1} << state.layout.index(i, s, 0);
    }
    const int n_down = std::popcount(bits);
    state.amplitudes[n_down][state.sectors[n_down]->find(mask)] = amp;
  }
  return state;
}

double Schedule::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration_ms;
  return t;
}

std::vector<double> Schedule::event_times() const {
  std::vector<double> out;
  double t = 0.0;
  for (std::size_t k = 0; k + 1 < segments.size(); ++k) {
    t += segments[k].duration_ms;
    out.push_back(t);
  }
  return out;
}

void Schedule::validate() const {
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const double d = segments[k].duration_ms;
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream msg;
      msg << "schedule segment " << k << " has non-positive or non-finite duration " << d << " ms";
      throw ConfigError(msg.str());
    }
    segments[k].cfg.validate();
  }
}

const SingleParticleSolution& ParamsProvider::single_particle(const PhysicalConfig& cfg) {
  const auto key = std::make_pair(cfg.v0_recoil, cfg.n_orbitals);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, solve_single_particle(cfg, numerics_)).first;
  return it->second;
}

std::vector<SparseOperator> hamiltonian_blocks(const HubbardParams& p, const ManyBodyState& state,
                                               InteractionModel model) {
  std::vector<SparseOperator> out(state.sectors.size());
  const int n = static_cast<int>(state.sectors.size());
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < n; ++k) out[k] = assemble_hamiltonian(p, *state.sectors[k], model);
  return out;
}

KrylovStats evolve(ManyBodyState& state, const Schedule& schedule, ParamsProvider& provider,
                   const std::vector<double>& sample_times, const Observer& observer,
                   const EvolveOptions& options) {
  schedule.validate();
  const double total = schedule.total_duration();
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    if (sample_times[k] < 0.0 || sample_times[k] > total * (1 + 1e-12) + 1e-12)
      throw ConfigError("evolve: sample time outside the schedule");
    if (k > 0 && sample_times[k] < sample_times[k - 1]) throw ConfigError("evolve: sample times not sorted");
  }

  KrylovStats stats;
  std::size_t next_sample = 0;
  auto emit_until = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
      if (observer) observer(sample_times[next_sample], state);
      ++next_sample;
    }
  };

  const int n = static_cast<int>(state.sectors.size());
  double now = 0.0;
  emit_until(0.0);
  for (const Segment& seg : schedule.segments) {
    if (seg.cfg.n_sites != state.n_sites() || seg.cfg.n_orbitals != state.layout.n_orbitals)
      throw ConfigError("evolve: segment geometry differs from the state");
    const HubbardParams p = provider(seg.cfg);
    const double rate = recoil_energy(seg.cfg).rate_per_ms();
    const std::vector<SparseOperator> h = hamiltonian_blocks(p, state, options.interaction);
    const double end = now + seg.duration_ms;
    const bool last = &seg == &schedule.segments.back();

    auto advance = [&](double to) {
      const double dt = to - now;
      if (dt <= 0.0) return;
      std::vector<KrylovStats> per(n);
      std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic)
      for (int k = 0; k < n; ++k) {
        try {
          krylov_propagate(h[k], state.amplitudes[k], rate, dt, options.krylov, &per[k]);
        } catch (const std::exception& e) {
          errors[k] = e.what();
        }
      }
      for (int k = 0; k < n; ++k) {
        if (!errors[k].empty()) {
          std::ostringstream msg;
          msg << errors[k] << " [sector (" << state.sectors[k]->n_up << ", " << state.sectors[k]->n_down
              << "), t = " << now << " ms, segment '" << seg.label << "']";
          throw NumericError(msg.str());
        }
        stats.merge(per[k]);
      }
      now = to;
    };

    while (next_sample < sample_times.size() &&
           (sample_times[next_sample] < end || (last && sample_times[next_sample] <= end * (1 + 1e-12) + 1e-12))) {
      advance(std::min(sample_times[next_sample], end));
      emit_until(now);
      // Any remaining samples numerically equal to `now` were emitted above.
    }
    advance(end);
    now = end;
  }
  if (next_sample < sample_times.size() && observer) {
    for (; next_sample < sample_times.size(); ++next_sample) observer(sample_times[next_sample], state);
  }
  return stats;
}

std::vector<ManyBodyState> evolve_snapshots(const ManyBodyState& initial, const Schedule& schedule,
                                            ParamsProvider& provider,
                                            const std::vector<double>& sample_times,
                                            const EvolveOptions& options) {
  ManyBodyState state = initial;
  std::vector<ManyBodyState> out;
  out.reserve(sample_times.size());
  evolve(state, schedule, provider, sample_times,
         [&](double, const ManyBodyState& s) { out.push_back(s); }, options);
  return out;
}

ShiftMethod parse_shift_method(const std::string& name) {
  if (name == "tilt") return ShiftMethod::FlipTilt;
  if (name == "theta") return ShiftMethod::ShiftPhase;
  throw ConfigError("unknown shift method '" + name + "' (expected tilt or theta)");
}

const char* to_string(ShiftMethod method) {
  return method == ShiftMethod::FlipTilt ? "tilt" : "theta";
}

PhysicalConfig shifted_config(const PhysicalConfig& cfg, ShiftMethod method) {
  PhysicalConfig out = cfg;
  if (method == ShiftMethod::FlipTilt)
    out.tilt_recoil = -cfg.tilt_recoil;
  else
    out.theta = cfg.theta + std::numbers::pi;
  return out;
}

Schedule shift_unit_cells(const Schedule& first_round, double shift_time_ms, double second_duration_ms,
                          ShiftMethod method) {
  if (first_round.segments.empty()) throw ConfigError("shift_unit_cells: first round is empty");
  if (!(shift_time_ms > 0.0) || !(second_duration_ms > 0.0))
    throw ConfigError("shift_unit_cells: shift time and second-round duration must be positive");
  Schedule out;
  double t = 0.0;
  for (const Segment& seg : first_round.segments) {
    if (t >= shift_time_ms) break;
    Segment s = seg;
    s.duration_ms = std::min(seg.duration_ms, shift_time_ms - t);
    t += s.duration_ms;
    out.segments.push_back(s);
  }
  if (t < shift_time_ms) out.segments.back().duration_ms += shift_time_ms - t;
  Segment second;
  second.duration_ms = second_duration_ms;
  second.cfg = shifted_config(out.segments.back().cfg, method);
  second.label = "shifted";
  out.segments.push_back(second);
  return out;
}

void write_snapshot(std::ostream& os, const ManyBodyState& state) {
  os.precision(17);
  os << "n_up n_down mask re im\n";
  for (std::size_t k = 0; k < state.sectors.size(); ++k) {
    const auto& basis = *state.sectors[k];
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const auto a = state.amplitudes[k][j];
      if (a == std::complex<double>(0.0)) continue;
      os << basis.n_up << ' ' << basis.n_down << ' ' << basis.states[j] << ' ' << a.real() << ' ' << a.imag() << '\n';
    }
  }
}

}  // namespace orbitq
