#include "orbitq/protocol.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "orbitq/error.hpp"

namespace orbitq {

std::vector<double> sample_grid(double duration_ms, double interval_ms) {
  if (!(interval_ms > 0.0)) throw ConfigError("sample interval must be positive");
  if (duration_ms < 0.0) throw ConfigError("duration must be non-negative");
  std::vector<double> t;
  const long n = std::lround(std::floor(duration_ms / interval_ms + 1e-9));
  for (long k = 0; k <= n; ++k) t.push_back(k * interval_ms);
  if (duration_ms - t.back() > 1e-9 * interval_ms) t.push_back(duration_ms);
  return t;
}

TraceRun run_trace(ManyBodyState state, const Schedule& schedule, ParamsProvider& provider,
                   const RunNumerics& numerics, const TargetSelector& target,
                   const std::vector<double>& sample_times) {
  const std::vector<double> weights0 = state.sector_weights();
  TraceRun run;
  run.stats = evolve(
      state, schedule, provider, sample_times,
      [&](double t, const ManyBodyState& s) {
        run.trace.record(t, s, target(t));
        run.max_norm_drift = std::max(run.max_norm_drift, std::abs(s.norm() - 1.0));
        const auto w = s.sector_weights();
        for (std::size_t k = 0; k < w.size(); ++k)
          run.max_sector_drift = std::max(run.max_sector_drift, std::abs(w[k] - weights0[k]));
      },
      numerics.evolve);
  return run;
}

TraceRun run_trace(const PhysicalConfig& geometry, const Schedule& schedule, ParamsProvider& provider,
                   const RunNumerics& numerics, const TargetState& target) {
  return run_trace(prepare_plus_product(geometry.n_sites, geometry.n_orbitals), schedule, provider, numerics,
                   [&](double) -> const TargetState& { return target; },
                   sample_grid(schedule.total_duration(), numerics.sample_interval_ms));
}

double optimal_detuning(double coupling_recoil) { return 2.0 * std::abs(coupling_recoil) / std::sqrt(3.0); }

double cell_gate_time_ms(double coupling_recoil, const RecoilEnergy& recoil) {
  return std::numbers::pi / optimal_detuning(coupling_recoil) / recoil.rate_per_ms();
}

RetuneResult retune_cell(PhysicalConfig& cfg, ParamsProvider& provider, const RetuneRequest& request) {
  const SingleParticleSolution& sp = provider.single_particle(cfg);
  const HubbardParams p = compute_params(sp, cfg);
  if (request.bond < 0 || request.bond >= p.n_bonds()) throw ConfigError("retune: bond out of range");
  RetuneResult r;
  r.coupling_recoil = perturbative_ising(p, 0.0).bonds[request.bond].active().coupling;
  r.target_recoil = std::isnan(request.target_recoil)
                        ? (request.detuning_sign < 0 ? -1.0 : 1.0) * optimal_detuning(r.coupling_recoil)
                        : request.target_recoil;
  if (request.knob == ResonanceKnob::SuperlatticeDepth && sp.wannier.n_bands() < cfg.n_orbitals)
    throw ConfigError("retune: missing orbitals");
  const ResonanceResult root =
      find_resonance(request.knob, request.bond, cfg, sp, request.lo, request.hi, r.target_recoil);
  r.knob_value = root.knob_value;
  r.residual = root.residual;
  r.iterations = root.iterations;
  if (request.knob == ResonanceKnob::ScatteringLength)
    cfg.scattering_length_m = root.knob_value;
  else
    cfg.v0p_recoil = root.knob_value;
  return r;
}

CellCalibration calibrate_cell(const PhysicalConfig& cfg, ParamsProvider& provider, const RunNumerics& numerics,
                               double max_ms) {
  if (cfg.n_sites != 2) throw ConfigError("calibrate_cell: expects a two-site configuration");
  Schedule s;
  s.segments.push_back({max_ms, cfg, "cell"});
  const TargetState bell = bell_pairs(2, {{0, 1}});
  const TraceRun run = run_trace(cfg, s, provider, numerics, bell);
  // Skip the first sample: |++> itself has F = 1/2 in the optimised frame.
  const std::size_t k = run.trace.argmax_fidelity(numerics.sample_interval_ms, max_ms);
  CellCalibration c;
  c.peak_time_ms = run.trace.time_ms[k];
  c.peak_fidelity = run.trace.fidelity[k];
  c.peak_fidelity_ps = run.trace.fidelity_ps[k];
  c.peak_p_suc = run.trace.p_suc[k];
  return c;
}

double oscillation_period(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> crossings;
  for (std::size_t k = 1; k < y.size(); ++k) {
    const double a = y[k - 1] - mean, b = y[k] - mean;
    if ((a < 0.0) != (b < 0.0)) crossings.push_back(t[k - 1] + (t[k] - t[k - 1]) * a / (a - b));
  }
  if (crossings.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

}  // namespace orbitq
