#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "orbitq/dynamics.hpp"
#include "orbitq/lattice_params.hpp"
#include "orbitq/observables.hpp"

namespace orbitq {

/// Numerical settings shared by every evolution.
struct RunNumerics {
  EvolveOptions evolve;
  double sample_interval_ms = 0.01;
};

/// Sample grid 0, dt, 2 dt, ... up to and including `duration_ms`.
std::vector<double> sample_grid(double duration_ms, double interval_ms);

using TargetSelector = std::function<const TargetState&(double time_ms)>;

struct TraceRun {
  ObservableTrace trace;
  KrylovStats stats;
  double max_norm_drift = 0.0;
  double max_sector_drift = 0.0;
};

/// Evolves `initial` through the schedule and records the full observable
/// set at every sample time against the target chosen for that time. An
/// empty schedule records the initial state at t = 0 only.
TraceRun run_trace(ManyBodyState initial, const Schedule& schedule, ParamsProvider& provider,
                   const RunNumerics& numerics, const TargetSelector& target,
                   const std::vector<double>& sample_times);
/// |+>^n with the geometry of `geometry`, sampled on the default grid.
TraceRun run_trace(const PhysicalConfig& geometry, const Schedule& schedule, ParamsProvider& provider,
                   const RunNumerics& numerics, const TargetState& target);

/// Detuning delta + U_12 = +-2|J'|/sqrt(3) of an isolated cell. There one
/// generalised Rabi cycle of each opposite-spin configuration takes
/// pi / |delta| / (E_r / hbar) and returns with a conditional phase of pi,
/// i.e. a controlled-Z up to single-qubit z rotations.
double optimal_detuning(double coupling_recoil);
double cell_gate_time_ms(double coupling_recoil, const RecoilEnergy& recoil);

struct RetuneRequest {
  ResonanceKnob knob = ResonanceKnob::ScatteringLength;
  int bond = 0;
  // Target delta + U_12 in E_r; NaN selects detuning_sign * optimal_detuning.
  double target_recoil = std::numeric_limits<double>::quiet_NaN();
  int detuning_sign = -1;
  double lo = -300e-9;  // metres for a_S, E_r for V0'
  double hi = -1e-9;
};

struct RetuneResult {
  double knob_value = 0.0;
  double target_recoil = 0.0;
  double residual = 0.0;
  double coupling_recoil = 0.0;
  int iterations = 0;
};

/// Moves the chosen knob of cfg so that the active channel of `bond` sits at
/// the requested detuning.
RetuneResult retune_cell(PhysicalConfig& cfg, ParamsProvider& provider, const RetuneRequest& request);

struct CellCalibration {
  double peak_time_ms = 0.0;
  double peak_fidelity = 0.0;
  double peak_fidelity_ps = 0.0;
  double peak_p_suc = 0.0;
};

/// Simulates one isolated two-site cell (cfg with n_sites = 2) up to
/// `max_ms` and returns where its optimised-frame Bell fidelity peaks.
CellCalibration calibrate_cell(const PhysicalConfig& cfg, ParamsProvider& provider,
                               const RunNumerics& numerics, double max_ms);

}  // namespace orbitq

namespace orbitq {

/// Mean oscillation period of y(t): twice the average spacing of crossings
/// of its time average. NaN if fewer than two crossings.
double oscillation_period(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace orbitq
