#pragma once

#include <string>
#include <limits>
#include <vector>

#include "json.hpp"
#include "orbitq/config.hpp"
#include "orbitq/manifest.hpp"

namespace orbitq {

/// Runs the scenario, writing its tables into cfg.output_dir and recording
/// them (plus diagnostics) in `manifest`.
void run_scenario(const ScenarioConfig& cfg, RunManifest& manifest);

struct SweepSpec {
  std::string param;  // theta (units of pi), V0p (E_r), aS (nm), g (E_r per site)
  double from = 0.0;
  double to = 0.0;
  int points = 2;
};

struct SweepRow {
  double value = 0.0;
  std::string status = "skipped";  // ok, failed, skipped
  std::string error;
  double delta = 0.0;
  double residual = 0.0;
  double j_ising = 0.0;
  double j_ising_hz = 0.0;
  double j_heisenberg = 0.0;
  double jp11 = 0.0, jp12 = 0.0, jp21 = 0.0, jp22 = 0.0;
  double peak_f = std::numeric_limits<double>::quiet_NaN();
  double peak_f_ps = std::numeric_limits<double>::quiet_NaN();
  double peak_p_suc = std::numeric_limits<double>::quiet_NaN();
};

/// Applies one sweep coordinate to a configuration.
void apply_sweep_value(PhysicalConfig& cfg, const std::string& param, double value);

/// Evaluates every grid point (in parallel). The first failure stops points
/// that have not started; their rows stay "skipped".
std::vector<SweepRow> run_sweep_points(const ScenarioConfig& cfg, const SweepSpec& spec);

/// Sweep plus sweep.tsv and manifest bookkeeping. Returns false if any point
/// failed (partial results are still written).
bool run_sweep(const ScenarioConfig& cfg, const SweepSpec& spec, RunManifest& manifest);

/// bands.tsv and wannier.tsv for the configured lattice depth.
void run_bands(const ScenarioConfig& cfg, RunManifest& manifest);

}  // namespace orbitq
