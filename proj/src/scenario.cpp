#include "orbitq/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "orbitq/error.hpp"
#include "orbitq/observables.hpp"
#include "orbitq/protocol.hpp"

namespace orbitq {

namespace {

using nlohmann::json;

template <typename Fn>
void write_output(const ScenarioConfig& cfg, RunManifest& manifest, const std::string& name, Fn&& fill) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / name;
  {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    fill(out);
    if (!out) throw ConfigError("write to '" + path.string() + "' failed");
  }
  manifest.add_output(name);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json hop_json(const VirtualHop& h) {
  return {{"source", h.source}, {"target", h.target}, {"delta", h.delta}, {"coupling", h.coupling}, {"residual", h.residual}};
}

json params_json(const HubbardParams& p, const RecoilEnergy& recoil) {
  json j;
  j["eps"] = p.eps;
  j["hop"] = matrix_json(p.hop);
  j["U"] = matrix_json(p.U);
  j["eps_prime"] = matrix_json(p.eps_prime);
  json hp = json::array();
  for (const auto& m : p.hop_prime) hp.push_back(matrix_json(m));
  j["hop_prime"] = hp;
  j["tilt"] = p.tilt;
  const PerturbativeDiagnostics d = perturbative_ising(p);
  json bonds = json::array();
  for (std::size_t b = 0; b < d.bonds.size(); ++b) {
    const auto& bd = d.bonds[b];
    bonds.push_back({{"bond", b},
                     {"into_left", hop_json(bd.into_left)},
                     {"into_right", hop_json(bd.into_right)},
                     {"delta", bd.active().delta},
                     {"resonance_residual", bd.active().residual},
                     {"on_resonance", bd.on_resonance},
                     {"j_ising_recoil", bd.on_resonance ? json(nullptr) : json(bd.j_ising)},
                     {"j_ising_hz", bd.on_resonance ? json(nullptr) : json(recoil.to_hertz(bd.j_ising))}});
  }
  j["bonds"] = bonds;
  j["j_heisenberg_recoil"] = d.j_heisenberg;
  j["j_heisenberg_hz"] = recoil.to_hertz(d.j_heisenberg);
  return j;
}

json stats_json(const KrylovStats& s) {
  return {{"steps", s.steps}, {"matvecs", s.matvecs}, {"halvings", s.halvings},
          {"happy_breakdowns", s.happy_breakdowns}, {"max_error_estimate", s.max_error_estimate}};
}

json sample_json(const ObservableTrace& t, std::size_t k) {
  return {{"time_ms", t.time_ms[k]}, {"F", t.fidelity[k]}, {"F_raw", t.fidelity_raw[k]}, {"F_PS", t.fidelity_ps[k]},
          {"P_suc", t.p_suc[k]}, {"D", t.double_occupancy[k]}, {"N_2nd", t.second_orbital[k]}};
}

json run_json(const TraceRun& run) {
  double d_minus_n2 = 0.0;
  for (std::size_t k = 0; k < run.trace.size(); ++k)
    d_minus_n2 = std::max(d_minus_n2, std::abs(run.trace.double_occupancy[k] - run.trace.second_orbital[k]));
  return {{"krylov", stats_json(run.stats)},
          {"max_norm_drift", run.max_norm_drift},
          {"max_sector_weight_drift", run.max_sector_drift},
          {"max_abs_D_minus_N2nd", d_minus_n2},
          {"D_period_ms", oscillation_period(run.trace.time_ms, run.trace.double_occupancy)}};
}

void write_params_table(const ScenarioConfig& cfg, RunManifest& manifest, const HubbardParams& p) {
  write_output(cfg, manifest, "params.tsv", [&](std::ostream& os) { write_params_report(os, p); });
}

// Applies the intra-cell retune (if requested) to a two-site copy of cfg and
// transfers the knob to cfg.
json maybe_retune(const ScenarioConfig& sc, PhysicalConfig& cfg, ParamsProvider& provider) {
  if (!sc.retune) return nullptr;
  // Bond 0 of a tilted chain sees the same cell as an isolated pair.
  PhysicalConfig cell = cfg;
  const RetuneRequest& req = sc.retune_request;
  if (req.bond == 0) cell.n_sites = 2;
  const RetuneResult r = retune_cell(cell, provider, req);
  cfg.scattering_length_m = cell.scattering_length_m;
  cfg.v0p_recoil = cell.v0p_recoil;
  const bool as = req.knob == ResonanceKnob::ScatteringLength;
  return {{"knob", as ? "aS" : "V0p"},
          {"knob_value", as ? r.knob_value * 1e9 : r.knob_value},
          {"knob_unit", as ? "nm" : "E_r"},
          {"target_recoil", r.target_recoil},
          {"residual_recoil", r.residual},
          {"coupling_recoil", r.coupling_recoil},
          {"iterations", r.iterations},
          {"predicted_gate_time_ms", cell_gate_time_ms(r.coupling_recoil, recoil_energy(cfg))}};
}

double round_time(const ScenarioConfig& sc, const PhysicalConfig& cfg, ParamsProvider& provider, json& diag) {
  if (sc.round_time_ms != "auto") return std::stod(sc.round_time_ms);
  PhysicalConfig cell = cfg;
  cell.n_sites = 2;
  const HubbardParams p = provider(cell);
  const double coupling = perturbative_ising(p, 0.0).bonds[0].active().coupling;
  const double predicted = cell_gate_time_ms(coupling, recoil_energy(cell));
  const CellCalibration cal = calibrate_cell(cell, provider, sc.run, 1.5 * predicted);
  diag["cell_calibration"] = {{"predicted_ms", predicted},
                              {"peak_time_ms", cal.peak_time_ms},
                              {"F", cal.peak_fidelity},
                              {"F_PS", cal.peak_fidelity_ps},
                              {"P_suc", cal.peak_p_suc}};
  return cal.peak_time_ms;
}

void run_params(const ScenarioConfig& sc, RunManifest& manifest) {
  ParamsProvider provider(sc.bands);
  const PhysicalConfig& cfg = sc.physics;
  const SingleParticleSolution& sp = provider.single_particle(cfg);
  const HubbardParams p = compute_params(sp, cfg);
  write_params_table(sc, manifest, p);
  write_output(sc, manifest, "bonds.tsv", [&](std::ostream& os) {
    os.precision(12);
    os << "bond channel source target delta_recoil coupling_recoil residual_recoil\n";
    const auto d = perturbative_ising(p);
    for (std::size_t b = 0; b < d.bonds.size(); ++b)
      for (const auto& [name, h] : {std::pair{"into_left", d.bonds[b].into_left}, std::pair{"into_right", d.bonds[b].into_right}})
        os << b << ' ' << name << ' ' << h.source << ' ' << h.target << ' ' << h.delta << ' ' << h.coupling << ' '
           << h.residual << '\n';
  });

  json& diag = manifest.diagnostics();
  const RecoilEnergy recoil = recoil_energy(cfg);
  diag["recoil_hz"] = recoil.hertz();
  diag["params"] = params_json(p, recoil);
  double inter = 0.0;
  for (int a = 0; a < p.n_orbitals; ++a)
    for (int b = 0; b < p.n_orbitals; ++b)
      if (a != b) inter = std::max(inter, std::abs(p.hop(a, b)));
  diag["max_abs_interorbital_J"] = inter;
  double stagger = 0.0;
  for (int i = 0; i + 1 < p.n_sites; ++i)
    for (int a = 0; a < p.n_orbitals; ++a)
      stagger = std::max(stagger, std::abs(p.eps_prime(i, a) + p.eps_prime(i + 1, a)));
  diag["max_abs_eps_prime_stagger_sum"] = stagger;
  double big = 0.0, other = 0.0;
  for (const auto& m : p.hop_prime) {
    big = std::max({big, std::abs(m(0, 1)), std::abs(m(1, 0))});
    for (int a = 0; a < p.n_orbitals; ++a)
      for (int b = 0; b < p.n_orbitals; ++b)
        if (!((a == 0 && b == 1) || (a == 1 && b == 0))) other = std::max(other, std::abs(m(a, b)));
  }
  diag["abs_J_prime_12"] = big;
  diag["max_abs_other_J_prime"] = other;
  json nnn = json::array();
  for (int b = 0; b < p.n_orbitals; ++b) nnn.push_back(next_nearest_ratio(sp.bands, b));
  diag["next_nearest_ratio"] = nnn;
}

void run_bell(const ScenarioConfig& sc, RunManifest& manifest) {
  ParamsProvider provider(sc.bands);
  PhysicalConfig cfg = sc.physics;
  json& diag = manifest.diagnostics();
  diag["retune"] = maybe_retune(sc, cfg, provider);
  const HubbardParams p = provider(cfg);
  write_params_table(sc, manifest, p);
  diag["params"] = params_json(p, recoil_energy(cfg));

  Schedule schedule;
  if (sc.duration_ms > 0.0) schedule.segments.push_back({sc.duration_ms, cfg, "bell"});
  const TargetState target = bell_pairs(cfg.n_sites, cell_pairs(cfg.n_sites, 0));
  const TraceRun run = run_trace(cfg, schedule, provider, sc.run, target);
  write_output(sc, manifest, "trace.tsv", [&](std::ostream& os) { write_trace(os, run.trace); });
  diag["run"] = run_json(run);
  const double to = std::min(sc.window_to_ms, sc.duration_ms);
  if (sc.window_from_ms <= to && run.trace.size() > 1) {
    diag["peak_window_ms"] = {sc.window_from_ms, to};
    diag["peak"] = sample_json(run.trace, run.trace.argmax_fidelity(sc.window_from_ms, to));
  }
  diag["initial"] = sample_json(run.trace, 0);
}

void run_pairwise(const ScenarioConfig& sc, RunManifest& manifest) {
  ParamsProvider provider(sc.bands);
  PhysicalConfig base = sc.physics;
  json& diag = manifest.diagnostics();
  diag["retune"] = maybe_retune(sc, base, provider);
  const double round = round_time(sc, base, provider, diag);
  diag["round_time_ms"] = round;
  const double duration = sc.duration_ms > 0.0 ? sc.duration_ms : 1.1 * round;
  diag["duration_ms"] = duration;

  std::vector<std::pair<int, ObservableTrace>> rescaled;
  json per_size = json::array();
  for (int n : sc.sizes) {
    const auto started = std::chrono::steady_clock::now();
    PhysicalConfig cfg = base;
    cfg.n_sites = n;
    Schedule schedule;
    schedule.segments.push_back({duration, cfg, "round-1"});
    const TargetState target = bell_pairs(n, cell_pairs(n, 0));
    const TraceRun run = run_trace(cfg, schedule, provider, sc.run, target);
    const std::string tag = "n" + std::to_string(n);
    write_output(sc, manifest, "trace_" + tag + ".tsv", [&](std::ostream& os) { write_trace(os, run.trace); });
    const ObservableTrace r = rescale_per_cell(run.trace, n);
    write_output(sc, manifest, "rescaled_" + tag + ".tsv", [&](std::ostream& os) { write_trace(os, r); });
    const std::size_t k = run.trace.argmax_fidelity(sc.run.sample_interval_ms, duration);
    json entry = {{"n", n}, {"peak", sample_json(run.trace, k)}, {"peak_rescaled", sample_json(r, k)}, {"run", run_json(run)}};
    entry["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    per_size.push_back(entry);
    rescaled.emplace_back(n, r);
  }
  diag["sizes"] = per_size;
  json overlaps = json::array();
  for (std::size_t a = 0; a < rescaled.size(); ++a)
    for (std::size_t b = a + 1; b < rescaled.size(); ++b) {
      const auto& ta = rescaled[a].second;
      const auto& tb = rescaled[b].second;
      double worst = 0.0;
      for (std::size_t k = 0; k < std::min(ta.size(), tb.size()); ++k)
        if (ta.time_ms[k] <= round + 1e-12) worst = std::max(worst, std::abs(ta.fidelity[k] - tb.fidelity[k]));
      overlaps.push_back({{"n_a", rescaled[a].first}, {"n_b", rescaled[b].first}, {"max_abs_diff_first_round", worst}});
    }
  diag["rescaled_overlap"] = overlaps;
}

void run_shift(const ScenarioConfig& sc, RunManifest& manifest) {
  ParamsProvider provider(sc.bands);
  PhysicalConfig cfg = sc.physics;
  json& diag = manifest.diagnostics();
  diag["retune"] = maybe_retune(sc, cfg, provider);
  double shift = 0.0;
  if (sc.shift_time_ms == "auto" || sc.round_time_ms == "auto") {
    const double calibrated = round_time(sc, cfg, provider, diag);
    shift = sc.shift_time_ms == "auto" ? calibrated : std::stod(sc.shift_time_ms);
  } else {
    shift = std::stod(sc.shift_time_ms);
  }
  const double second = sc.second_round_ms == "equal" ? shift : std::stod(sc.second_round_ms);
  diag["shift_time_ms"] = shift;
  diag["second_round_ms"] = second;

  Schedule first;
  first.segments.push_back({shift, cfg, "round-1"});
  const Schedule schedule = shift_unit_cells(first, shift, second, sc.shift_method);
  write_params_table(sc, manifest, provider(cfg));
  const int n = cfg.n_sites;
  const TargetState bell = bell_pairs(n, cell_pairs(n, 0));
  const TargetState chain = chain_cluster(n);
  const auto times = sample_grid(schedule.total_duration(), sc.run.sample_interval_ms);
  const TraceRun run = run_trace(prepare_plus_product(n, cfg.n_orbitals), schedule, provider, sc.run,
                                 [&](double t) -> const TargetState& { return t <= shift + 1e-12 ? bell : chain; },
                                 times);
  write_output(sc, manifest, "trace.tsv", [&](std::ostream& os) { write_trace(os, run.trace); });
  diag["run"] = run_json(run);

  std::size_t at_shift = 0;
  for (std::size_t k = 0; k < run.trace.size(); ++k)
    if (run.trace.time_ms[k] <= shift + 1e-12) at_shift = k;
  const std::size_t last = run.trace.size() - 1;
  const double per_cell_ps = std::pow(run.trace.fidelity_ps[at_shift], 2.0 / n);
  diag["at_shift"] = sample_json(run.trace, at_shift);
  diag["per_cell_F_PS"] = per_cell_ps;
  diag["final"] = sample_json(run.trace, last);
  diag["predicted_final_F_PS"] = std::pow(per_cell_ps, n - 1);
}

}  // namespace

void run_scenario(const ScenarioConfig& cfg, RunManifest& manifest) {
  cfg.validate();
  manifest.resolved_config() = to_sections(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  write_output(cfg, manifest, "resolved.ini", [&](std::ostream& os) { os << to_ini(cfg); });
  switch (cfg.kind()) {
    case ScenarioKind::Params: run_params(cfg, manifest); break;
    case ScenarioKind::Bell: run_bell(cfg, manifest); break;
    case ScenarioKind::Pairwise: run_pairwise(cfg, manifest); break;
    case ScenarioKind::Shift: run_shift(cfg, manifest); break;
  }
}

void apply_sweep_value(PhysicalConfig& cfg, const std::string& param, double value) {
  if (param == "theta")
    cfg.theta = value * std::numbers::pi;
  else if (param == "V0p")
    cfg.v0p_recoil = value;
  else if (param == "aS")
    cfg.scattering_length_m = value * 1e-9;
  else if (param == "g")
    cfg.tilt_recoil = value;
  else
    throw ConfigError("unknown sweep parameter '" + param + "' (expected theta, V0p, aS or g)");
}

std::vector<SweepRow> run_sweep_points(const ScenarioConfig& sc, const SweepSpec& spec) {
  if (spec.points < 1) throw ConfigError("sweep needs at least one point");
  if (spec.points == 1 && spec.from != spec.to) throw ConfigError("a one-point sweep needs from == to");
  {
    PhysicalConfig probe = sc.physics;
    apply_sweep_value(probe, spec.param, spec.from);
    probe.validate();
    apply_sweep_value(probe, spec.param, spec.to);
    probe.validate();
  }
  std::vector<SweepRow> rows(spec.points);
  for (int k = 0; k < spec.points; ++k)
    rows[k].value = spec.points == 1 ? spec.from : spec.from + (spec.to - spec.from) * k / (spec.points - 1);

  const int bond = sc.retune_request.bond;
  std::atomic<bool> abort{false};
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < spec.points; ++k) {
    if (abort.load()) continue;
    SweepRow& row = rows[k];
    try {
      ParamsProvider provider(sc.bands);
      PhysicalConfig cfg = sc.physics;
      apply_sweep_value(cfg, spec.param, row.value);
      const HubbardParams p = provider(cfg);
      if (bond >= p.n_bonds()) throw ConfigError("sweep: retune_bond outside the chain");
      const auto d = perturbative_ising(p);
      const auto& b = d.bonds[bond];
      row.delta = b.active().delta;
      row.residual = b.active().residual;
      row.j_ising = b.j_ising;
      row.j_ising_hz = recoil_energy(cfg).to_hertz(b.j_ising);
      row.j_heisenberg = d.j_heisenberg;
      row.jp11 = p.hop_prime[bond](0, 0);
      row.jp12 = p.hop_prime[bond](0, 1);
      row.jp21 = p.hop_prime[bond](1, 0);
      row.jp22 = p.hop_prime[bond](1, 1);
      if (sc.sweep_fidelity && sc.duration_ms > 0.0) {
        Schedule s;
        s.segments.push_back({sc.duration_ms, cfg, "sweep"});
        const TraceRun run = run_trace(cfg, s, provider, sc.run, bell_pairs(cfg.n_sites, cell_pairs(cfg.n_sites, 0)));
        const std::size_t i = run.trace.argmax_fidelity(sc.window_from_ms, std::min(sc.window_to_ms, sc.duration_ms));
        row.peak_f = run.trace.fidelity[i];
        row.peak_f_ps = run.trace.fidelity_ps[i];
        row.peak_p_suc = run.trace.p_suc[i];
      }
      row.status = "ok";
    } catch (const std::exception& e) {
      row.status = "failed";
      row.error = e.what();
      abort.store(true);
    }
  }
  return rows;
}

bool run_sweep(const ScenarioConfig& sc, const SweepSpec& spec, RunManifest& manifest) {
  sc.validate();
  manifest.resolved_config() = to_sections(sc);
  manifest.resolved_config()["sweep"]["param"] = spec.param;
  manifest.resolved_config()["sweep"]["from"] = format_double(spec.from);
  manifest.resolved_config()["sweep"]["to"] = format_double(spec.to);
  manifest.resolved_config()["sweep"]["points"] = std::to_string(spec.points);
  const std::vector<SweepRow> rows = run_sweep_points(sc, spec);
  write_output(sc, manifest, "sweep.tsv", [&](std::ostream& os) {
    os.precision(12);
    os << spec.param
       << " status delta_recoil residual_recoil j_ising_recoil j_ising_hz j_heisenberg_recoil"
          " jp11 jp12 jp21 jp22 peak_F peak_F_PS peak_P_suc\n";
    for (const auto& r : rows)
      os << r.value << ' ' << r.status << ' ' << r.delta << ' ' << r.residual << ' ' << r.j_ising << ' '
         << r.j_ising_hz << ' ' << r.j_heisenberg << ' ' << r.jp11 << ' ' << r.jp12 << ' ' << r.jp21 << ' ' << r.jp22
         << ' ' << r.peak_f << ' ' << r.peak_f_ps << ' ' << r.peak_p_suc << '\n';
  });
  bool ok = true;
  json failures = json::array();
  for (const auto& r : rows)
    if (r.status != "ok") {
      ok = false;
      if (r.status == "failed") failures.push_back({{"value", r.value}, {"error", r.error}});
    }
  manifest.diagnostics()["failed_points"] = failures;
  manifest.diagnostics()["points"] = rows.size();
  return ok;
}

void run_bands(const ScenarioConfig& sc, RunManifest& manifest) {
  sc.validate();
  manifest.resolved_config() = to_sections(sc);
  const SingleParticleSolution sp = solve_single_particle(sc.physics, sc.bands);
  write_output(sc, manifest, "bands.tsv", [&](std::ostream& os) { write_bands_table(os, sp.bands); });
  write_output(sc, manifest, "wannier.tsv", [&](std::ostream& os) { write_wannier_table(os, sp.wannier); });
  json centers = json::array(), nnn = json::array(), widths = json::array();
  for (int b = 0; b < sp.bands.n_bands(); ++b) {
    centers.push_back(sp.bands.band_center(b));
    widths.push_back(sp.bands.energies.col(b).maxCoeff() - sp.bands.energies.col(b).minCoeff());
    nnn.push_back(next_nearest_ratio(sp.bands, b));
  }
  json& d = manifest.diagnostics();
  d["band_centers_recoil"] = centers;
  d["band_widths_recoil"] = widths;
  d["next_nearest_ratio"] = nnn;
  d["transverse_w4"] = sp.transverse_w4;
}

}  // namespace orbitq
