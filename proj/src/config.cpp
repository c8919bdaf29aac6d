#include "orbitq/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

std::string trim(const std::string& s, std::size_t& offset) {
  std::size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  std::size_t e = s.size();
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  offset = b;
  return s.substr(b, e - b);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.') return false;
  return true;
}

double parse_double(const IniDocument& doc, const IniDocument::Entry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ConfigError(doc.where(e) + ": expected a number, got '" + e.value + "'");
  return v;
}

long parse_int(const IniDocument& doc, const IniDocument::Entry& e) {
  long v = 0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(doc.where(e) + ": expected an integer, got '" + e.value + "'");
  return v;
}

bool parse_bool(const IniDocument& doc, const IniDocument::Entry& e) {
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ConfigError(doc.where(e) + ": expected true or false, got '" + e.value + "'");
}

void check_range(const IniDocument& doc, const IniDocument::Entry& e, double v, double lo, double hi) {
  if (v < lo || v > hi) {
    std::ostringstream msg;
    msg << doc.where(e) << ": value " << v << " outside [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
}

// "auto", "equal" or a positive number.
std::string parse_time_or_word(const IniDocument& doc, const IniDocument::Entry& e, const std::string& word) {
  if (e.value == word) return word;
  const double v = parse_double(doc, e);
  check_range(doc, e, v, 1e-6, 1e4);
  return format_double(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

// Shortest text t with parse(t) * scale == v exactly, so that values stored
// in SI but written in nm survive a write/read cycle bit for bit. v / scale
// itself may be off by an ulp, so its neighbours are tried as well. Values
// that no product parse(t) * scale reaches fall back to the nearest text.
std::string format_scaled(double v, double scale) {
  char buf[64];
  const double centre = v / scale;
  for (int precision = 1; precision <= 17; ++precision) {
    double candidate = centre;
    for (int k = 0; k < 4; ++k) candidate = std::nextafter(candidate, -INFINITY);
    for (int k = 0; k <= 8; ++k, candidate = std::nextafter(candidate, INFINITY)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, candidate, std::chars_format::general, precision);
      double back = 0.0;
      std::from_chars(buf, ptr, back);
      if (back * scale == v) return std::string(buf, ptr);
    }
  }
  return format_double(centre);
}

}  // namespace

IniDocument IniDocument::parse(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    std::string line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    std::size_t lead = 0;
    const std::string body = trim(line, lead);
    if (body.empty()) continue;
    const int column = static_cast<int>(lead) + 1;
    auto fail = [&](int col, const std::string& what) {
      std::ostringstream msg;
      msg << source << ':' << line_no << ':' << col << ": " << what;
      throw ConfigError(msg.str());
    };
    if (body.front() == '[') {
      if (body.back() != ']') fail(column + static_cast<int>(body.size()) - 1, "section header missing ']'");
      std::size_t off = 0;
      section = trim(body.substr(1, body.size() - 2), off);
      if (!valid_name(section)) fail(column + 1, "invalid section name '" + section + "'");
      doc.sections_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(column, "expected 'key = value'");
    std::size_t key_off = 0, value_off = 0;
    const std::string key = trim(body.substr(0, eq), key_off);
    const std::string value = trim(body.substr(eq + 1), value_off);
    if (!valid_name(key)) fail(column, "invalid key '" + key + "'");
    if (section.empty()) fail(column, "key '" + key + "' appears before any [section]");
    const int value_col = column + static_cast<int>(eq + 1 + value_off);
    if (value.empty()) fail(value_col, "empty value for '" + key + "'");
    auto& entries = doc.sections_[section];
    if (entries.count(key)) fail(column, "duplicate key '" + key + "' in [" + section + "]");
    entries[key] = Entry{value, line_no, value_col, column + static_cast<int>(key_off), false};
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str(), path);
}

bool IniDocument::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key);
}

const IniDocument::Entry& IniDocument::take(const std::string& section, const std::string& key) {
  auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
  Entry& e = s->second.at(key);
  e.used = true;
  return e;
}

void IniDocument::reject_unused() const {
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, e] : entries)
      if (!e.used) {
        std::ostringstream msg;
        msg << source_ << ':' << e.line << ':' << e.key_column << ": unknown key '" << key << "' in [" << section << "]";
        throw ConfigError(msg.str());
      }
}

std::string IniDocument::where(const Entry& e) const {
  std::ostringstream out;
  out << source_ << ':' << e.line << ':' << e.column;
  return out.str();
}

ScenarioKind scenario_kind(const std::string& name) {
  if (name == "fig1-params" || name == "params") return ScenarioKind::Params;
  if (name == "fig3-bell" || name == "bell") return ScenarioKind::Bell;
  if (name == "fig5-pairwise" || name == "pairwise") return ScenarioKind::Pairwise;
  if (name == "fig5c-shift" || name == "shift") return ScenarioKind::Shift;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected fig1-params, fig3-bell, fig5-pairwise, fig5c-shift, params, bell, pairwise or shift)");
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.output_dir = "out/" + name;
  switch (scenario_kind(name)) {
    case ScenarioKind::Params:
      c.physics.v0_recoil = 15.0;
      c.physics.v0p_recoil = 4.0;
      c.physics.n_sites = 4;
      break;
    case ScenarioKind::Bell:
      c.physics.v0_recoil = 10.0;
      c.physics.v0p_recoil = 6.2;
      c.physics.n_sites = 2;
      c.duration_ms = 2.5;
      c.window_from_ms = 1.0;
      c.window_to_ms = 2.5;
      break;
    case ScenarioKind::Pairwise:
    case ScenarioKind::Shift:
      c.physics.v0_recoil = 18.0;
      c.physics.v0p_recoil = 4.0;
      c.physics.tilt_recoil = 0.5;
      c.physics.n_sites = 4;
      c.retune = true;
      c.duration_ms = 0.0;
      c.window_from_ms = 0.0;
      c.window_to_ms = 0.0;
      break;
  }
  return c;
}

void ScenarioConfig::validate() const {
  (void)scenario_kind(name);
  physics.validate();
  if (physics.n_sites > 16) throw ConfigError("n_sites above 16 is not supported");
  if (bands.cutoff < 8 || bands.n_q < 32 || bands.n_q % 2) throw ConfigError("cutoff >= 8 and even n_q >= 32 required");
  if (bands.n_periods < 11 || bands.n_periods % 2 == 0) throw ConfigError("n_periods must be odd and >= 11");
  if (bands.samples_per_period < 16 || bands.samples_per_period % 2) throw ConfigError("samples_per_period must be even and >= 16");
  const auto& k = run.evolve.krylov;
  if (k.min_dim < 2 || k.max_dim < k.min_dim) throw ConfigError("Krylov dimensions must satisfy 2 <= min <= max");
  if (!(k.tolerance > 0.0)) throw ConfigError("Krylov tolerance must be positive");
  if (!(run.sample_interval_ms > 0.0)) throw ConfigError("sample_interval_ms must be positive");
  if (duration_ms < 0.0) throw ConfigError("duration_ms must be non-negative");
  for (int n : sizes)
    if (n < 2 || n % 2 || n > 16) throw ConfigError("pairwise sizes must be even and between 2 and 16");
}

ScenarioConfig resolve_config(IniDocument& doc, const std::string& base_dir) {
  const std::string name = doc.take("scenario", "name").value;
  ScenarioConfig c = preset(name);
  auto opt = [&](const char* section, const char* key) -> const IniDocument::Entry* {
    return doc.has(section, key) ? &doc.take(section, key) : nullptr;
  };
  auto num = [&](const char* section, const char* key, double& out, double lo, double hi, double scale = 1.0) {
    if (const auto* e = opt(section, key)) {
      const double v = parse_double(doc, *e);
      check_range(doc, *e, v, lo, hi);
      out = v * scale;
    }
  };
  auto integer = [&](const char* section, const char* key, int& out, long lo, long hi) {
    if (const auto* e = opt(section, key)) {
      const long v = parse_int(doc, *e);
      check_range(doc, *e, static_cast<double>(v), static_cast<double>(lo), static_cast<double>(hi));
      out = static_cast<int>(v);
    }
  };

  if (const auto* e = opt("scenario", "output_dir")) c.output_dir = e->value;
  if (std::filesystem::path(c.output_dir).is_relative())
    c.output_dir = std::filesystem::absolute(std::filesystem::path(base_dir) / c.output_dir).lexically_normal().string();

  PhysicalConfig& p = c.physics;
  num("physics", "atom_mass_amu", p.atom_mass_kg, 1e-3, 1e3, constants::amu);
  num("physics", "lattice_const_nm", p.lattice_const_m, 1.0, 1e4, 1e-9);
  num("physics", "scattering_length_nm", p.scattering_length_m, -1e4, 1e4, 1e-9);
  num("physics", "v0_recoil", p.v0_recoil, 0.0, 100.0);
  num("physics", "v0p_recoil", p.v0p_recoil, 0.0, 100.0);
  num("physics", "theta_over_pi", p.theta, -4.0, 4.0, std::numbers::pi);
  num("physics", "tilt_recoil", p.tilt_recoil, -50.0, 50.0);
  integer("physics", "n_sites", p.n_sites, 2, 16);
  integer("physics", "n_orbitals", p.n_orbitals, 2, 4);

  num("schedule", "duration_ms", c.duration_ms, 0.0, 1e4);
  num("schedule", "window_from_ms", c.window_from_ms, 0.0, 1e4);
  num("schedule", "window_to_ms", c.window_to_ms, 0.0, 1e4);
  if (const auto* e = opt("schedule", "round_time_ms")) c.round_time_ms = parse_time_or_word(doc, *e, "auto");
  if (const auto* e = opt("schedule", "shift_time_ms")) c.shift_time_ms = parse_time_or_word(doc, *e, "auto");
  if (const auto* e = opt("schedule", "second_round_ms")) c.second_round_ms = parse_time_or_word(doc, *e, "equal");
  if (const auto* e = opt("schedule", "shift_method")) {
    try {
      c.shift_method = parse_shift_method(e->value);
    } catch (const ConfigError& err) {
      throw ConfigError(doc.where(*e) + ": " + err.what());
    }
  }
  if (const auto* e = opt("schedule", "sizes")) {
    c.sizes.clear();
    std::istringstream in(e->value);
    std::string tok;
    while (in >> tok) {
      IniDocument::Entry piece = *e;
      piece.value = tok;
      c.sizes.push_back(static_cast<int>(parse_int(doc, piece)));
    }
    if (c.sizes.empty()) throw ConfigError(doc.where(*e) + ": sizes needs at least one value");
  }
  if (const auto* e = opt("schedule", "retune")) {
    if (e->value == "none") {
      c.retune = false;
    } else {
      c.retune = true;
      try {
        c.retune_request.knob = parse_resonance_knob(e->value);
      } catch (const ConfigError& err) {
        throw ConfigError(doc.where(*e) + ": " + err.what());
      }
    }
  }
  RetuneRequest& r = c.retune_request;
  const bool knob_is_as = r.knob == ResonanceKnob::ScatteringLength;
  if (!knob_is_as) {
    r.lo = 0.0;
    r.hi = 20.0;
  }
  if (const auto* e = opt("schedule", "detuning_recoil")) {
    if (e->value == "auto") {
      r.target_recoil = std::numeric_limits<double>::quiet_NaN();
    } else {
      r.target_recoil = parse_double(doc, *e);
      check_range(doc, *e, r.target_recoil, -10.0, 10.0);
    }
  }
  if (const auto* e = opt("schedule", "detuning_sign")) {
    const long s = parse_int(doc, *e);
    if (s != 1 && s != -1) throw ConfigError(doc.where(*e) + ": detuning_sign must be 1 or -1");
    r.detuning_sign = static_cast<int>(s);
  }
  integer("schedule", "retune_bond", r.bond, 0, 14);
  const double bracket_scale = knob_is_as ? 1e-9 : 1.0;
  num("schedule", "retune_lo", r.lo, -1e4, 1e4, bracket_scale);
  num("schedule", "retune_hi", r.hi, -1e4, 1e4, bracket_scale);

  integer("numerics", "cutoff", c.bands.cutoff, 8, 200);
  integer("numerics", "n_q", c.bands.n_q, 32, 4096);
  integer("numerics", "n_periods", c.bands.n_periods, 11, 201);
  integer("numerics", "samples_per_period", c.bands.samples_per_period, 16, 1024);
  num("numerics", "krylov_tol", c.run.evolve.krylov.tolerance, 1e-16, 1e-6);
  integer("numerics", "krylov_min_dim", c.run.evolve.krylov.min_dim, 2, 200);
  integer("numerics", "krylov_max_dim", c.run.evolve.krylov.max_dim, 2, 200);
  num("numerics", "sample_interval_ms", c.run.sample_interval_ms, 1e-5, 100.0);
  if (const auto* e = opt("numerics", "interaction")) {
    try {
      c.run.evolve.interaction = parse_interaction_model(e->value);
    } catch (const ConfigError& err) {
      throw ConfigError(doc.where(*e) + ": " + err.what());
    }
  }

  if (const auto* e = opt("sweep", "param")) c.sweep_param = e->value;
  num("sweep", "from", c.sweep_from, -1e4, 1e4);
  num("sweep", "to", c.sweep_to, -1e4, 1e4);
  integer("sweep", "points", c.sweep_points, 0, 100000);
  if (const auto* e = opt("sweep", "with_fidelity")) c.sweep_fidelity = parse_bool(doc, *e);

  doc.reject_unused();
  try {
    c.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(doc.source() + ": " + err.what());
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  IniDocument doc = IniDocument::load(path);
  return resolve_config(doc, std::filesystem::path(path).parent_path().string());
}

std::map<std::string, std::map<std::string, std::string>> to_sections(const ScenarioConfig& c) {
  std::map<std::string, std::map<std::string, std::string>> s;
  const auto& p = c.physics;
  s["scenario"]["name"] = c.name;
  s["scenario"]["output_dir"] = c.output_dir;
  s["physics"]["atom_mass_amu"] = format_scaled(p.atom_mass_kg, constants::amu);
  s["physics"]["lattice_const_nm"] = format_scaled(p.lattice_const_m, 1e-9);
  s["physics"]["scattering_length_nm"] = format_scaled(p.scattering_length_m, 1e-9);
  s["physics"]["v0_recoil"] = format_double(p.v0_recoil);
  s["physics"]["v0p_recoil"] = format_double(p.v0p_recoil);
  s["physics"]["theta_over_pi"] = format_scaled(p.theta, std::numbers::pi);
  s["physics"]["tilt_recoil"] = format_double(p.tilt_recoil);
  s["physics"]["n_sites"] = std::to_string(p.n_sites);
  s["physics"]["n_orbitals"] = std::to_string(p.n_orbitals);

  auto& sc = s["schedule"];
  sc["duration_ms"] = format_double(c.duration_ms);
  sc["window_from_ms"] = format_double(c.window_from_ms);
  sc["window_to_ms"] = format_double(c.window_to_ms);
  sc["round_time_ms"] = c.round_time_ms;
  sc["shift_time_ms"] = c.shift_time_ms;
  sc["second_round_ms"] = c.second_round_ms;
  sc["shift_method"] = to_string(c.shift_method);
  std::string sizes;
  for (int n : c.sizes) sizes += (sizes.empty() ? "" : " ") + std::to_string(n);
  sc["sizes"] = sizes;
  const auto& r = c.retune_request;
  const bool as = r.knob == ResonanceKnob::ScatteringLength;
  sc["retune"] = c.retune ? (as ? "aS" : "V0p") : "none";
  sc["detuning_recoil"] = std::isnan(r.target_recoil) ? "auto" : format_double(r.target_recoil);
  sc["detuning_sign"] = std::to_string(r.detuning_sign);
  sc["retune_bond"] = std::to_string(r.bond);
  sc["retune_lo"] = as ? format_scaled(r.lo, 1e-9) : format_double(r.lo);
  sc["retune_hi"] = as ? format_scaled(r.hi, 1e-9) : format_double(r.hi);

  auto& nm = s["numerics"];
  nm["cutoff"] = std::to_string(c.bands.cutoff);
  nm["n_q"] = std::to_string(c.bands.n_q);
  nm["n_periods"] = std::to_string(c.bands.n_periods);
  nm["samples_per_period"] = std::to_string(c.bands.samples_per_period);
  nm["krylov_tol"] = format_double(c.run.evolve.krylov.tolerance);
  nm["krylov_min_dim"] = std::to_string(c.run.evolve.krylov.min_dim);
  nm["krylov_max_dim"] = std::to_string(c.run.evolve.krylov.max_dim);
  nm["sample_interval_ms"] = format_double(c.run.sample_interval_ms);
  nm["interaction"] = to_string(c.run.evolve.interaction);

  auto& sw = s["sweep"];
  sw["param"] = c.sweep_param;
  sw["from"] = format_double(c.sweep_from);
  sw["to"] = format_double(c.sweep_to);
  sw["points"] = std::to_string(c.sweep_points);
  sw["with_fidelity"] = c.sweep_fidelity ? "true" : "false";
  return s;
}

std::string to_ini(const ScenarioConfig& c) {
  std::ostringstream out;
  bool first = true;
  // Fixed section order so the file reads top-down.
  const auto sections = to_sections(c);
  for (const char* name : {"scenario", "physics", "schedule", "numerics", "sweep"}) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (const auto& [k, v] : sections.at(name)) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace orbitq
