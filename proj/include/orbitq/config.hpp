#pragma once

#include <map>
#include <string>
#include <vector>

#include "orbitq/dynamics.hpp"
#include "orbitq/lattice_params.hpp"
#include "orbitq/protocol.hpp"

namespace orbitq {

/// Sectioned key = value text. '#' and ';' start comments. Keys outside a
/// section, duplicate keys and malformed lines are errors with line:column.
class IniDocument {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    int column = 0;      // of the value
    int key_column = 0;
    bool used = false;
  };

  static IniDocument parse(const std::string& text, const std::string& source = "<config>");
  static IniDocument load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  // Marks the entry consumed; throws if missing.
  const Entry& take(const std::string& section, const std::string& key);
  // Throws ConfigError naming the first entry nobody consumed.
  void reject_unused() const;
  const std::string& source() const { return source_; }
  std::string where(const Entry& e) const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

enum class ScenarioKind { Params, Bell, Pairwise, Shift };

ScenarioKind scenario_kind(const std::string& name);

/// A fully resolved run description; every optional key has a value here.
struct ScenarioConfig {
  std::string name = "fig3-bell";
  std::string output_dir = "out";
  PhysicalConfig physics;

  // [schedule]
  double duration_ms = 2.5;          // Bell and params runs
  double window_from_ms = 1.0;       // peak search window
  double window_to_ms = 2.5;
  std::string round_time_ms = "auto";  // pairwise / shift: number or auto
  std::string shift_time_ms = "3.7";   // shift: number or auto
  std::string second_round_ms = "equal";  // number or equal
  ShiftMethod shift_method = ShiftMethod::FlipTilt;
  std::vector<int> sizes = {4, 6};   // pairwise
  bool retune = false;
  RetuneRequest retune_request;

  // [numerics]
  BandNumerics bands;
  RunNumerics run;

  // [sweep]
  std::string sweep_param = "V0p";
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  int sweep_points = 0;
  bool sweep_fidelity = false;

  ScenarioKind kind() const { return scenario_kind(name); }
  void validate() const;
};

/// Preset for a scenario name: the working point of the corresponding figure.
ScenarioConfig preset(const std::string& name);

/// Parses the document on top of the preset named in [scenario] name.
/// Relative output directories are resolved against `base_dir`.
ScenarioConfig resolve_config(IniDocument& doc, const std::string& base_dir = "");
ScenarioConfig load_config(const std::string& path);

/// Every key of the resolved configuration, in the same sectioned form the
/// parser accepts; values use round-trip precision.
std::map<std::string, std::map<std::string, std::string>> to_sections(const ScenarioConfig& cfg);
std::string to_ini(const ScenarioConfig& cfg);

std::string format_double(double v);

}  // namespace orbitq
