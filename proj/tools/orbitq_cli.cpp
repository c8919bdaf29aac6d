#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "orbitq/config.hpp"
#include "orbitq/error.hpp"
#include "orbitq/manifest.hpp"
#include "orbitq/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void apply_thread_override() {
  const char* env = std::getenv("ORBITQ_NUM_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024)
    throw orbitq::ConfigError(std::string("ORBITQ_NUM_THREADS must be a positive integer, got '") + env + "'");
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(n));
#endif
}

// Runs `body` and writes the manifest even when it throws.
template <typename Body>
int guarded(orbitq::RunManifest& manifest, Body&& body) {
  try {
    const bool ok = body();
    if (!ok) manifest.set_status("partial");
    std::cout << manifest.write() << '\n';
    return ok ? 0 : kExitNumeric;
  } catch (const orbitq::ConfigError& e) {
    manifest.set_status("failed", e.what());
    try { manifest.write(); } catch (...) {}
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    manifest.set_status("failed", e.what());
    try { manifest.write(); } catch (...) {}
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiorbital lattice cluster-state simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the scenario described by a configuration file");
  run->add_option("config", config_path, "Configuration file")->required();

  auto* sweep = app.add_subcommand("sweep", "Evaluate the scenario over a parameter grid");
  sweep->add_option("config", config_path, "Configuration file")->required();
  orbitq::SweepSpec spec;
  bool have_param = false, have_from = false, have_to = false, have_points = false;
  sweep->add_option("--param", spec.param, "theta (units of pi), V0p (E_r), aS (nm) or g (E_r)")
      ->check(CLI::IsMember({"theta", "V0p", "aS", "g"}))
      ->each([&](const std::string&) { have_param = true; });
  sweep->add_option("--from", spec.from, "First grid value")->each([&](const std::string&) { have_from = true; });
  sweep->add_option("--to", spec.to, "Last grid value")->each([&](const std::string&) { have_to = true; });
  sweep->add_option("--points", spec.points, "Number of grid points")->each([&](const std::string&) { have_points = true; });

  auto* bands = app.add_subcommand("bands", "Write band energies and Wannier orbitals");
  bands->add_option("config", config_path, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  orbitq::ScenarioConfig cfg;
  try {
    apply_thread_override();
    cfg = orbitq::load_config(config_path);
  } catch (const orbitq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::string command = app.get_subcommands().front()->get_name();
  orbitq::RunManifest manifest(command + " " + config_path, cfg.output_dir);

  if (run->parsed())
    return guarded(manifest, [&] {
      orbitq::run_scenario(cfg, manifest);
      return true;
    });
  if (bands->parsed())
    return guarded(manifest, [&] {
      orbitq::run_bands(cfg, manifest);
      return true;
    });
  return guarded(manifest, [&] {
    if (!have_param) spec.param = cfg.sweep_param;
    if (!have_from) spec.from = cfg.sweep_from;
    if (!have_to) spec.to = cfg.sweep_to;
    if (!have_points) spec.points = cfg.sweep_points;
    return orbitq::run_sweep(cfg, spec, manifest);
  });
}
