#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbitq/config.hpp"
#include "orbitq/lattice_params.hpp"
#include "orbitq/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ScratchDir {
  fs::path path;
  ScratchDir() : path(fs::temp_directory_path() / ("orbitq_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

const fs::path& scratch() {
  static const ScratchDir dir;
  return dir.path;
}

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Result cli(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = env + " '" + std::string(ORBITQ_CLI_PATH) + "' " + args + " > '" + out.string() + "' 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / (name + ".ini");
  std::ofstream(p) << text;
  return p;
}

std::string bell_config(const std::string& out_dir, const std::string& extra_schedule = "duration_ms = 2.5\n") {
  return "[scenario]\nname = fig3-bell\noutput_dir = " + out_dir +
         "\n[schedule]\n" + extra_schedule + "[numerics]\nsample_interval_ms = 0.05\n";
}

std::vector<std::vector<std::string>> read_table(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> row;
    std::string cell;
    while (ls >> cell) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  FAIL("missing column " << name);
  return -1;
}

}  // namespace

TEST_CASE("run writes outputs whose digests match the manifest") {
  const fs::path cfg = write_config("bell", bell_config("bell_out"));
  const Result r = cli("run '" + cfg.string() + "'");
  REQUIRE(r.code == 0);
  const fs::path out_dir = scratch() / "bell_out";
  CHECK(r.out.find((out_dir / "manifest.json").string()) != std::string::npos);
  const json m = json::parse(slurp(out_dir / "manifest.json"));
  CHECK(m["status"] == "ok");
  CHECK(m["version"] == orbitq::kVersion);
  CHECK(m["resolved_config"]["physics"]["v0p_recoil"] == "6.2");
  REQUIRE(m["outputs"].size() >= 3);
  for (const auto& o : m["outputs"]) {
    const fs::path p = out_dir / o["path"].get<std::string>();
    CHECK(o["sha256"] == orbitq::sha256_file(p.string()));
    CHECK(o["bytes"].get<std::uintmax_t>() == fs::file_size(p));
  }
  CHECK(m["diagnostics"]["peak"]["F"].get<double>() > 0.9);
  CHECK(m["diagnostics"]["run"]["max_norm_drift"].get<double>() < 1e-9);
}

TEST_CASE("repeated runs are byte-identical") {
  const fs::path cfg = write_config("bell_a", bell_config("rep_a"));
  const fs::path cfg2 = write_config("bell_b", bell_config("rep_b"));
  REQUIRE(cli("run '" + cfg.string() + "'").code == 0);
  REQUIRE(cli("run '" + cfg2.string() + "'", "ORBITQ_NUM_THREADS=1").code == 0);
  for (const char* f : {"trace.tsv", "params.tsv"})
    CHECK(slurp(scratch() / "rep_a" / f) == slurp(scratch() / "rep_b" / f));
}

TEST_CASE("the resolved configuration reproduces the run") {
  const fs::path cfg = write_config("bell_c", bell_config("rep_c"));
  REQUIRE(cli("run '" + cfg.string() + "'").code == 0);
  const fs::path resolved = scratch() / "rep_c" / "resolved.ini";
  const std::string first = slurp(scratch() / "rep_c" / "trace.tsv");
  REQUIRE(cli("run '" + resolved.string() + "'").code == 0);
  CHECK(slurp(scratch() / "rep_c" / "trace.tsv") == first);
}

TEST_CASE("configuration errors exit with code 2") {
  const fs::path bad = write_config("bad", "[scenario]\nname = fig3-bell\n[physics]\nv0_recoil = deep\n");
  Result r = cli("run '" + bad.string() + "'");
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.ini:4:13") != std::string::npos);
  CHECK(cli("run '" + (scratch() / "missing.ini").string() + "'").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("").code == 2);
  const fs::path ok = write_config("ok", bell_config("env_out"));
  CHECK(cli("run '" + ok.string() + "'", "ORBITQ_NUM_THREADS=lots").code == 2);
  CHECK(cli("sweep '" + ok.string() + "' --param kappa --from 0 --to 1 --points 2").code == 2);
  CHECK(cli("sweep '" + ok.string() + "' --param V0p --from 5 --to 6 --points 0").code == 2);
}

TEST_CASE("empty schedule records the prepared state") {
  const fs::path cfg = write_config("empty", bell_config("empty_out", "duration_ms = 0\n"));
  REQUIRE(cli("run '" + cfg.string() + "'").code == 0);
  const auto rows = read_table(scratch() / "empty_out" / "trace.tsv");
  REQUIRE(rows.size() == 2);
  const auto& h = rows[0];
  CHECK(std::stod(rows[1][column(h, "tau_ms")]) == 0.0);
  CHECK(std::stod(rows[1][column(h, "F_raw")]) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::stod(rows[1][column(h, "F")]) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::stod(rows[1][column(h, "D")]) == 0.0);
  CHECK(std::stod(rows[1][column(h, "P_suc")]) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a one-point sweep agrees with the run at the same working point") {
  const std::string text = bell_config("one_point") + "[sweep]\nwith_fidelity = true\n";
  const fs::path cfg = write_config("one_point", text);
  REQUIRE(cli("sweep '" + cfg.string() + "' --param V0p --from 6.2 --to 6.2 --points 1").code == 0);
  const auto rows = read_table(scratch() / "one_point" / "sweep.tsv");
  REQUIRE(rows.size() == 2);
  const double sweep_f = std::stod(rows[1][column(rows[0], "peak_F")]);

  const fs::path run_cfg = write_config("one_point_run", bell_config("one_point_run"));
  REQUIRE(cli("run '" + run_cfg.string() + "'").code == 0);
  const json m = json::parse(slurp(scratch() / "one_point_run" / "manifest.json"));
  CHECK(sweep_f == doctest::Approx(m["diagnostics"]["peak"]["F"].get<double>()).epsilon(1e-9));
}

TEST_CASE("theta sweep: intra-orbital superlattice hopping vanishes at pi/2") {
  const fs::path cfg = write_config("theta", bell_config("theta_out"));
  REQUIRE(cli("sweep '" + cfg.string() + "' --param theta --from 0 --to 1 --points 11").code == 0);
  const auto rows = read_table(scratch() / "theta_out" / "sweep.tsv");
  REQUIRE(rows.size() == 12);
  const int c = column(rows[0], "jp11");
  std::size_t best = 1;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (std::abs(std::stod(rows[k][c])) < std::abs(std::stod(rows[best][c]))) best = k;
  CHECK(std::stod(rows[best][0]) == doctest::Approx(0.5));
  CHECK(std::abs(std::stod(rows[best][c])) < 1e-10);
}

TEST_CASE("V0' sweep: Ising sign flip brackets the resonance") {
  const fs::path cfg = write_config("v0p", bell_config("v0p_out"));
  REQUIRE(cli("sweep '" + cfg.string() + "' --param V0p --from 4 --to 9 --points 26").code == 0);
  const auto rows = read_table(scratch() / "v0p_out" / "sweep.tsv");
  const int res = column(rows[0], "residual_recoil");
  const int jis = column(rows[0], "j_ising_recoil");
  int flip = -1;
  for (std::size_t k = 2; k < rows.size(); ++k)
    if ((std::stod(rows[k - 1][res]) > 0) != (std::stod(rows[k][res]) > 0)) {
      flip = static_cast<int>(k);
      break;
    }
  REQUIRE(flip > 0);
  const double lo = std::stod(rows[flip - 1][0]), hi = std::stod(rows[flip][0]);
  CHECK((std::stod(rows[flip - 1][jis]) > 0) != (std::stod(rows[flip][jis]) > 0));

  orbitq::PhysicalConfig pc = orbitq::preset("fig3-bell").physics;
  const auto sp = orbitq::solve_single_particle(pc);
  const auto root = orbitq::find_resonance(orbitq::ResonanceKnob::SuperlatticeDepth, 0, pc, sp, lo, hi);
  CHECK(root.knob_value > lo);
  CHECK(root.knob_value < hi);
}

TEST_CASE("a failing sweep point gives a partial result and exit code 3") {
  const fs::path cfg = write_config("partial",
                                    "[scenario]\nname = fig3-bell\noutput_dir = partial\n[schedule]\nretune_bond = 5\n");
  const Result r = cli("sweep '" + cfg.string() + "' --param V0p --from 5 --to 6 --points 3");
  CHECK(r.code == 3);
  const json m = json::parse(slurp(scratch() / "partial" / "manifest.json"));
  CHECK(m["status"] == "partial");
  CHECK(m["diagnostics"]["failed_points"].size() >= 1);
  const auto rows = read_table(scratch() / "partial" / "sweep.tsv");
  CHECK(rows.size() == 4);
}

TEST_CASE("bands subcommand") {
  const fs::path cfg = write_config("bands", bell_config("bands_out"));
  REQUIRE(cli("bands '" + cfg.string() + "'").code == 0);
  CHECK(fs::exists(scratch() / "bands_out" / "bands.tsv"));
  CHECK(fs::exists(scratch() / "bands_out" / "wannier.tsv"));
  const json m = json::parse(slurp(scratch() / "bands_out" / "manifest.json"));
  CHECK(m["diagnostics"]["next_nearest_ratio"][0].get<double>() < 0.03);
}

TEST_CASE("shipped scenario files resolve") {
  for (const auto& entry : fs::directory_iterator(ORBITQ_SCENARIO_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(orbitq::load_config(entry.path().string()));
  }
}

TEST_CASE("params scenario end to end") {
  const fs::path cfg = write_config("params", "[scenario]\nname = fig1-params\noutput_dir = params_out\n");
  REQUIRE(cli("run '" + cfg.string() + "'").code == 0);
  const json m = json::parse(slurp(scratch() / "params_out" / "manifest.json"));
  CHECK(m["diagnostics"]["abs_J_prime_12"].get<double>() == doctest::Approx(0.02293).epsilon(1e-3));
  CHECK(fs::exists(scratch() / "params_out" / "bonds.tsv"));
}
