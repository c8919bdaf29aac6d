#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <string>

#include "orbitq/config.hpp"
#include "orbitq/error.hpp"

using namespace orbitq;

namespace {

std::string error_of(const std::string& text) {
  try {
    IniDocument doc = IniDocument::parse(text, "test.ini");
    resolve_config(doc, "/tmp");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("parse errors carry line and column") {
  CHECK(contains(error_of("name = x\n"), "test.ini:1:1"));
  CHECK(contains(error_of("[scenario]\n  name\n"), "test.ini:2:3: expected 'key = value'"));
  CHECK(contains(error_of("[scenario\n"), "test.ini:1:9: section header missing ']'"));
  CHECK(contains(error_of("[scenario]\nname = bell\nname = bell\n"), "test.ini:3:1: duplicate key"));
  CHECK(contains(error_of("[scenario]\nname =\n"), "test.ini:2:7: empty value"));
  CHECK(contains(error_of("[scenario]\nna me = bell\n"), "invalid key"));
}

TEST_CASE("value errors point at the value") {
  const std::string head = "[scenario]\nname = bell\n[physics]\n";
  CHECK(contains(error_of(head + "v0_recoil = deep\n"), "test.ini:4:13: expected a number, got 'deep'"));
  CHECK(contains(error_of(head + "n_sites = 2.5\n"), "test.ini:4:11: expected an integer"));
  CHECK(contains(error_of(head + "v0_recoil = -3\n"), "test.ini:4:13: value -3 outside"));
  CHECK(contains(error_of(head + "n_sites = 3\n"), "n_sites"));
  CHECK(contains(error_of(head + "v0_recoil = nan\n"), "expected a number"));
  CHECK(contains(error_of("[scenario]\nname = pairwise\n[schedule]\nshift_method = swap\n"),
                 "test.ini:4:16: unknown shift method"));
  CHECK(contains(error_of("[scenario]\nname = bell\n[numerics]\ninteraction = hubbard\n"), "unknown interaction model"));
  CHECK(contains(error_of("[scenario]\nname = bell\n[schedule]\ndetuning_sign = 2\n"), "detuning_sign must be 1 or -1"));
  CHECK(contains(error_of("[scenario]\nname = bell\n[schedule]\nsizes = 4 5\n"), "pairwise sizes"));
  CHECK(contains(error_of("[scenario]\nname = bell\n[numerics]\nkrylov_min_dim = 30\nkrylov_max_dim = 10\n"),
                 "Krylov dimensions"));
}

TEST_CASE("unknown keys, sections and scenarios are rejected") {
  CHECK(contains(error_of("[scenario]\nname = bell\n[physics]\nv0 = 10\n"), "test.ini:4:1: unknown key 'v0' in [physics]"));
  CHECK(contains(error_of("[scenario]\nname = bell\n[extras]\nfoo = 1\n"), "unknown key 'foo' in [extras]"));
  CHECK(contains(error_of("[scenario]\nname = fig9\n"), "unknown scenario 'fig9'"));
  CHECK(contains(error_of("[physics]\nv0_recoil = 10\n"), "missing key 'name'"));
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("comments and whitespace") {
  IniDocument doc = IniDocument::parse("# header\n[scenario] ; trailing\n  name = bell   # why not\n\n", "c.ini");
  const ScenarioConfig c = resolve_config(doc, "/base");
  CHECK(c.name == "bell");
  CHECK(c.output_dir == "/base/out/bell");
}

TEST_CASE("presets") {
  const ScenarioConfig fig1 = preset("fig1-params");
  CHECK(fig1.physics.v0_recoil == 15.0);
  CHECK(fig1.physics.v0p_recoil == 4.0);
  CHECK(fig1.physics.n_sites == 4);
  const ScenarioConfig fig3 = preset("fig3-bell");
  CHECK(fig3.physics.v0_recoil == 10.0);
  CHECK(fig3.physics.v0p_recoil == 6.2);
  CHECK(fig3.physics.scattering_length_m == doctest::Approx(-50e-9));
  CHECK(fig3.physics.theta == doctest::Approx(std::numbers::pi / 2));
  CHECK(fig3.duration_ms == 2.5);
  const ScenarioConfig shift = preset("fig5c-shift");
  CHECK(shift.kind() == ScenarioKind::Shift);
  CHECK(shift.shift_time_ms == "3.7");
  CHECK(shift.retune);
  CHECK(preset("pairwise").kind() == ScenarioKind::Pairwise);
}

TEST_CASE("units are converted on input") {
  IniDocument doc = IniDocument::parse(
      "[scenario]\nname = bell\noutput_dir = /abs/dir\n[physics]\nlattice_const_nm = 500\n"
      "scattering_length_nm = -80\ntheta_over_pi = 0.25\n[schedule]\nretune = aS\nretune_lo = -200\n",
      "u.ini");
  const ScenarioConfig c = resolve_config(doc);
  CHECK(c.output_dir == "/abs/dir");
  CHECK(c.physics.lattice_const_m == doctest::Approx(500e-9));
  CHECK(c.physics.scattering_length_m == doctest::Approx(-80e-9));
  CHECK(c.physics.theta == doctest::Approx(std::numbers::pi / 4));
  CHECK(c.retune);
  CHECK(c.retune_request.lo == doctest::Approx(-200e-9));

  IniDocument v0p = IniDocument::parse("[scenario]\nname = pairwise\n[schedule]\nretune = V0p\n", "v.ini");
  const ScenarioConfig d = resolve_config(v0p);
  CHECK(d.retune_request.knob == ResonanceKnob::SuperlatticeDepth);
  CHECK(d.retune_request.hi == 20.0);
}

TEST_CASE("resolved configuration round-trips through INI text") {
  for (const char* name : {"fig1-params", "fig3-bell", "fig5-pairwise", "fig5c-shift"}) {
    CAPTURE(name);
    ScenarioConfig c = preset(name);
    c.output_dir = "/tmp/x";
    c.physics.scattering_length_m = -85.80123456789e-9;
    c.physics.theta = 0.1 * std::numbers::pi;
    c.run.sample_interval_ms = 0.005;
    c.sizes = {2, 4, 8};
    c.retune_request.target_recoil = -0.0145;
    const std::string text = to_ini(c);
    IniDocument doc = IniDocument::parse(text, "rt.ini");
    const ScenarioConfig back = resolve_config(doc);
    CHECK(to_ini(back) == text);
    CHECK(back.physics.scattering_length_m == c.physics.scattering_length_m);
    CHECK(back.physics.theta == doctest::Approx(c.physics.theta).epsilon(1e-15));
  }
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(6.2) == "6.2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
