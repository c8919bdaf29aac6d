#include "orbitq/lattice_params.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Superlattice potential (E_r) at x in units of a.
double superlattice(const PhysicalConfig& cfg, double x) {
  return 0.5 * cfg.v0p_recoil * std::cos(kPi * x + cfg.theta);
}

VirtualHop make_hop(const HubbardParams& p, int source, int target, double coupling) {
  VirtualHop hop;
  hop.source = source;
  hop.target = target;
  hop.delta = (p.onsite(target, 1) - p.onsite(source, 0));
  hop.coupling = coupling;
  hop.residual = hop.delta + p.U(0, 1);
  return hop;
}

double channel_ising(const VirtualHop& h, double guard, bool& flagged) {
  if (std::abs(h.residual) < guard || std::abs(h.delta) < guard) {
    flagged = true;
    return kNaN;
  }
  const double j2 = h.coupling * h.coupling;
  return j2 / h.residual - j2 / h.delta;
}

}  // namespace

SingleParticleSolution solve_single_particle(const PhysicalConfig& cfg, const BandNumerics& numerics) {
  cfg.validate();
  SingleParticleSolution sp;
  sp.bands = solve_bands(cfg, numerics.cutoff, numerics.n_q);
  sp.wannier = build_wannier(sp.bands, numerics.n_periods, numerics.samples_per_period, cfg.n_orbitals);
  double w4 = 0.0;
  for (double w : sp.wannier.orbital(0)) w4 += w * w * w * w;
  sp.transverse_w4 = w4 * sp.wannier.dx;
  return sp;
}

HubbardParams compute_base_params(const SingleParticleSolution& sp, const PhysicalConfig& cfg) {
  cfg.validate();
  const int n_orb = cfg.n_orbitals;
  if (sp.wannier.n_bands() < n_orb || sp.bands.n_bands() < n_orb)
    throw ConfigError("single-particle solution has fewer bands than n_orbitals");

  HubbardParams p;
  p.n_sites = cfg.n_sites;
  p.n_orbitals = n_orb;
  p.eps.resize(n_orb);
  p.hop.resize(n_orb, n_orb);
  p.U.resize(n_orb, n_orb);
  for (int a = 0; a < n_orb; ++a) {
    p.eps[a] = sp.bands.band_center(a);
    for (int b = 0; b < n_orb; ++b)
      p.hop(a, b) = (a == b) ? sp.bands.hopping(a, 1) : momentum_space_hopping(sp.bands, a, b, 1);
  }

  // 4 pi hbar^2 a_S / M in units of E_r a^3 is (8/pi)(a_S/a).
  const double coupling = 8.0 / kPi * cfg.scattering_length_m / cfg.lattice_const_m;
  const double transverse = sp.transverse_w4 * sp.transverse_w4;
  const auto& w = sp.wannier.orbitals;
  for (int a = 0; a < n_orb; ++a) {
    for (int b = a; b < n_orb; ++b) {
      double integral = 0.0;
      for (int k = 0; k < sp.wannier.n_samples(); ++k) integral += w[a][k] * w[a][k] * w[b][k] * w[b][k];
      p.U(a, b) = p.U(b, a) = coupling * integral * sp.wannier.dx * transverse;
    }
  }

  p.eps_prime = Eigen::MatrixXd::Zero(cfg.n_sites, n_orb);
  p.hop_prime.assign(cfg.n_sites - 1, Eigen::MatrixXd::Zero(n_orb, n_orb));
  p.tilt.resize(cfg.n_sites);
  for (int i = 0; i < cfg.n_sites; ++i) p.tilt[i] = cfg.tilt_recoil * i;
  return p;
}

void compute_superlattice_params(HubbardParams& p, const WannierSet& wannier, const PhysicalConfig& cfg) {
  const int n_orb = p.n_orbitals;
  if (cfg.n_sites != p.n_sites) throw ConfigError("superlattice: site count mismatch");
  p.eps_prime = Eigen::MatrixXd::Zero(p.n_sites, n_orb);
  p.hop_prime.assign(p.n_sites - 1, Eigen::MatrixXd::Zero(n_orb, n_orb));
  if (cfg.v0p_recoil == 0.0) return;

  const int n = wannier.n_samples();
  std::vector<double> potential(n);
  for (int site = 0; site < p.n_sites; ++site) {
    // Window samples are positions relative to site 0; shift them to this site.
    for (int k = 0; k < n; ++k) potential[k] = superlattice(cfg, wannier.x[k] + site);
    for (int a = 0; a < n_orb; ++a) {
      const auto wa = wannier.orbital(a);
      double diag = 0.0;
      for (int k = 0; k < n; ++k) diag += wa[k] * wa[k] * potential[k];
      p.eps_prime(site, a) = diag * wannier.dx;
      if (site + 1 == p.n_sites) continue;
      for (int b = 0; b < n_orb; ++b) {
        double off = 0.0;
        for (int k = 0; k < n; ++k) off += wa[k] * potential[k] * wannier.value(b, 1, k);
        p.hop_prime[site](a, b) = off * wannier.dx;
      }
    }
  }
}

HubbardParams compute_params(const SingleParticleSolution& sp, const PhysicalConfig& cfg) {
  HubbardParams p = compute_base_params(sp, cfg);
  compute_superlattice_params(p, sp.wannier, cfg);
  return p;
}

double next_nearest_ratio(const BandStructure& bands, int band) {
  return std::abs(bands.hopping(band, 2)) / std::abs(bands.hopping(band, 1));
}

const VirtualHop& BondDiagnostics::active() const {
  return into_left.delta <= into_right.delta ? into_left : into_right;
}

PerturbativeDiagnostics perturbative_ising(const HubbardParams& p, double guard) {
  if (p.n_orbitals < 2) throw ConfigError("perturbative_ising needs two orbitals");
  PerturbativeDiagnostics d;
  d.guard = guard;
  d.j_heisenberg = (p.U(0, 0) != 0.0) ? p.hop(0, 0) * p.hop(0, 0) / p.U(0, 0) : kNaN;
  for (int b = 0; b < p.n_bonds(); ++b) {
    BondDiagnostics bond;
    bond.into_left = make_hop(p, b + 1, b, p.hop(1, 0) + p.hop_prime[b](1, 0));
    bond.into_right = make_hop(p, b, b + 1, p.hop(0, 1) + p.hop_prime[b](0, 1));
    bool flagged = false;
    const double left = channel_ising(bond.into_left, guard, flagged);
    const double right = channel_ising(bond.into_right, guard, flagged);
    bond.on_resonance = flagged;
    bond.j_ising = flagged ? kNaN : left + right;
    d.bonds.push_back(bond);
  }
  return d;
}

double resonance_residual(const HubbardParams& p, int bond) {
  if (bond < 0 || bond >= p.n_bonds()) throw ConfigError("bond index out of range");
  // Large guard is irrelevant here: only the gaps are needed.
  return perturbative_ising(p, 0.0).bonds[bond].active().residual;
}

ResonanceResult find_resonance(ResonanceKnob knob, int bond, const PhysicalConfig& cfg,
                               const SingleParticleSolution& sp, double lo, double hi, double target,
                               double tolerance) {
  auto evaluate = [&](double value) {
    PhysicalConfig c = cfg;
    if (knob == ResonanceKnob::ScatteringLength)
      c.scattering_length_m = value;
    else
      c.v0p_recoil = value;
    return resonance_residual(compute_params(sp, c), bond) - target;
  };

  double f_lo = evaluate(lo);
  const double f_hi = evaluate(hi);
  if (f_lo == 0.0) return {lo, 0.0, 0};
  if (f_hi == 0.0) return {hi, 0.0, 0};
  if ((f_lo > 0) == (f_hi > 0)) {
    std::ostringstream msg;
    msg << "find_resonance: no sign change in bracket [" << lo << ", " << hi
        << "]; residuals " << f_lo << " and " << f_hi << " E_r";
    throw NumericError(msg.str());
  }

  ResonanceResult r;
  for (r.iterations = 1; r.iterations <= 200; ++r.iterations) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = evaluate(mid);
    r.knob_value = mid;
    r.residual = f_mid;
    if (std::abs(f_mid) < tolerance || mid == lo || mid == hi) return r;
    if ((f_mid > 0) == (f_lo > 0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  throw NumericError("find_resonance: bisection did not reach tolerance");
}

void write_params_report(std::ostream& os, const HubbardParams& p) {
  os.precision(12);
  os << "# orbital eps_recoil J_recoil U_row\n";
  for (int a = 0; a < p.n_orbitals; ++a) {
    os << "# " << a + 1 << ' ' << p.eps[a] << ' ' << p.hop(a, a);
    for (int b = 0; b < p.n_orbitals; ++b) os << ' ' << p.U(a, b);
    os << '\n';
  }
  os << "kind site orbital_a orbital_b value_recoil\n";
  for (int i = 0; i < p.n_sites; ++i)
    for (int a = 0; a < p.n_orbitals; ++a)
      os << "eps_prime " << i << ' ' << a + 1 << ' ' << a + 1 << ' ' << p.eps_prime(i, a) << '\n';
  for (int b = 0; b < p.n_bonds(); ++b)
    for (int a = 0; a < p.n_orbitals; ++a)
      for (int c = 0; c < p.n_orbitals; ++c)
        os << "hop_prime " << b << ' ' << a + 1 << ' ' << c + 1 << ' ' << p.hop_prime[b](a, c) << '\n';
  for (int a = 0; a < p.n_orbitals; ++a)
    for (int c = 0; c < p.n_orbitals; ++c)
      os << "hop " << 0 << ' ' << a + 1 << ' ' << c + 1 << ' ' << p.hop(a, c) << '\n';
  for (int i = 0; i < p.n_sites; ++i) os << "tilt " << i << " 0 0 " << p.tilt[i] << '\n';
}

ResonanceKnob parse_resonance_knob(const std::string& name) {
  if (name == "aS" || name == "a_s" || name == "scattering_length") return ResonanceKnob::ScatteringLength;
  if (name == "V0p" || name == "v0p") return ResonanceKnob::SuperlatticeDepth;
  throw ConfigError("unknown resonance knob '" + name + "' (expected aS or V0p)");
}

}  // namespace orbitq
