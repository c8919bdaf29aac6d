#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbitq/bloch.hpp"
#include "orbitq/units.hpp"

namespace orbitq {

/// Grid and basis sizes of the single-particle solution.
struct BandNumerics {
  int cutoff = 16;
  int n_q = 64;
  int n_periods = 41;
  int samples_per_period = 64;
};

/// Bands and Wannier orbitals for one lattice depth. Everything that depends
/// only on V0 lives here so that sweeps over V0', a_S, theta or the tilt can
/// reuse it.
struct SingleParticleSolution {
  BandStructure bands;
  WannierSet wannier;  // n_orbitals bands along x
  // Integral of w_1^4 along one transverse axis (units 1/a). The transverse
  // lattice has the same depth, so this is the lowest x-orbital again.
  double transverse_w4 = 0.0;
};

SingleParticleSolution solve_single_particle(const PhysicalConfig& cfg,
                                             const BandNumerics& numerics = {});

/// Coefficients of the chain Hamiltonian, all in E_r. Orbital indices are
/// 0-based (0 = lowest band). Bond b joins sites b and b + 1 (open chain).
struct HubbardParams {
  int n_sites = 0;
  int n_orbitals = 0;
  std::vector<double> eps;  // per orbital
  Eigen::MatrixXd hop;      // nearest-neighbour <w_{i,a}|H0|w_{i+1,b}>
  Eigen::MatrixXd U;        // on-site contact integrals
  Eigen::MatrixXd eps_prime;              // (n_sites, n_orbitals)
  std::vector<Eigen::MatrixXd> hop_prime;  // per bond: <w_{b,alpha}|V'|w_{b+1,beta}>
  std::vector<double> tilt;                // per site

  double onsite(int site, int orbital) const {
    return eps[orbital] + eps_prime(site, orbital) + tilt[site];
  }
  int n_bonds() const { return n_sites - 1; }
};

/// epsilon, J and U of the unmodulated lattice. eps_prime/hop_prime are
/// zero-filled and the tilt is set from cfg.
HubbardParams compute_base_params(const SingleParticleSolution& sp, const PhysicalConfig& cfg);

/// Adds the superlattice terms epsilon'_{i,alpha} and J'_{i,alpha beta} to p.
void compute_superlattice_params(HubbardParams& p, const WannierSet& wannier,
                                 const PhysicalConfig& cfg);

/// Everything at once, for a configuration.
HubbardParams compute_params(const SingleParticleSolution& sp, const PhysicalConfig& cfg);

/// Hopping beyond nearest neighbours is dropped from the model; this returns
/// |J_alpha(2a)| / |J_alpha(a)| so callers can check what was discarded.
double next_nearest_ratio(const BandStructure& bands, int band);

/// A second-order virtual process: one lowest-orbital atom hops from `source`
/// into the second orbital of the neighbouring `target` site.
struct VirtualHop {
  int source = 0;
  int target = 0;
  double delta = 0.0;      // gap, including superlattice and tilt offsets
  double coupling = 0.0;   // J'_{12} amplitude of the hop
  double residual = 0.0;   // delta + U_12
};

struct BondDiagnostics {
  VirtualHop into_left;   // from site b+1 into site b
  VirtualHop into_right;  // from site b into site b+1
  // The channel with the smaller gap, i.e. the one into the lower site; this
  // is the channel that can be brought to resonance.
  const VirtualHop& active() const;
  double j_ising = 0.0;  // summed over both channels
  bool on_resonance = false;
};

/// Order-of-magnitude estimates with unit proportionality constants:
///   J_Ising = |J'|^2 / (delta + U_12) - |J'|^2 / delta   (per channel)
///   J_Heisenberg = J_11^2 / U_11
/// A channel with |delta + U_12| below `guard` marks the bond on_resonance
/// and its j_ising is NaN.
struct PerturbativeDiagnostics {
  std::vector<BondDiagnostics> bonds;
  double j_heisenberg = 0.0;
  double guard = 1e-4;
};

PerturbativeDiagnostics perturbative_ising(const HubbardParams& p, double guard = 1e-4);

enum class ResonanceKnob { ScatteringLength, SuperlatticeDepth };

struct ResonanceResult {
  double knob_value = 0.0;  // metres for a_S, recoil units for V0'
  double residual = 0.0;    // delta + U_12 - target at knob_value (E_r)
  int iterations = 0;
};

/// Bisects the knob until the active channel of `bond` satisfies
/// delta + U_12 = target to `tolerance` E_r. The bracket must straddle the root.
ResonanceResult find_resonance(ResonanceKnob knob, int bond, const PhysicalConfig& cfg,
                               const SingleParticleSolution& sp, double lo, double hi,
                               double target = 0.0, double tolerance = 1e-6);

/// delta + U_12 of the active channel on `bond`.
double resonance_residual(const HubbardParams& p, int bond);

/// Tabular dump: base parameters, then site/orbital and bond/orbital-pair
/// tables of the superlattice terms.
void write_params_report(std::ostream& os, const HubbardParams& p);

ResonanceKnob parse_resonance_knob(const std::string& name);

}  // namespace orbitq
