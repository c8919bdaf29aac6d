#pragma once

#include <numbers>

namespace orbitq {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;               // J s
inline constexpr double planck = 2.0 * std::numbers::pi * hbar;  // J s
inline constexpr double amu = 1.66053906660e-27;                // kg
inline constexpr double potassium40_mass = 39.96399848 * amu;   // kg
}  // namespace constants

/// Experimental knobs. Lengths and masses in SI; energies in recoil units.
///
/// Potentials along the chain (x in metres, a the lattice constant):
///   V(x)  = (v0_recoil / 2)  * cos(2 pi x / a)
///   V'(x) = (v0p_recoil / 2) * cos(pi x / a + theta)
/// Site i sits at the minimum x_i = (i + 1/2) a. The tilt adds tilt_recoil * i
/// to every orbital of site i.
struct PhysicalConfig {
  double atom_mass_kg = constants::potassium40_mass;
  double lattice_const_m = 413e-9;
  double scattering_length_m = -50e-9;
  double v0_recoil = 10.0;
  double v0p_recoil = 0.0;
  double theta = std::numbers::pi / 2.0;
  double tilt_recoil = 0.0;
  int n_sites = 2;
  int n_orbitals = 2;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

/// Recoil energy E_r = hbar^2 k_L^2 / (2M) with k_L = pi / a, plus the
/// conversions between recoil units, SI energy, frequency and the angular
/// rate used by the time evolution (radians per millisecond).
class RecoilEnergy {
 public:
  RecoilEnergy(double atom_mass_kg, double lattice_const_m);

  double joules() const { return joules_; }
  double hertz() const { return joules_ / constants::planck; }
  // E_r / hbar in 1/ms: phase accumulated per ms by a 1 E_r level.
  double rate_per_ms() const { return joules_ / constants::hbar * 1e-3; }

  double to_joules(double e_recoil) const { return e_recoil * joules_; }
  double from_joules(double e_joules) const { return e_joules / joules_; }
  double to_hertz(double e_recoil) const { return e_recoil * hertz(); }
  double from_hertz(double f_hz) const { return f_hz / hertz(); }
  double to_rate_per_ms(double e_recoil) const { return e_recoil * rate_per_ms(); }
  double from_rate_per_ms(double w) const { return w / rate_per_ms(); }

 private:
  double joules_;
};

RecoilEnergy recoil_energy(const PhysicalConfig& cfg);

}  // namespace orbitq
