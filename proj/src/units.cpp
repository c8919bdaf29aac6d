#include "orbitq/units.hpp"

#include <cmath>
#include <string>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid physical config: " + what);
}

}  // namespace

void PhysicalConfig::validate() const {
  require(std::isfinite(atom_mass_kg) && atom_mass_kg > 0, "atom_mass must be > 0");
  require(std::isfinite(lattice_const_m) && lattice_const_m > 0,
          "lattice constant must be > 0");
  require(std::isfinite(scattering_length_m), "scattering length must be finite");
  require(std::isfinite(v0_recoil) && v0_recoil >= 0, "v0 must be >= 0");
  require(std::isfinite(v0p_recoil) && v0p_recoil >= 0, "v0p must be >= 0");
  require(std::isfinite(theta), "theta must be finite");
  require(std::isfinite(tilt_recoil), "tilt must be finite");
  require(n_sites >= 2 && n_sites % 2 == 0, "n_sites must be even and >= 2");
  require(n_orbitals >= 2, "n_orbitals must be >= 2");
  // Two spins times n_orbitals modes per site must fit a 64-bit occupation mask.
  require(2 * n_orbitals * n_sites <= 64, "too many modes for a 64-bit basis");
}

RecoilEnergy::RecoilEnergy(double atom_mass_kg, double lattice_const_m) {
  if (!(atom_mass_kg > 0) || !(lattice_const_m > 0))
    throw ConfigError("recoil energy needs positive mass and lattice constant");
  const double k = std::numbers::pi / lattice_const_m;
  joules_ = constants::hbar * constants::hbar * k * k / (2.0 * atom_mass_kg);
}

RecoilEnergy recoil_energy(const PhysicalConfig& cfg) {
  return RecoilEnergy(cfg.atom_mass_kg, cfg.lattice_const_m);
}

}  // namespace orbitq
