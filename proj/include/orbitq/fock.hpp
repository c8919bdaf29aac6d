#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "orbitq/lattice_params.hpp"

namespace orbitq {

enum class Spin : int { Up = 0, Down = 1 };

/// One single-particle mode. Orbitals are 0-based (0 = lowest band).
struct ModeIndex {
  int site = 0;
  Spin spin = Spin::Up;
  int orbital = 0;
};

/// Site-major mode ordering: index = site * 2 n_orb + spin * n_orb + orbital.
/// With two orbitals this is site * 4 + spin * 2 + orbital. All fermionic
/// signs follow from it: a basis state is c+_{m1} c+_{m2} ... |0> with
/// m1 < m2 < ..., so c+_m picks up (-1)^(occupied modes below m).
struct ModeLayout {
  int n_sites = 0;
  int n_orbitals = 2;

  int n_modes() const { return 2 * n_orbitals * n_sites; }
  int index(int site, Spin spin, int orbital) const {
    return site * 2 * n_orbitals + static_cast<int>(spin) * n_orbitals + orbital;
  }
  int index(const ModeIndex& m) const { return index(m.site, m.spin, m.orbital); }
  ModeIndex decode(int mode) const;
  std::uint64_t spin_mask(Spin spin) const;
  std::uint64_t site_mask(int site) const;
  std::uint64_t orbital_mask(int orbital) const;
};

/// Applies c_mode (create = false) or c+_mode (create = true) to a basis
/// state in place. Returns the fermionic sign, or 0 if the state is
/// annihilated (mask left untouched in that case).
int apply_ladder(std::uint64_t& mask, int mode, bool create);

/// Fixed (N_up, N_down) block of the Fock space.
struct SectorBasis {
  ModeLayout layout;
  int n_up = 0;
  int n_down = 0;
  std::vector<std::uint64_t> states;  // strictly increasing

  std::size_t size() const { return states.size(); }
  // Position of mask, or -1 if it is not in this sector.
  std::int64_t find(std::uint64_t mask) const;
};

SectorBasis build_sector(int n_sites, int n_up, int n_down, int n_orbitals = 2);

/// Real sparse matrix in compressed-row form acting on one sector.
struct SparseOperator {
  std::int64_t dim = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> cols;
  std::vector<double> values;
  bool hermitian = false;

  std::size_t nnz() const { return values.size(); }
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
  Eigen::MatrixXd dense() const;
  // max |A_ij - A_ji| over stored entries and their mirrors.
  double asymmetry() const;
  bool is_diagonal() const;
  Eigen::VectorXd diagonal() const;
};

/// DensityOnly: U_ab n_{i up a} n_{i down b} summed over ordered orbital pairs.
/// Su2Exchange adds U_ab c+_{up a} c_{up b} c+_{down b} c_{down a} for a != b
/// (each ordering once, so the pair is its own conjugate). That form commutes
/// with total spin and therefore never entangles the |+> register; it is kept
/// for comparison.
enum class InteractionModel { DensityOnly, Su2Exchange };

InteractionModel parse_interaction_model(const std::string& name);
const char* to_string(InteractionModel model);

/// H + H' + tilt restricted to one sector (E_r). Bond b couples site b to
/// b + 1 through hop + hop_prime[b]; open boundaries.
SparseOperator assemble_hamiltonian(const HubbardParams& p, const SectorBasis& sector,
                                    InteractionModel model = InteractionModel::DensityOnly);

enum class DiagonalObservable {
  DoubleOccupancy,     // sites whose total occupation is >= 2
  SecondOrbitalCount,  // atoms in orbital index 1
  ExcitedOrbitalCount  // atoms outside the lowest orbital
};

double diagonal_value(DiagonalObservable kind, const ModeLayout& layout, std::uint64_t mask);
SparseOperator assemble_diagonal_observable(DiagonalObservable kind, const SectorBasis& sector);

}  // namespace orbitq
