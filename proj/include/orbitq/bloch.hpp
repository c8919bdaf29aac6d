#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "orbitq/units.hpp"

namespace orbitq {

/// Bloch bands of the 1D lattice (V0/2) cos(2 pi x / a), solved in a
/// plane-wave basis centred on a potential minimum.
///
/// Quasimomenta are in units of k_L = pi/a; the first Brillouin zone is
/// (-1, 1]. The grid is the midpoint grid q_j = -1 + (2j + 1)/n_q, which is
/// symmetric under q -> -q and avoids the zone centre and edge.
/// Plane-wave row g of a coefficient column carries momentum q + 2(g - cutoff).
struct BandStructure {
  double v0_recoil = 0.0;
  int cutoff = 0;
  std::vector<double> q_grid;
  Eigen::MatrixXd energies;             // (n_q, n_bands), E_r
  std::vector<Eigen::MatrixXd> coeffs;  // per q: (2 cutoff + 1, n_bands), real

  int n_q() const { return static_cast<int>(q_grid.size()); }
  int n_bands() const { return static_cast<int>(energies.cols()); }

  // Band average, i.e. the on-site energy of the band's Wannier orbital.
  double band_center(int band) const;
  // <w_{0,band}| H0 |w_{distance,band}>: the Fourier component of E(q).
  double hopping(int band, int distance) const;
};

/// Keeps n_orbitals + 2 bands. cutoff >= 8, n_q >= 32 and even.
BandStructure solve_bands(const PhysicalConfig& cfg, int cutoff = 16, int n_q = 64);
BandStructure solve_bands(double v0_recoil, int n_bands, int cutoff, int n_q);

/// Lowest n_bands energies at a single quasimomentum (units of k_L).
Eigen::VectorXd band_energies_at(double v0_recoil, double q, int cutoff, int n_bands);

/// Real Wannier orbitals sampled on a uniform grid around home site 0.
///
/// Positions are in units of a. Site i is centred at x_i = i + 1/2, the
/// minimum of V. Orbital alpha has parity (-1)^alpha about its centre; even
/// orbitals are positive at the centre, odd ones rise through it.
struct WannierSet {
  int samples_per_period = 0;
  int n_periods = 0;
  double dx = 0.0;
  std::vector<double> x;
  std::vector<std::vector<double>> orbitals;

  int n_bands() const { return static_cast<int>(orbitals.size()); }
  int n_samples() const { return static_cast<int>(x.size()); }
  std::span<const double> orbital(int band) const { return orbitals.at(band); }
  static double site_center(int site) { return site + 0.5; }

  // Value of w_{site, band} at grid sample k (zero outside the window).
  double value(int band, int site, int k) const;
  // <w_{0,alpha} | w_{site_shift,beta}> by grid quadrature.
  double overlap(int alpha, int beta, int site_shift) const;
};

/// Coefficients in the real Wannier gauge: column b of entry q is the sign-fixed
/// eigenvector; for odd b the physical Bloch coefficients are -i times it.
/// Throws NumericError naming the q point if a Bloch function has a node where
/// the sign is read off.
std::vector<Eigen::MatrixXd> gauge_fixed_coefficients(const BandStructure& bands, int n_bands);

/// (1/N) sum_q <u_alpha(q)| H(q) |u_beta(q)> e^{-i q d a} in the Wannier gauge,
/// i.e. <w_{0,alpha}|H0|w_{d,beta}> evaluated in momentum space.
double momentum_space_hopping(const BandStructure& bands, int alpha, int beta, int distance);

/// n_periods odd and >= 11; samples_per_period even and >= 16.
/// n_bands < 0 means all bands of the structure.
WannierSet build_wannier(const BandStructure& bands, int n_periods = 41,
                         int samples_per_period = 64, int n_bands = -1);

// Tabular exports for plotting: one header line, whitespace separated.
void write_bands_table(std::ostream& os, const BandStructure& bands);
void write_wannier_table(std::ostream& os, const WannierSet& wannier);

}  // namespace orbitq
