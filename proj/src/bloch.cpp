#include "orbitq/bloch.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd plane_wave_hamiltonian(double v0, double q, int cutoff) {
  const int dim = 2 * cutoff + 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (int g = 0; g < dim; ++g) {
    const double k = q + 2.0 * (g - cutoff);
    h(g, g) = k * k;
  }
  // Site-centred potential -(V0/2) cos(2 pi y / a) couples G and G +- 2.
  for (int g = 0; g + 1 < dim; ++g) {
    h(g, g + 1) = -v0 / 4.0;
    h(g + 1, g) = -v0 / 4.0;
  }
  return h;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> diagonalize(double v0, double q, int cutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(plane_wave_hamiltonian(v0, q, cutoff));
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "band eigensolve did not converge at q=" << q << " (units of pi/a), cutoff=" << cutoff;
    throw NumericError(msg.str());
  }
  return solver;
}

}  // namespace

double BandStructure::band_center(int band) const { return energies.col(band).mean(); }

double BandStructure::hopping(int band, int distance) const {
  double sum = 0.0;
  for (int iq = 0; iq < n_q(); ++iq) sum += energies(iq, band) * std::cos(kPi * q_grid[iq] * distance);
  return sum / n_q();
}

BandStructure solve_bands(const PhysicalConfig& cfg, int cutoff, int n_q) {
  cfg.validate();
  return solve_bands(cfg.v0_recoil, cfg.n_orbitals + 2, cutoff, n_q);
}

BandStructure solve_bands(double v0_recoil, int n_bands, int cutoff, int n_q) {
  if (cutoff < 8) throw ConfigError("plane-wave cutoff must be >= 8");
  if (n_q < 32 || n_q % 2 != 0) throw ConfigError("n_q must be even and >= 32");
  if (n_bands < 1 || n_bands > 2 * cutoff + 1) throw ConfigError("band count out of range");

  BandStructure bs;
  bs.v0_recoil = v0_recoil;
  bs.cutoff = cutoff;
  bs.q_grid.resize(n_q);
  for (int j = 0; j < n_q; ++j) bs.q_grid[j] = -1.0 + (2.0 * j + 1.0) / n_q;
  bs.energies.resize(n_q, n_bands);
  bs.coeffs.resize(n_q);

#pragma omp parallel for schedule(static)
  for (int j = 0; j < n_q; ++j) {
    auto solver = diagonalize(v0_recoil, bs.q_grid[j], cutoff);
    bs.energies.row(j) = solver.eigenvalues().head(n_bands).transpose();
    bs.coeffs[j] = solver.eigenvectors().leftCols(n_bands);
  }
  return bs;
}

Eigen::VectorXd band_energies_at(double v0_recoil, double q, int cutoff, int n_bands) {
  return diagonalize(v0_recoil, q, cutoff).eigenvalues().head(n_bands);
}

double WannierSet::value(int band, int site, int k) const {
  const int j = k - site * samples_per_period;
  if (j < 0 || j >= n_samples()) return 0.0;
  return orbitals[band][j];
}

double WannierSet::overlap(int alpha, int beta, int site_shift) const {
  double sum = 0.0;
  for (int k = 0; k < n_samples(); ++k) sum += orbitals[alpha][k] * value(beta, site_shift, k);
  return sum * dx;
}

std::vector<Eigen::MatrixXd> gauge_fixed_coefficients(const BandStructure& bands, int n_bands) {
  const int nq = bands.n_q();
  const int cutoff = bands.cutoff;
  const int dim = 2 * cutoff + 1;
  // Sign fixed by the value (even bands) or slope (odd bands) of the Bloch
  // function at the site centre.
  std::vector<Eigen::MatrixXd> fixed(nq);
  for (int j = 0; j < nq; ++j) {
    fixed[j] = bands.coeffs[j].leftCols(n_bands);
    for (int b = 0; b < n_bands; ++b) {
      double s = 0.0;
      double scale = 0.0;
      for (int g = 0; g < dim; ++g) {
        const double weight = (b % 2 == 0) ? 1.0 : bands.q_grid[j] + 2.0 * (g - cutoff);
        s += weight * fixed[j](g, b);
        scale += std::abs(weight * fixed[j](g, b));
      }
      if (std::abs(s) < 1e-8 * std::max(scale, 1.0)) {
        std::ostringstream msg;
        msg << "Wannier gauge fixing failed for band " << b + 1 << " at q=" << bands.q_grid[j]
            << " (units of pi/a): Bloch function has a node at the site centre";
        throw NumericError(msg.str());
      }
      if (s < 0) fixed[j].col(b) *= -1.0;
    }
  }
  return fixed;
}

double momentum_space_hopping(const BandStructure& bands, int alpha, int beta, int distance) {
  const int n_bands = std::max(alpha, beta) + 1;
  const auto fixed = gauge_fixed_coefficients(bands, n_bands);
  // Odd bands carry a factor -i; conj(phase_alpha) * phase_beta.
  const std::complex<double> phase_a = (alpha % 2 == 0) ? 1.0 : std::complex<double>(0.0, -1.0);
  const std::complex<double> phase_b = (beta % 2 == 0) ? 1.0 : std::complex<double>(0.0, -1.0);
  std::complex<double> sum = 0.0;
  for (int j = 0; j < bands.n_q(); ++j) {
    const Eigen::MatrixXd h = plane_wave_hamiltonian(bands.v0_recoil, bands.q_grid[j], bands.cutoff);
    const double element = fixed[j].col(alpha).dot(h * fixed[j].col(beta));
    sum += std::conj(phase_a) * phase_b * element * std::polar(1.0, -kPi * bands.q_grid[j] * distance);
  }
  return sum.real() / bands.n_q();
}

WannierSet build_wannier(const BandStructure& bands, int n_periods, int samples_per_period,
                         int n_bands) {
  if (n_periods < 11 || n_periods % 2 == 0) throw ConfigError("n_periods must be odd and >= 11");
  if (samples_per_period < 16 || samples_per_period % 2 != 0)
    throw ConfigError("samples_per_period must be even and >= 16");
  if (n_bands < 0) n_bands = bands.n_bands();
  if (n_bands > bands.n_bands()) throw ConfigError("more Wannier orbitals requested than bands");

  const int nq = bands.n_q();
  const int cutoff = bands.cutoff;
  const int dim = 2 * cutoff + 1;

  const std::vector<Eigen::MatrixXd> fixed = gauge_fixed_coefficients(bands, n_bands);

  WannierSet ws;
  ws.samples_per_period = samples_per_period;
  ws.n_periods = n_periods;
  ws.dx = 1.0 / samples_per_period;
  const int half = samples_per_period * n_periods / 2;
  const int n_samples = 2 * half + 1;
  ws.x.resize(n_samples);
  ws.orbitals.assign(n_bands, std::vector<double>(n_samples, 0.0));

#pragma omp parallel for schedule(static)
  for (int k = 0; k < n_samples; ++k) {
    const double y = (k - half) * ws.dx;  // relative to the site centre
    ws.x[k] = WannierSet::site_center(0) + y;
    std::vector<std::complex<double>> harmonics(dim);
    const std::complex<double> step = std::polar(1.0, 2.0 * kPi * y);
    harmonics[cutoff] = 1.0;
    for (int m = 1; m <= cutoff; ++m) {
      harmonics[cutoff + m] = harmonics[cutoff + m - 1] * step;
      harmonics[cutoff - m] = std::conj(harmonics[cutoff + m]);
    }
    for (int b = 0; b < n_bands; ++b) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < nq; ++j) {
        std::complex<double> inner = 0.0;
        for (int g = 0; g < dim; ++g) inner += fixed[j](g, b) * harmonics[g];
        acc += std::polar(1.0, kPi * bands.q_grid[j] * y) * inner;
      }
      // Odd bands carry an extra factor -i so the orbital comes out real.
      ws.orbitals[b][k] = ((b % 2 == 0) ? acc.real() : acc.imag()) / nq;
    }
  }
  return ws;
}

void write_bands_table(std::ostream& os, const BandStructure& bands) {
  os << "q_pi_over_a";
  for (int b = 0; b < bands.n_bands(); ++b) os << " E" << b + 1 << "_recoil";
  os << '\n';
  os.precision(12);
  for (int j = 0; j < bands.n_q(); ++j) {
    os << bands.q_grid[j];
    for (int b = 0; b < bands.n_bands(); ++b) os << ' ' << bands.energies(j, b);
    os << '\n';
  }
}

void write_wannier_table(std::ostream& os, const WannierSet& wannier) {
  os << "x_over_a";
  for (int b = 0; b < wannier.n_bands(); ++b) os << " w" << b + 1;
  os << '\n';
  os.precision(12);
  for (int k = 0; k < wannier.n_samples(); ++k) {
    os << wannier.x[k];
    for (int b = 0; b < wannier.n_bands(); ++b) os << ' ' << wannier.orbitals[b][k];
    os << '\n';
  }
}

}  // namespace orbitq
