#include "orbitq/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

using cd = std::complex<double>;

// exp(-i phase T) e_0 for the leading m x m block of the tridiagonal T.
Eigen::VectorXcd tridiagonal_expm(const std::vector<double>& alpha, const std::vector<double>& beta,
                                  int m, double phase) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
  const Eigen::MatrixXd& q = eig.eigenvectors();
  Eigen::VectorXcd coeff(m);
  for (int k = 0; k < m; ++k) coeff[k] = std::polar(q(0, k), -phase * eig.eigenvalues()[k]);
  return q.cast<cd>() * coeff;
}

}  // namespace

void KrylovStats::merge(const KrylovStats& other) {
  steps += other.steps;
  matvecs += other.matvecs;
  halvings += other.halvings;
  happy_breakdowns += other.happy_breakdowns;
  max_error_estimate = std::max(max_error_estimate, other.max_error_estimate);
}

void krylov_propagate(const SparseOperator& h, Eigen::VectorXcd& v, double rate, double t,
                      const KrylovOptions& options, KrylovStats* stats) {
  if (h.dim != v.size()) throw ConfigError("krylov_propagate: operator and vector sizes differ");
  if (t == 0.0 || v.size() == 0) return;
  const double norm0 = v.norm();
  if (norm0 == 0.0) return;

  KrylovStats local;
  const int n = static_cast<int>(v.size());
  const int max_dim = std::min(options.max_dim, n);
  const int min_dim = std::min(options.min_dim, max_dim);
  const double sign = t > 0 ? 1.0 : -1.0;
  double remaining = std::abs(t);

  std::vector<Eigen::VectorXcd> basis;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w;

  while (remaining > 0.0) {
    const double norm = v.norm();
    basis.assign(1, v / norm);
    alpha.clear();
    beta.clear();

    double dt = remaining;
    bool accepted = false;
    Eigen::VectorXcd small;
    int m = 0;
    while (!accepted) {
      // Extend the Lanczos basis by one vector.
      h.apply(basis[m], w);
      ++local.matvecs;
      alpha.push_back(basis[m].dot(w).real());
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) w -= b * b.dot(w);
      const double b_next = w.norm();
      ++m;
      const double scale = std::abs(alpha.back()) + (beta.empty() ? 0.0 : beta.back()) + 1.0;
      if (b_next <= 1e-13 * scale || m == n) {
        ++local.happy_breakdowns;
        small = tridiagonal_expm(alpha, beta, m, sign * rate * dt);
        accepted = true;
        break;
      }
      beta.push_back(b_next);
      if (m < min_dim) {
        basis.push_back(w / b_next);
        continue;
      }
      small = tridiagonal_expm(alpha, beta, m, sign * rate * dt);
      double err = b_next * std::abs(small[m - 1]);
      if (err <= options.tolerance) {
        local.max_error_estimate = std::max(local.max_error_estimate, err);
        accepted = true;
        break;
      }
      if (m < max_dim) {
        basis.push_back(w / b_next);
        continue;
      }
      // Largest subspace reached: shrink the step on this basis.
      while (err > options.tolerance) {
        dt *= 0.5;
        ++local.halvings;
        if (dt < options.min_step * std::abs(t)) {
          std::ostringstream msg;
          msg << "krylov_propagate: step underflow (dt = " << dt << " of " << std::abs(t)
              << ", dimension " << m << ", error estimate " << err << ", sector size " << n << ")";
          throw NumericError(msg.str());
        }
        small = tridiagonal_expm(alpha, beta, m, sign * rate * dt);
        err = b_next * std::abs(small[m - 1]);
      }
      local.max_error_estimate = std::max(local.max_error_estimate, err);
      accepted = true;
    }
    Eigen::VectorXcd next = Eigen::VectorXcd::Zero(n);
    for (int j = 0; j < m; ++j) next += basis[j] * small[j];
    v = next * norm;
    remaining -= dt;
    if (remaining < 1e-15 * std::abs(t)) remaining = 0.0;
    ++local.steps;
  }
  if (stats) stats->merge(local);
}

}  // namespace orbitq
