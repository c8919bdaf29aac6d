#pragma once

#include <Eigen/Dense>

#include "orbitq/fock.hpp"

namespace orbitq {

struct KrylovOptions {
  int min_dim = 8;
  int max_dim = 40;
  double tolerance = 1e-11;  // per-step error estimate, relative to the norm
  double min_step = 1e-12;   // in units of the requested interval
};

struct KrylovStats {
  long steps = 0;
  long matvecs = 0;
  long halvings = 0;
  long happy_breakdowns = 0;
  double max_error_estimate = 0.0;

  void merge(const KrylovStats& other);
};

/// v <- exp(-i rate H t) v with H hermitian (real symmetric). `rate` converts
/// H's units into phase per unit of t (E_r/hbar in 1/ms for E_r and ms).
/// Lanczos with full reorthogonalisation; the subspace grows from min_dim
/// to max_dim until the a-posteriori estimate
/// beta_m |[exp(-i rate T dt)]_{m-1,0}| is below tolerance, and the step is
/// halved on the same basis when even max_dim is not enough.
void krylov_propagate(const SparseOperator& h, Eigen::VectorXcd& v, double rate, double t,
                      const KrylovOptions& options = {}, KrylovStats* stats = nullptr);

}  // namespace orbitq
