#include "orbitq/observables.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;
}

std::uint64_t QubitEmbedding::to_mask(std::uint64_t bits) const {
  std::uint64_t mask = 0;
  for (int i = 0; i < layout.n_sites; ++i)
    mask |= std::uint64_t{1} << layout.index(i, (bits >> i & 1) ? Spin::Down : Spin::Up, 0);
  return mask;
}

bool QubitEmbedding::from_mask(std::uint64_t mask, std::uint64_t& bits) const {
  bits = 0;
  for (int i = 0; i < layout.n_sites; ++i) {
    const std::uint64_t on_site = mask & layout.site_mask(i);
    const std::uint64_t up = std::uint64_t{1} << layout.index(i, Spin::Up, 0);
    const std::uint64_t down = std::uint64_t{1} << layout.index(i, Spin::Down, 0);
    if (on_site == down)
      bits |= std::uint64_t{1} << i;
    else if (on_site != up)
      return false;
  }
  return true;
}

Eigen::VectorXcd QubitEmbedding::project(const ManyBodyState& state) const {
  if (state.layout.n_sites != layout.n_sites || state.layout.n_orbitals != layout.n_orbitals)
    throw ConfigError("qubit embedding does not match the state geometry");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(computational_dim());
  for (std::size_t k = 0; k < state.sectors.size(); ++k) {
    const auto& basis = *state.sectors[k];
    if (basis.n_up + basis.n_down != layout.n_sites) continue;
    for (std::size_t j = 0; j < basis.size(); ++j) {
      std::uint64_t bits;
      if (from_mask(basis.states[j], bits)) out[bits] = state.amplitudes[k][j];
    }
  }
  return out;
}

ManyBodyState QubitEmbedding::embed(const Eigen::VectorXcd& qubits) const {
  if (static_cast<std::uint64_t>(qubits.size()) != computational_dim())
    throw ConfigError("embed: wrong number of qubit amplitudes");
  ManyBodyState state = prepare_plus_product(layout.n_sites, layout.n_orbitals);
  for (auto& a : state.amplitudes) a.setZero();
  for (std::uint64_t b = 0; b < computational_dim(); ++b) {
    const int n_down = std::popcount(b);
    state.amplitudes[n_down][state.sectors[n_down]->find(to_mask(b))] = qubits[b];
  }
  return state;
}

double TargetState::stabilizer_violation() const {
  const std::uint64_t dim = std::uint64_t{1} << n_qubits;
  double worst = 0.0;
  for (int i = 0; i < n_qubits; ++i) {
    std::uint64_t neighbours = 0;
    for (const auto& [a, b] : edges) {
      if (a == i) neighbours |= std::uint64_t{1} << b;
      if (b == i) neighbours |= std::uint64_t{1} << a;
    }
    double dev = 0.0;
    for (std::uint64_t x = 0; x < dim; ++x) {
      // (K psi)(x) = (-1)^{x . N(i)} psi(x with bit i flipped)
      const double sign = (std::popcount(x & neighbours) & 1) ? -1.0 : 1.0;
      const double d = sign * amplitudes[x ^ (std::uint64_t{1} << i)] - amplitudes[x];
      dev += d * d;
    }
    worst = std::max(worst, std::sqrt(dev));
  }
  return worst;
}

TargetState graph_state(int n_qubits, const std::vector<std::pair<int, int>>& edges) {
  if (n_qubits < 1 || n_qubits > 30) throw ConfigError("graph_state: qubit count out of range");
  TargetState t;
  t.n_qubits = n_qubits;
  t.edges = edges;
  for (const auto& [a, b] : edges)
    if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits || a == b)
      throw ConfigError("graph_state: invalid edge");
  const std::uint64_t dim = std::uint64_t{1} << n_qubits;
  const double amp = std::pow(2.0, -0.5 * n_qubits);
  t.amplitudes.resize(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    int parity = 0;
    for (const auto& [a, b] : edges) parity ^= (x >> a & x >> b & 1);
    t.amplitudes[x] = parity ? -amp : amp;
  }
  return t;
}

TargetState bell_pairs(int n_qubits, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<int> used(std::max(n_qubits, 0), 0);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= n_qubits || b >= n_qubits) throw ConfigError("bell_pairs: qubit out of range");
    if (used[a]++ || used[b]++) {
      std::ostringstream msg;
      msg << "bell_pairs: pair (" << a << ", " << b << ") overlaps another pair";
      throw ConfigError(msg.str());
    }
  }
  return graph_state(n_qubits, pairs);
}

std::vector<std::pair<int, int>> cell_pairs(int n_qubits, int offset) {
  std::vector<std::pair<int, int>> out;
  for (int i = offset; i + 1 < n_qubits; i += 2) out.emplace_back(i, i + 1);
  return out;
}

TargetState chain_cluster(int n_qubits) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n_qubits; ++i) edges.emplace_back(i, i + 1);
  return graph_state(n_qubits, edges);
}

namespace {

// Coordinate ascent from one starting frame: phi_k = arg(A) - arg(B) with A, B
// the overlaps of the |0>_k and |1>_k halves.
FidelityResult ascend(const Eigen::VectorXcd& c, int n, std::vector<double> start, double tolerance) {
  const std::uint64_t dim = std::uint64_t{1} << n;
  FidelityResult r;
  r.phases = std::move(start);
  std::vector<cd> factor(n);
  for (int k = 0; k < n; ++k) factor[k] = std::polar(1.0, r.phases[k]);
  auto weighted = [&](std::uint64_t x, int skip) {
    cd f = c[x];
    for (int k = 0; k < n; ++k)
      if (k != skip && (x >> k & 1)) f *= factor[k];
    return f;
  };
  cd total = 0.0;
  for (std::uint64_t x = 0; x < dim; ++x) total += weighted(x, -1);
  r.value = std::norm(total);
  for (int sweep = 0; sweep < 200; ++sweep) {
    const double before = r.value;
    for (int k = 0; k < n; ++k) {
      cd a = 0.0, b = 0.0;
      for (std::uint64_t x = 0; x < dim; ++x) ((x >> k & 1) ? b : a) += weighted(x, k);
      if (std::abs(a) == 0.0 || std::abs(b) == 0.0) continue;
      r.phases[k] = std::arg(a) - std::arg(b);
      factor[k] = std::polar(1.0, r.phases[k]);
      r.value = std::pow(std::abs(a) + std::abs(b), 2);
    }
    if (r.value - before <= tolerance) break;
  }
  return r;
}

}  // namespace

FidelityResult optimize_phase_frame(const Eigen::VectorXcd& qubits, const TargetState& target,
                                    double tolerance) {
  const int n = target.n_qubits;
  const std::uint64_t dim = std::uint64_t{1} << n;
  if (static_cast<std::uint64_t>(qubits.size()) != dim) throw ConfigError("fidelity: size mismatch");
  Eigen::VectorXcd c(dim);
  for (std::uint64_t x = 0; x < dim; ++x) c[x] = target.amplitudes[x] * qubits[x];

  // phi = 0 can be a saddle (|+>^n against a graph state is one), so a few
  // fixed starting frames are tried and the best local maximum kept.
  std::vector<std::vector<double>> starts;
  for (double phi : {0.0, kPi / 2, -kPi / 2, kPi}) starts.emplace_back(n, phi);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int s = 0; s < 4; ++s) {
    std::vector<double> phi(n);
    for (auto& p : phi) p = angle(rng);
    starts.push_back(std::move(phi));
  }
  FidelityResult best;
  best.value = -1.0;
  for (auto& start : starts) {
    FidelityResult r = ascend(c, n, std::move(start), tolerance);
    if (r.value > best.value + tolerance) best = std::move(r);
  }
  return best;
}

double fidelity(const ManyBodyState& state, const TargetState& target, PhaseFrame frame) {
  if (state.n_sites() != target.n_qubits) throw ConfigError("fidelity: target and state sizes differ");
  const Eigen::VectorXcd q = QubitEmbedding{state.layout}.project(state);
  if (frame == PhaseFrame::Raw) return std::norm(target.amplitudes.cast<cd>().dot(q));
  return optimize_phase_frame(q, target).value;
}

PostSelection post_selected_fidelity(const ManyBodyState& state, const TargetState& target) {
  PostSelection r;
  for (std::size_t k = 0; k < state.sectors.size(); ++k) {
    const auto& basis = *state.sectors[k];
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const std::uint64_t m = basis.states[j];
      if (diagonal_value(DiagonalObservable::DoubleOccupancy, basis.layout, m) == 0.0 &&
          diagonal_value(DiagonalObservable::ExcitedOrbitalCount, basis.layout, m) == 0.0)
        r.p_suc += std::norm(state.amplitudes[k][j]);
    }
  }
  if (r.p_suc < 1e-14) throw NumericError("post-selection annihilated the state");
  const Eigen::VectorXcd q = QubitEmbedding{state.layout}.project(state);
  r.f_ps = optimize_phase_frame(q, target).value / r.p_suc;
  return r;
}

double expectation(const ManyBodyState& state, const std::vector<SparseOperator>& blocks) {
  if (blocks.size() != state.sectors.size()) throw ConfigError("expectation: block count mismatch");
  double sum = 0.0;
  Eigen::VectorXcd y;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    blocks[k].apply(state.amplitudes[k], y);
    sum += state.amplitudes[k].dot(y).real();
  }
  return sum;
}

double expectation(const ManyBodyState& state, DiagonalObservable kind) {
  double sum = 0.0;
  for (std::size_t k = 0; k < state.sectors.size(); ++k) {
    const auto& basis = *state.sectors[k];
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const double p = std::norm(state.amplitudes[k][j]);
      if (p != 0.0) sum += p * diagonal_value(kind, basis.layout, basis.states[j]);
    }
  }
  return sum;
}

std::vector<SparseOperator> diagonal_blocks(DiagonalObservable kind, const ManyBodyState& state) {
  std::vector<SparseOperator> out;
  for (const auto& s : state.sectors) out.push_back(assemble_diagonal_observable(kind, *s));
  return out;
}

void ObservableTrace::record(double t, const ManyBodyState& state, const TargetState& target) {
  const Eigen::VectorXcd q = QubitEmbedding{state.layout}.project(state);
  time_ms.push_back(t);
  fidelity_raw.push_back(std::norm(target.amplitudes.cast<cd>().dot(q)));
  fidelity.push_back(optimize_phase_frame(q, target).value);
  const PostSelection ps = post_selected_fidelity(state, target);
  fidelity_ps.push_back(ps.f_ps);
  p_suc.push_back(ps.p_suc);
  double_occupancy.push_back(expectation(state, DiagonalObservable::DoubleOccupancy));
  second_orbital.push_back(expectation(state, DiagonalObservable::SecondOrbitalCount));
  norm.push_back(state.norm());
  sector_weights.push_back(state.sector_weights());
}

std::size_t ObservableTrace::argmax_fidelity(double from_ms, double to_ms) const {
  std::size_t best = size();
  for (std::size_t k = 0; k < size(); ++k) {
    if (time_ms[k] < from_ms - 1e-12 || time_ms[k] > to_ms + 1e-12) continue;
    if (best == size() || fidelity[k] > fidelity[best]) best = k;
  }
  if (best == size()) throw ConfigError("argmax_fidelity: no samples in window");
  return best;
}

ObservableTrace rescale_per_cell(const ObservableTrace& trace, int n_sites) {
  if (n_sites < 2 || n_sites % 2) throw ConfigError("rescale_per_cell: n must be even and >= 2");
  const double e = 2.0 / n_sites;
  ObservableTrace out = trace;
  auto power = [e](std::vector<double>& v) {
    for (double& x : v) x = std::pow(x, e);
  };
  power(out.fidelity);
  power(out.fidelity_raw);
  power(out.fidelity_ps);
  power(out.p_suc);
  return out;
}

void write_trace(std::ostream& os, const ObservableTrace& trace) {
  os.precision(12);
  os << "tau_ms F F_PS P_suc D N_2nd F_raw\n";
  for (std::size_t k = 0; k < trace.size(); ++k)
    os << trace.time_ms[k] << ' ' << trace.fidelity[k] << ' ' << trace.fidelity_ps[k] << ' ' << trace.p_suc[k]
       << ' ' << trace.double_occupancy[k] << ' ' << trace.second_orbital[k] << ' ' << trace.fidelity_raw[k]
       << '\n';
}

}  // namespace orbitq
