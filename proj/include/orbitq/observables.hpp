#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "orbitq/dynamics.hpp"
#include "orbitq/fock.hpp"

namespace orbitq {

/// Qubit i is the single lowest-orbital atom on site i: spin up is |0>, spin
/// down is |1>. Bit i of a computational index holds qubit i.
struct QubitEmbedding {
  ModeLayout layout;

  int n_qubits() const { return layout.n_sites; }
  std::uint64_t computational_dim() const { return std::uint64_t{1} << layout.n_sites; }
  std::uint64_t to_mask(std::uint64_t bits) const;
  // Inverse of to_mask; false for states outside the computational subspace.
  bool from_mask(std::uint64_t mask, std::uint64_t& bits) const;
  // Amplitudes on the 2^n computational states. The basis ordering already
  // matches prod_i c+_{i} |0> in increasing site order, so no extra signs.
  Eigen::VectorXcd project(const ManyBodyState& state) const;
  ManyBodyState embed(const Eigen::VectorXcd& qubits) const;
};

/// Graph state prod_{edges} CZ prod_i |+>_i on n qubits.
struct TargetState {
  int n_qubits = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::VectorXd amplitudes;

  // max over stabilisers X_i prod_{j ~ i} Z_j of |K_i psi - psi|.
  double stabilizer_violation() const;
};

TargetState graph_state(int n_qubits, const std::vector<std::pair<int, int>>& edges);
/// Disjoint pairs only; overlapping pairs are a ConfigError.
TargetState bell_pairs(int n_qubits, const std::vector<std::pair<int, int>>& pairs);
/// Pairs (0,1),(2,3),... (offset 0) or (1,2),(3,4),... (offset 1).
std::vector<std::pair<int, int>> cell_pairs(int n_qubits, int offset);
TargetState chain_cluster(int n_qubits);

enum class PhaseFrame { Raw, Optimized };

struct FidelityResult {
  double value = 0.0;
  std::vector<double> phases;  // per-qubit z phases applied to the state
};

/// max over phi of |<T| prod_k Z_k(phi_k) |psi>|^2 by coordinate ascent from
/// phi = 0. Z_k(phi) multiplies the |1>_k component by e^{i phi}.
FidelityResult optimize_phase_frame(const Eigen::VectorXcd& qubits, const TargetState& target,
                                    double tolerance = 1e-12);

double fidelity(const ManyBodyState& state, const TargetState& target, PhaseFrame frame);

struct PostSelection {
  double f_ps = 0.0;
  double p_suc = 0.0;
};

/// Projects on no doubly occupied site and no atom outside the lowest
/// orbital, then evaluates the optimised-frame fidelity of the normalised
/// remainder. Throws NumericError when almost nothing survives.
PostSelection post_selected_fidelity(const ManyBodyState& state, const TargetState& target);

/// <psi|O|psi> with one block per sector of the state.
double expectation(const ManyBodyState& state, const std::vector<SparseOperator>& blocks);
double expectation(const ManyBodyState& state, DiagonalObservable kind);
std::vector<SparseOperator> diagonal_blocks(DiagonalObservable kind, const ManyBodyState& state);

struct ObservableTrace {
  std::vector<double> time_ms;
  std::vector<double> fidelity;
  std::vector<double> fidelity_raw;
  std::vector<double> fidelity_ps;
  std::vector<double> p_suc;
  std::vector<double> double_occupancy;
  std::vector<double> second_orbital;
  std::vector<double> norm;
  std::vector<std::vector<double>> sector_weights;

  std::size_t size() const { return time_ms.size(); }
  void record(double t, const ManyBodyState& state, const TargetState& target);
  std::size_t argmax_fidelity(double from_ms, double to_ms) const;
};

/// Pointwise power 2/n of F, F_PS and P_suc; other columns copied.
ObservableTrace rescale_per_cell(const ObservableTrace& trace, int n_sites);

/// Header: tau_ms F F_PS P_suc D N_2nd F_raw
void write_trace(std::ostream& os, const ObservableTrace& trace);

}  // namespace orbitq
