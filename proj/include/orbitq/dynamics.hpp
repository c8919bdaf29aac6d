#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "orbitq/fock.hpp"
#include "orbitq/krylov.hpp"
#include "orbitq/lattice_params.hpp"

namespace orbitq {

/// Amplitudes blocked by (N_up, N_down). Sectors are shared, immutable bases.
struct ManyBodyState {
  ModeLayout layout;
  std::vector<std::shared_ptr<const SectorBasis>> sectors;
  std::vector<Eigen::VectorXcd> amplitudes;

  int n_sites() const { return layout.n_sites; }
  double norm() const;
  std::vector<double> sector_weights() const;
  // Amplitude of a basis state, zero if its sector is not carried.
  std::complex<double> amplitude(std::uint64_t mask) const;
};

/// prod_i (c+_{i,up,0} + c+_{i,down,0}) / sqrt 2 |0>, sites in increasing
/// order. Carries every sector (k, n - k).
ManyBodyState prepare_plus_product(int n_sites, int n_orbitals = 2);

struct Segment {
  double duration_ms = 0.0;
  PhysicalConfig cfg;
  std::string label;
};

struct Schedule {
  std::vector<Segment> segments;

  double total_duration() const;
  // Boundaries between consecutive segments.
  std::vector<double> event_times() const;
  void validate() const;
};

/// Bands and Wannier orbitals are cached per (V0, n_orbitals); everything
/// else is recomputed from the cached orbitals on every call.
class ParamsProvider {
 public:
  explicit ParamsProvider(BandNumerics numerics = {}) : numerics_(numerics) {}

  const SingleParticleSolution& single_particle(const PhysicalConfig& cfg);
  HubbardParams operator()(const PhysicalConfig& cfg) { return compute_params(single_particle(cfg), cfg); }
  const BandNumerics& numerics() const { return numerics_; }

 private:
  BandNumerics numerics_;
  std::map<std::pair<double, int>, SingleParticleSolution> cache_;
};

struct EvolveOptions {
  KrylovOptions krylov;
  InteractionModel interaction = InteractionModel::DensityOnly;
};

using Observer = std::function<void(double time_ms, const ManyBodyState& state)>;

/// Runs the schedule from t = 0, applying exp(-i H t / hbar) segment by
/// segment; H is rebuilt from each segment's configuration and the state is
/// carried across boundaries. `observer` sees the state at every sample time
/// (sorted, inside [0, total]). The state is left at the end of the schedule.
KrylovStats evolve(ManyBodyState& state, const Schedule& schedule, ParamsProvider& provider,
                   const std::vector<double>& sample_times, const Observer& observer,
                   const EvolveOptions& options = {});

std::vector<ManyBodyState> evolve_snapshots(const ManyBodyState& initial, const Schedule& schedule,
                                            ParamsProvider& provider,
                                            const std::vector<double>& sample_times,
                                            const EvolveOptions& options = {});

/// Hamiltonian blocks matching the sectors of `state`.
std::vector<SparseOperator> hamiltonian_blocks(const HubbardParams& p, const ManyBodyState& state,
                                               InteractionModel model);

enum class ShiftMethod { FlipTilt, ShiftPhase };

ShiftMethod parse_shift_method(const std::string& name);
const char* to_string(ShiftMethod method);

/// Tilt sign flipped, or theta advanced by pi. Either moves the resonant
/// bonds from (0,1),(2,3),... to (1,2),(3,4),...
PhysicalConfig shifted_config(const PhysicalConfig& cfg, ShiftMethod method);

/// Cuts the first-round schedule at `shift_time_ms` (stretching its last
/// segment if it is shorter) and appends a second round of
/// `second_duration_ms` with the shifted configuration of the last segment.
Schedule shift_unit_cells(const Schedule& first_round, double shift_time_ms,
                          double second_duration_ms, ShiftMethod method = ShiftMethod::FlipTilt);

inline constexpr double kDefaultShiftTimeMs = 3.7;

/// One row per nonzero amplitude: n_up n_down mask re im.
void write_snapshot(std::ostream& os, const ManyBodyState& state);

}  // namespace orbitq
