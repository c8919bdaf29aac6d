#include "orbitq/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "orbitq/error.hpp"

namespace orbitq {

namespace {

// Spreads the low bits of `compact` onto the set bits of `positions`.
std::uint64_t deposit(std::uint64_t compact, std::uint64_t positions) {
  std::uint64_t out = 0;
  for (std::uint64_t bit = 1; positions != 0; bit <<= 1) {
    const std::uint64_t lowest = positions & (~positions + 1);
    if (compact & bit) out |= lowest;
    positions &= positions - 1;
  }
  return out;
}

// All k-subsets of n bits in increasing order (Gosper).
std::vector<std::uint64_t> combinations(int n, int k) {
  std::vector<std::uint64_t> out;
  if (k == 0) {
    out.push_back(0);
    return out;
  }
  const std::uint64_t limit = std::uint64_t{1} << n;
  for (std::uint64_t v = (std::uint64_t{1} << k) - 1; v < limit;) {
    out.push_back(v);
    const std::uint64_t c = v & (~v + 1);
    const std::uint64_t r = v + c;
    v = (((r ^ v) >> 2) / c) | r;
  }
  return out;
}

struct Triplet {
  std::int64_t row;
  std::int64_t col;
  double value;
};

SparseOperator compress(std::int64_t dim, std::vector<Triplet>& entries, bool hermitian) {
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseOperator op;
  op.dim = dim;
  op.hermitian = hermitian;
  op.row_ptr.assign(dim + 1, 0);
  for (std::size_t k = 0; k < entries.size();) {
    const Triplet first = entries[k];
    double sum = 0.0;
    for (; k < entries.size() && entries[k].row == first.row && entries[k].col == first.col; ++k)
      sum += entries[k].value;
    if (sum == 0.0) continue;
    op.cols.push_back(static_cast<std::int32_t>(first.col));
    op.values.push_back(sum);
    ++op.row_ptr[first.row + 1];
  }
  for (std::int64_t r = 0; r < dim; ++r) op.row_ptr[r + 1] += op.row_ptr[r];
  return op;
}

// Adds coeff * O |s> for O = product of ladder operators applied right to left.
template <std::size_t N>
void add_string(std::vector<Triplet>& out, const SectorBasis& sector, std::int64_t col,
                std::uint64_t mask, double coeff, const int (&modes)[N], const bool (&create)[N]) {
  if (coeff == 0.0) return;
  int sign = 1;
  for (std::size_t k = N; k-- > 0;) {
    const int s = apply_ladder(mask, modes[k], create[k]);
    if (s == 0) return;
    sign *= s;
  }
  const std::int64_t row = sector.find(mask);
  if (row < 0) throw NumericError("assembled term leaves its particle-number sector");
  out.push_back({row, col, sign * coeff});
}

}  // namespace

ModeIndex ModeLayout::decode(int mode) const {
  ModeIndex m;
  m.site = mode / (2 * n_orbitals);
  const int rest = mode % (2 * n_orbitals);
  m.spin = static_cast<Spin>(rest / n_orbitals);
  m.orbital = rest % n_orbitals;
  return m;
}

std::uint64_t ModeLayout::spin_mask(Spin spin) const {
  std::uint64_t m = 0;
  for (int i = 0; i < n_sites; ++i)
    for (int a = 0; a < n_orbitals; ++a) m |= std::uint64_t{1} << index(i, spin, a);
  return m;
}

std::uint64_t ModeLayout::site_mask(int site) const {
  const std::uint64_t block = (std::uint64_t{1} << (2 * n_orbitals)) - 1;
  return block << (site * 2 * n_orbitals);
}

std::uint64_t ModeLayout::orbital_mask(int orbital) const {
  std::uint64_t m = 0;
  for (int i = 0; i < n_sites; ++i)
    for (Spin s : {Spin::Up, Spin::Down}) m |= std::uint64_t{1} << index(i, s, orbital);
  return m;
}

int apply_ladder(std::uint64_t& mask, int mode, bool create) {
  const std::uint64_t bit = std::uint64_t{1} << mode;
  const bool occupied = (mask & bit) != 0;
  if (occupied == create) return 0;
  const int below = std::popcount(mask & (bit - 1));
  mask ^= bit;
  return (below & 1) ? -1 : 1;
}

std::int64_t SectorBasis::find(std::uint64_t mask) const {
  const auto it = std::lower_bound(states.begin(), states.end(), mask);
  if (it == states.end() || *it != mask) return -1;
  return it - states.begin();
}

SectorBasis build_sector(int n_sites, int n_up, int n_down, int n_orbitals) {
  SectorBasis sector;
  sector.layout = {n_sites, n_orbitals};
  if (n_sites < 1 || n_orbitals < 1 || sector.layout.n_modes() > 64)
    throw ConfigError("build_sector: mode count must be between 1 and 64");
  const int per_spin = n_sites * n_orbitals;
  if (n_up < 0 || n_up > per_spin || n_down < 0 || n_down > per_spin) {
    std::ostringstream msg;
    msg << "build_sector: particle numbers (" << n_up << ", " << n_down << ") outside [0, " << per_spin << "]";
    throw ConfigError(msg.str());
  }
  sector.n_up = n_up;
  sector.n_down = n_down;
  const std::uint64_t up_modes = sector.layout.spin_mask(Spin::Up);
  const std::uint64_t down_modes = sector.layout.spin_mask(Spin::Down);
  std::vector<std::uint64_t> ups, downs;
  for (std::uint64_t c : combinations(per_spin, n_up)) ups.push_back(deposit(c, up_modes));
  for (std::uint64_t c : combinations(per_spin, n_down)) downs.push_back(deposit(c, down_modes));
  sector.states.reserve(ups.size() * downs.size());
  for (std::uint64_t u : ups)
    for (std::uint64_t d : downs) sector.states.push_back(u | d);
  std::sort(sector.states.begin(), sector.states.end());
  return sector;
}

void SparseOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  y.resize(dim);
#pragma omp parallel for schedule(static) if (dim > 4096)
  for (std::int64_t r = 0; r < dim; ++r) {
    std::complex<double> acc = 0.0;
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += values[k] * x[cols[k]];
    y[r] = acc;
  }
}

Eigen::MatrixXd SparseOperator::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) m(r, cols[k]) = values[k];
  return m;
}

double SparseOperator::asymmetry() const {
  auto lookup = [&](std::int64_t r, std::int64_t c) {
    const auto first = cols.begin() + row_ptr[r];
    const auto last = cols.begin() + row_ptr[r + 1];
    const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(c));
    return (it != last && *it == c) ? values[it - cols.begin()] : 0.0;
  };
  double worst = 0.0;
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      worst = std::max(worst, std::abs(values[k] - lookup(cols[k], r)));
  return worst;
}

bool SparseOperator::is_diagonal() const {
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (cols[k] != r) return false;
  return true;
}

Eigen::VectorXd SparseOperator::diagonal() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(dim);
  for (std::int64_t r = 0; r < dim; ++r)
    for (std::int64_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
      if (cols[k] == r) d[r] = values[k];
  return d;
}

InteractionModel parse_interaction_model(const std::string& name) {
  if (name == "density") return InteractionModel::DensityOnly;
  if (name == "su2-exchange") return InteractionModel::Su2Exchange;
  throw ConfigError("unknown interaction model '" + name + "' (expected density or su2-exchange)");
}

const char* to_string(InteractionModel model) {
  return model == InteractionModel::DensityOnly ? "density" : "su2-exchange";
}

SparseOperator assemble_hamiltonian(const HubbardParams& p, const SectorBasis& sector,
                                    InteractionModel model) {
  const ModeLayout& L = sector.layout;
  if (p.n_sites != L.n_sites || p.n_orbitals != L.n_orbitals) {
    std::ostringstream msg;
    msg << "assemble_hamiltonian: parameters for " << p.n_sites << " sites x " << p.n_orbitals
        << " orbitals, sector for " << L.n_sites << " x " << L.n_orbitals;
    throw ConfigError(msg.str());
  }
  const int n_orb = L.n_orbitals;
  std::vector<Eigen::MatrixXd> bond(p.n_bonds());
  for (int b = 0; b < p.n_bonds(); ++b) bond[b] = p.hop + p.hop_prime[b];

  std::vector<Triplet> entries;
  entries.reserve(sector.size() * (1 + 4 * n_orb * n_orb * p.n_bonds()));
  for (std::int64_t col = 0; col < static_cast<std::int64_t>(sector.size()); ++col) {
    const std::uint64_t s = sector.states[col];
    double diag = 0.0;
    for (int i = 0; i < L.n_sites; ++i) {
      for (int a = 0; a < n_orb; ++a) {
        const bool up = s >> L.index(i, Spin::Up, a) & 1;
        const bool dn = s >> L.index(i, Spin::Down, a) & 1;
        diag += p.onsite(i, a) * (up + dn);
        if (!up) continue;
        for (int b = 0; b < n_orb; ++b)
          if (s >> L.index(i, Spin::Down, b) & 1) diag += p.U(a, b);
      }
    }
    if (diag != 0.0) entries.push_back({col, col, diag});

    for (int b = 0; b < p.n_bonds(); ++b) {
      for (Spin sp : {Spin::Up, Spin::Down}) {
        for (int a = 0; a < n_orb; ++a) {
          for (int c = 0; c < n_orb; ++c) {
            const double t = bond[b](a, c);
            const int left = L.index(b, sp, a);
            const int right = L.index(b + 1, sp, c);
            add_string(entries, sector, col, s, t, {left, right}, {true, false});
            add_string(entries, sector, col, s, t, {right, left}, {true, false});
          }
        }
      }
    }

    if (model == InteractionModel::Su2Exchange) {
      for (int i = 0; i < L.n_sites; ++i)
        for (int a = 0; a < n_orb; ++a)
          for (int c = 0; c < n_orb; ++c) {
            if (a == c) continue;
            const int modes[4] = {L.index(i, Spin::Up, a), L.index(i, Spin::Up, c),
                                  L.index(i, Spin::Down, c), L.index(i, Spin::Down, a)};
            const bool create[4] = {true, false, true, false};
            add_string(entries, sector, col, s, p.U(a, c), modes, create);
          }
    }
  }
  return compress(static_cast<std::int64_t>(sector.size()), entries, true);
}

double diagonal_value(DiagonalObservable kind, const ModeLayout& layout, std::uint64_t mask) {
  switch (kind) {
    case DiagonalObservable::DoubleOccupancy: {
      int count = 0;
      for (int i = 0; i < layout.n_sites; ++i) count += std::popcount(mask & layout.site_mask(i)) >= 2;
      return count;
    }
    case DiagonalObservable::SecondOrbitalCount:
      return std::popcount(mask & layout.orbital_mask(1));
    case DiagonalObservable::ExcitedOrbitalCount:
      return std::popcount(mask & ~layout.orbital_mask(0));
  }
  return 0.0;
}

SparseOperator assemble_diagonal_observable(DiagonalObservable kind, const SectorBasis& sector) {
  std::vector<Triplet> entries;
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(sector.size()); ++k)
    entries.push_back({k, k, diagonal_value(kind, sector.layout, sector.states[k])});
  return compress(static_cast<std::int64_t>(sector.size()), entries, true);
}

}  // namespace orbitq
