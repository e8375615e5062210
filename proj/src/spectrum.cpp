#include "qbridge/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qbridge/errors.hpp"

namespace qbridge {

namespace {

// Union-find over the nonzero pattern: eigenproblems of disconnected blocks
// (e.g. the two excitation-parity sectors) are solved separately.
std::vector<std::vector<int>> connected_blocks(const Eigen::MatrixXd& h) {
  const int n = static_cast<int>(h.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (int c = 0; c < n; ++c) {
    for (int r = c + 1; r < n; ++r) {
      if (h(r, c) != 0.0 || h(c, r) != 0.0) {
        const int a = find(r);
        const int b = find(c);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> block_id(n, -1);
  std::vector<std::vector<int>> blocks;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (block_id[root] < 0) {
      block_id[root] = static_cast<int>(blocks.size());
      blocks.emplace_back();
    }
    blocks[block_id[root]].push_back(i);
  }
  return blocks;
}

struct Candidate {
  double overlap;
  int label;
  int eig;
};

}  // namespace

int DressedSpectrum::bare_index(const Occupation& occ) const {
  int idx = 0;
  int stride = 1;
  for (int m = static_cast<int>(dims.size()) - 1; m >= 0; --m) {
    const int n = m < kNumModes ? occ[m] : 0;
    if (n < 0 || n >= dims[m]) throw IndexError("label " + to_string(occ) + " outside truncation");
    idx += n * stride;
    stride *= dims[m];
  }
  return idx;
}

DressedSpectrum dressed_spectrum(const Eigen::MatrixXd& hamiltonian, const std::vector<int>& dims,
                                 const DressedSpectrum* previous) {
  const int n = static_cast<int>(hamiltonian.rows());
  if (hamiltonian.cols() != n) throw InvalidInput("Hamiltonian must be square");
  const int expected = std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
  if (expected != n) throw InvalidInput("dims do not match the Hamiltonian size");
  const double scale = std::max(1.0, hamiltonian.cwiseAbs().maxCoeff());
  if ((hamiltonian - hamiltonian.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("Hamiltonian is not Hermitian");
  }
  if (previous != nullptr && previous->size() != n) {
    throw InvalidInput("previous spectrum has a different dimension");
  }

  // Block-wise diagonalization.
  std::vector<double> energy(n);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  int next = 0;
  for (const auto& block : connected_blocks(hamiltonian)) {
    const int b = static_cast<int>(block.size());
    if (b == 1) {
      energy[next] = hamiltonian(block[0], block[0]);
      raw(block[0], next++) = 1.0;
      continue;
    }
    Eigen::MatrixXd sub(b, b);
    for (int j = 0; j < b; ++j)
      for (int i = 0; i < b; ++i) sub(i, j) = hamiltonian(block[i], block[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sub);
    if (solver.info() != Eigen::Success) throw InvalidInput("eigendecomposition failed");
    for (int k = 0; k < b; ++k) {
      energy[next] = solver.eigenvalues()(k);
      for (int i = 0; i < b; ++i) raw(block[i], next) = solver.eigenvectors()(i, k);
      ++next;
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return energy[a] < energy[b]; });

  DressedSpectrum out;
  out.dims = dims;
  out.energies.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.energies(k) = energy[order[k]];
    out.vectors.col(k) = raw.col(order[k]);
  }

  // amplitude(label, eig) = <reference_label | eigenvector_eig>
  Eigen::MatrixXd amplitude;
  if (previous == nullptr) {
    amplitude = out.vectors;
  } else {
    Eigen::MatrixXd reference(n, n);
    for (int label = 0; label < n; ++label) {
      reference.col(label) = previous->vectors.col(previous->label_of[label]);
    }
    amplitude.noalias() = reference.transpose() * out.vectors;
  }

  std::vector<Candidate> candidates;
  candidates.reserve(static_cast<size_t>(n) * 8);
  for (int eig = 0; eig < n; ++eig) {
    for (int label = 0; label < n; ++label) {
      const double a = amplitude(label, eig);
      const double o = a * a;
      if (o > 1e-10) candidates.push_back({o, label, eig});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (x.label != y.label) return x.label < y.label;
    return x.eig < y.eig;
  });

  out.label_of.assign(n, -1);
  out.overlap_of.assign(n, 0.0);
  std::vector<bool> taken(n, false);
  int assigned = 0;
  for (const Candidate& c : candidates) {
    if (assigned == n) break;
    if (out.label_of[c.label] >= 0 || taken[c.eig]) continue;
    out.label_of[c.label] = c.eig;
    out.overlap_of[c.label] = c.overlap;
    taken[c.eig] = true;
    ++assigned;
  }
  // Leftovers only occur for exactly vanishing overlaps; pair them up in order.
  if (assigned < n) {
    int eig = 0;
    for (int label = 0; label < n; ++label) {
      if (out.label_of[label] >= 0) continue;
      while (taken[eig]) ++eig;
      out.label_of[label] = eig;
      out.overlap_of[label] = amplitude(label, eig) * amplitude(label, eig);
      taken[eig] = true;
    }
  }
  for (int label = 0; label < n; ++label) {
    const int eig = out.label_of[label];
    if (amplitude(label, eig) < 0.0) out.vectors.col(eig) *= -1.0;
  }
  return out;
}

double zz_from_spectrum(const DressedSpectrum& s) {
  const auto& [l00, l01, l10, l11] = kComputationalLabels;
  return (s.energy(l11) - s.energy(l10)) - (s.energy(l01) - s.energy(l00));
}

bool computational_ambiguous(const DressedSpectrum& s) {
  return std::any_of(kComputationalLabels.begin(), kComputationalLabels.end(),
                     [&](const Occupation& occ) { return s.ambiguous(occ); });
}

ZZPoint zz_coupling(const ChainConfig& chain, double nu_bus) {
  const ChainHamiltonian model(chain);
  const DressedSpectrum s = dressed_spectrum(model.dense(nu_bus), chain.dims());
  return {nu_bus, zz_from_spectrum(s), chain.g_ref, computational_ambiguous(s)};
}

std::vector<ZZPoint> sweep_zz(const ChainConfig& chain, std::span<const double> grid) {
  if (grid.empty()) throw InvalidParameter("ZZ sweep needs a nonempty grid");
  const int n = static_cast<int>(grid.size());
  for (int i = 0; i < n; ++i) {
    if (!(grid[i] > 0.0)) throw InvalidParameter("bus frequencies must be positive");
  }
  if (n > 1) {
    const bool increasing = grid[1] > grid[0];
    for (int i = 1; i < n; ++i) {
      if (increasing ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1])) {
        throw InvalidParameter("ZZ sweep grid must be strictly monotone");
      }
    }
  }
  const ChainHamiltonian model(chain);
  auto detuning = [&](double nu) {
    double d = INFINITY;
    for (int m = 0; m < kNumModes; ++m) {
      if (m != kBus) d = std::min(d, std::abs(nu - chain.modes[m].freq));
    }
    return d;
  };
  const bool from_back = detuning(grid[n - 1]) > detuning(grid[0]);

  std::vector<ZZPoint> out(n);
  std::optional<DressedSpectrum> previous;
  for (int step = 0; step < n; ++step) {
    const int i = from_back ? n - 1 - step : step;
    DressedSpectrum s =
        dressed_spectrum(model.dense(grid[i]), chain.dims(), previous ? &*previous : nullptr);
    out[i] = {grid[i], zz_from_spectrum(s), chain.g_ref, computational_ambiguous(s)};
    previous = std::move(s);
  }
  return out;
}

std::vector<double> linspace(double first, double last, int count) {
  if (count < 1) throw InvalidParameter("linspace needs at least one point");
  std::vector<double> v(count);
  if (count == 1) {
    v[0] = first;
    return v;
  }
  const double step = (last - first) / (count - 1);
  for (int i = 0; i < count; ++i) v[i] = first + step * i;
  v[count - 1] = last;
  return v;
}

double find_idle_frequency(const ChainConfig& chain, std::pair<double, double> bracket,
                           double tol) {
  auto [lo, hi] = bracket;
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidParameter("idle bracket must satisfy 0 < lo < hi");
  if (!(tol > 0.0)) throw InvalidParameter("idle tolerance must be positive");
  if (chain.g_ref == 0.0) {
    throw NoZeroCrossing("g_ref = 0: ZZ vanishes identically, no isolated idle point");
  }
  const ChainHamiltonian model(chain);
  auto zeta = [&](double nu) {
    return zz_from_spectrum(dressed_spectrum(model.dense(nu), chain.dims()));
  };

  double z_lo = zeta(lo);
  double z_hi = zeta(hi);
  double best = std::abs(z_lo) <= std::abs(z_hi) ? lo : hi;
  double best_abs = std::min(std::abs(z_lo), std::abs(z_hi));

  if (std::signbit(z_lo) != std::signbit(z_hi)) {
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double z = zeta(mid);
      if (std::abs(z) < best_abs) {
        best_abs = std::abs(z);
        best = mid;
      }
      if (z == 0.0) break;
      if (std::signbit(z) == std::signbit(z_lo)) {
        lo = mid;
        z_lo = z;
      } else {
        hi = mid;
      }
    }
    if (best_abs <= tol) return best;
  }

  // Golden-section search on |zeta|.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = bracket.first;
  double b = bracket.second;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = std::abs(zeta(c));
  double fd = std::abs(zeta(d));
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = std::abs(zeta(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = std::abs(zeta(d));
    }
  }
  for (auto [nu, f] : {std::pair{c, fc}, std::pair{d, fd}}) {
    if (f < best_abs) {
      best_abs = f;
      best = nu;
    }
  }
  if (best_abs > tol) {
    throw NoZeroCrossing("no ZZ zero crossing in bracket; min |zeta| = " +
                         std::to_string(best_abs * 1e6) + " kHz");
  }
  return best;
}

}  // namespace qbridge
