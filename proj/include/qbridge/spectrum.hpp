#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbridge/circuit_model.hpp"

namespace qbridge {

// Below this squared overlap a label is reported as ambiguous.
inline constexpr double kAmbiguityThreshold = 0.5;

// Default tolerance for the idle point, GHz (10 kHz).
inline constexpr double kIdleTolerance = 1e-5;

// Computational states in |Q1 Q2> order 00, 01, 10, 11.
inline constexpr std::array<Occupation, 4> kComputationalLabels = {
    Occupation{0, 0, 0, 0, 0}, Occupation{0, 0, 0, 0, 1}, Occupation{1, 0, 0, 0, 0},
    Occupation{1, 0, 0, 0, 1}};

struct DressedSpectrum {
  Eigen::VectorXd energies;  // ascending, GHz
  Eigen::MatrixXd vectors;   // column k belongs to energies(k)
  std::vector<int> dims;
  std::vector<int> label_of;       // bare product index -> eigenindex
  std::vector<double> overlap_of;  // squared overlap achieved by that label

  int size() const { return static_cast<int>(energies.size()); }
  int bare_index(const Occupation& occ) const;
  int eigenindex(const Occupation& occ) const { return label_of[bare_index(occ)]; }
  double energy(const Occupation& occ) const { return energies(eigenindex(occ)); }
  double overlap(const Occupation& occ) const { return overlap_of[bare_index(occ)]; }
  bool ambiguous(const Occupation& occ) const { return overlap(occ) < kAmbiguityThreshold; }
  Eigen::VectorXd vector(const Occupation& occ) const { return vectors.col(eigenindex(occ)); }
};

// Full eigendecomposition with one-to-one labeling. Without `previous` each
// eigenvector is labeled by the bare product state it overlaps most; with
// `previous` the reference vectors are that spectrum's labeled eigenvectors,
// which tracks states adiabatically along a parameter sweep. Labeled vectors
// are signed so that their overlap with the reference is positive.
DressedSpectrum dressed_spectrum(const Eigen::MatrixXd& hamiltonian, const std::vector<int>& dims,
                                 const DressedSpectrum* previous = nullptr);

struct ZZPoint {
  double nu_bus = 0.0;
  double zeta = 0.0;  // GHz
  double g_ref = 0.0;
  bool ambiguous = false;
};

// (E11 - E10) - (E01 - E00) of the labeled dressed spectrum.
double zz_from_spectrum(const DressedSpectrum& spectrum);
bool computational_ambiguous(const DressedSpectrum& spectrum);

ZZPoint zz_coupling(const ChainConfig& chain, double nu_bus);

// One point per grid value, in grid order. Labels are propagated by
// continuity starting from the grid end that sits furthest from every other
// mode frequency, so reversing the grid reverses the output exactly.
std::vector<ZZPoint> sweep_zz(const ChainConfig& chain, std::span<const double> grid);

std::vector<double> linspace(double first, double last, int count);

// Bus frequency in `bracket` where |zeta| <= tol: bisection on a sign change,
// otherwise golden-section minimization of |zeta|.
double find_idle_frequency(const ChainConfig& chain, std::pair<double, double> bracket,
                           double tol = kIdleTolerance);

}  // namespace qbridge
