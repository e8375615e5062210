#pragma once

// Five-mode chain Q1 - R1 - Qt - R2 - Q2: two fixed-frequency transmons,
// two half-wave CPW resonators and a frequency-tunable transmon bus in the
// middle. All energies are ordinary frequencies in GHz (units of h).

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qbridge {

inline constexpr int kNumModes = 5;

// Chain positions, in the order used for state labels |Q1 R1 Qt R2 Q2>.
enum ModeIndex : int { kQ1 = 0, kR1 = 1, kBus = 2, kR2 = 3, kQ2 = 4 };

using Occupation = std::array<int, kNumModes>;

std::string to_string(const Occupation& occ);

enum class ModeKind { Anharmonic, Harmonic };

struct ModeSpec {
  ModeKind kind = ModeKind::Anharmonic;
  double freq = 0.0;    // bare frequency, GHz
  double anharm = 0.0;  // anharmonicity, GHz (negative for transmons)
  int levels = 3;

  static ModeSpec transmon(double freq, double anharm, int levels = 3);
  static ModeSpec resonator(double freq, int levels = 3);
};

enum class CouplingScaling { Fixed, SqrtFrequency };

std::string to_string(CouplingScaling rule);
CouplingScaling parse_coupling_scaling(const std::string& text);

struct ChainConfig {
  std::array<ModeSpec, kNumModes> modes;
  double g_ref = 0.0;   // GHz, shared by all four nearest-neighbour bonds
  double nu_ref = 6.0;  // GHz, frequency at which g_ref is quoted
  CouplingScaling scaling = CouplingScaling::SqrtFrequency;

  // Throws ConfigurationError describing the first violated invariant.
  void validate() const;

  std::vector<int> dims() const;

  // Device of the reference design: qubits at 5.0 / 5.2 GHz, resonators at
  // 7.0 / 7.2 GHz, bus idling at 5.65 GHz, all anharmonicities -0.3 GHz.
  static ChainConfig reference(double g_ref, int levels = 3);
};

// Mixed-radix indexing of the product space. Mode 0 (Q1) is the most
// significant digit, matching the kron(Q1, R1, Qt, R2, Q2) ordering.
class ProductBasis {
 public:
  explicit ProductBasis(std::vector<int> dims);

  int size() const { return size_; }
  int num_modes() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }

  int index(const Occupation& occ) const;
  Occupation occupation(int index) const;
  int level(int index, int mode) const { return (index / strides_[mode]) % dims_[mode]; }
  int stride(int mode) const { return strides_[mode]; }

  // Parity of the total excitation number. The chain Hamiltonian never
  // connects states of opposite parity; a single photon loss flips it.
  int parity(int index) const;

 private:
  std::vector<int> dims_;
  std::vector<int> strides_;
  int size_;
};

// Split of the product space into the two excitation-parity sectors.
struct ParitySectors {
  std::array<std::vector<int>, 2> members;  // global indices per parity
  std::vector<int> sector_of;               // parity of each global index
  std::vector<int> position;                // index inside its sector

  explicit ParitySectors(const ProductBasis& basis);
  int sector_size(int p) const { return static_cast<int>(members[p].size()); }
};

// Truncated bosonic annihilation operator, entries (n, n+1) = sqrt(n+1).
Eigen::MatrixXd lowering_operator(int dim);

// nu * n + (eta / 2) * n * (n - 1)
double bare_level_energy(const ModeSpec& mode, int n);

double scaled_coupling(double g_ref, double nu_a, double nu_b, double nu_ref,
                       CouplingScaling rule);

// Fundamental of a half-wave CPW resonator with eps_eff = (eps_r + 1) / 2.
// Returns GHz.
double cpw_fundamental(double length_m, double eps_r);

// Per-mode operators embedded in the full product space.
struct OperatorSet {
  std::vector<Eigen::MatrixXd> lowering;
  std::vector<Eigen::MatrixXd> number;
  std::vector<int> dims;
  int total_dim = 0;

  static OperatorSet build(const std::vector<int>& dims);
};

// Hamiltonian of the chain as a function of the instantaneous bus frequency.
// Pieces that do not depend on the bus are assembled once.
class ChainHamiltonian {
 public:
  explicit ChainHamiltonian(const ChainConfig& chain);

  const ChainConfig& chain() const { return chain_; }
  const ProductBasis& basis() const { return basis_; }
  const ParitySectors& sectors() const { return sectors_; }
  int dim() const { return basis_.size(); }

  // Coupling strength of bond (mode, mode + 1) at the given bus frequency.
  double bond_coupling(int bond, double nu_bus) const;
  Eigen::VectorXd diagonal(double nu_bus) const;

  Eigen::MatrixXd dense(double nu_bus) const;
  Eigen::SparseMatrix<double> sparse(double nu_bus) const;
  // Block of the Hamiltonian restricted to one parity sector.
  Eigen::MatrixXd sector_block(double nu_bus, int parity) const;

 private:
  struct Entry {
    int row;
    int col;
    double value;
  };

  ChainConfig chain_;
  ProductBasis basis_;
  ParitySectors sectors_;
  Eigen::VectorXd static_diagonal_;   // everything except nu_bus * n_bus
  Eigen::VectorXd bus_number_;        // n_bus on the diagonal
  std::array<std::vector<Entry>, kNumModes - 1> bond_terms_;  // x_a x_b, both triangles
};

// Dense H(nu_bus) of the truncated chain; real symmetric in the product basis.
Eigen::MatrixXd build_hamiltonian(const ChainConfig& chain, double nu_bus);

}  // namespace qbridge
