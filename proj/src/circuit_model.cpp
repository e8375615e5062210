#include "qbridge/circuit_model.hpp"

#include <cmath>

#include "qbridge/errors.hpp"

namespace qbridge {

namespace {

constexpr double kSpeedOfLight = 299792458.0;  // m/s

bool is_finite(double x) { return std::isfinite(x); }

const ChainConfig& validated(const ChainConfig& chain) {
  chain.validate();
  return chain;
}

}  // namespace

std::string to_string(const Occupation& occ) {
  std::string s;
  for (int n : occ) s += std::to_string(n);
  return s;
}

ModeSpec ModeSpec::transmon(double freq, double anharm, int levels) {
  return ModeSpec{ModeKind::Anharmonic, freq, anharm, levels};
}

ModeSpec ModeSpec::resonator(double freq, int levels) {
  return ModeSpec{ModeKind::Harmonic, freq, 0.0, levels};
}

std::string to_string(CouplingScaling rule) {
  return rule == CouplingScaling::Fixed ? "fixed" : "sqrt-frequency";
}

CouplingScaling parse_coupling_scaling(const std::string& text) {
  if (text == "fixed") return CouplingScaling::Fixed;
  if (text == "sqrt-frequency" || text == "sqrt") return CouplingScaling::SqrtFrequency;
  throw ConfigurationError("unknown coupling scaling rule '" + text +
                           "' (expected fixed or sqrt-frequency)");
}

void ChainConfig::validate() const {
  static constexpr const char* kNames[kNumModes] = {"Q1", "R1", "Qt", "R2", "Q2"};
  for (int m = 0; m < kNumModes; ++m) {
    const ModeSpec& mode = modes[m];
    const bool want_anharmonic = (m % 2 == 0);
    const std::string name = kNames[m];
    if ((mode.kind == ModeKind::Anharmonic) != want_anharmonic) {
      throw ConfigurationError("mode " + name + " must be " +
                               (want_anharmonic ? "anharmonic" : "harmonic"));
    }
    if (!is_finite(mode.freq) || mode.freq <= 0.0) {
      throw ConfigurationError("mode " + name + " needs a positive frequency");
    }
    if (mode.levels < 2) {
      throw ConfigurationError("mode " + name + " needs at least 2 levels");
    }
    if (mode.kind == ModeKind::Harmonic && mode.anharm != 0.0) {
      throw ConfigurationError("harmonic mode " + name + " must have zero anharmonicity");
    }
    if (mode.kind == ModeKind::Anharmonic && !(mode.anharm < 0.0)) {
      throw ConfigurationError("anharmonic mode " + name + " must have negative anharmonicity");
    }
  }
  if (!is_finite(g_ref) || g_ref < 0.0) throw ConfigurationError("g_ref must be >= 0");
  if (!is_finite(nu_ref) || nu_ref <= 0.0) throw ConfigurationError("nu_ref must be > 0");
}

std::vector<int> ChainConfig::dims() const {
  std::vector<int> d;
  d.reserve(kNumModes);
  for (const auto& m : modes) d.push_back(m.levels);
  return d;
}

ChainConfig ChainConfig::reference(double g_ref, int levels) {
  ChainConfig c;
  c.modes = {ModeSpec::transmon(5.0, -0.3, levels), ModeSpec::resonator(7.0, levels),
             ModeSpec::transmon(5.65, -0.3, levels), ModeSpec::resonator(7.2, levels),
             ModeSpec::transmon(5.2, -0.3, levels)};
  c.g_ref = g_ref;
  c.nu_ref = 6.0;
  c.scaling = CouplingScaling::SqrtFrequency;
  return c;
}

ProductBasis::ProductBasis(std::vector<int> dims) : dims_(std::move(dims)), strides_(dims_.size()) {
  if (dims_.empty()) throw InvalidDimension("product basis needs at least one mode");
  size_ = 1;
  for (int m = static_cast<int>(dims_.size()) - 1; m >= 0; --m) {
    if (dims_[m] < 1) throw InvalidDimension("mode dimension must be positive");
    strides_[m] = size_;
    size_ *= dims_[m];
  }
}

int ProductBasis::index(const Occupation& occ) const {
  if (num_modes() != kNumModes) throw IndexError("occupation labels need a five-mode basis");
  int idx = 0;
  for (int m = 0; m < kNumModes; ++m) {
    if (occ[m] < 0 || occ[m] >= dims_[m]) {
      throw IndexError("occupation " + to_string(occ) + " outside the truncated space");
    }
    idx += occ[m] * strides_[m];
  }
  return idx;
}

Occupation ProductBasis::occupation(int index) const {
  if (index < 0 || index >= size_) throw IndexError("basis index out of range");
  Occupation occ{};
  for (int m = 0; m < num_modes() && m < kNumModes; ++m) occ[m] = level(index, m);
  return occ;
}

int ProductBasis::parity(int index) const {
  int total = 0;
  for (int m = 0; m < num_modes(); ++m) total += level(index, m);
  return total & 1;
}

ParitySectors::ParitySectors(const ProductBasis& basis)
    : sector_of(basis.size()), position(basis.size()) {
  for (int i = 0; i < basis.size(); ++i) {
    const int p = basis.parity(i);
    sector_of[i] = p;
    position[i] = static_cast<int>(members[p].size());
    members[p].push_back(i);
  }
}

Eigen::MatrixXd lowering_operator(int dim) {
  if (dim < 2) throw InvalidDimension("lowering operator needs dim >= 2, got " + std::to_string(dim));
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) a(n, n + 1) = std::sqrt(static_cast<double>(n + 1));
  return a;
}

double bare_level_energy(const ModeSpec& mode, int n) {
  if (n < 0 || n >= mode.levels) {
    throw IndexError("level " + std::to_string(n) + " outside truncation of " +
                     std::to_string(mode.levels));
  }
  const double nn = static_cast<double>(n);
  if (mode.kind == ModeKind::Harmonic) return mode.freq * nn;
  return mode.freq * nn + 0.5 * mode.anharm * nn * (nn - 1.0);
}

double scaled_coupling(double g_ref, double nu_a, double nu_b, double nu_ref,
                       CouplingScaling rule) {
  if (!(nu_a > 0.0) || !(nu_b > 0.0) || !(nu_ref > 0.0)) {
    throw InvalidParameter("coupling scaling needs positive frequencies");
  }
  if (rule == CouplingScaling::Fixed) return g_ref;
  return g_ref * std::sqrt(nu_a * nu_b) / nu_ref;
}

double cpw_fundamental(double length_m, double eps_r) {
  if (!(length_m > 0.0)) throw InvalidParameter("resonator length must be positive");
  if (!(eps_r >= 1.0)) throw InvalidParameter("relative permittivity must be >= 1");
  const double eps_eff = 0.5 * (eps_r + 1.0);
  return kSpeedOfLight / (2.0 * length_m * std::sqrt(eps_eff)) * 1e-9;
}

OperatorSet OperatorSet::build(const std::vector<int>& dims) {
  OperatorSet ops;
  ops.dims = dims;
  ProductBasis basis(dims);
  ops.total_dim = basis.size();
  for (int m = 0; m < basis.num_modes(); ++m) {
    const Eigen::MatrixXd local = lowering_operator(dims[m]);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (int col = 0; col < basis.size(); ++col) {
      const int n = basis.level(col, m);
      if (n == 0) continue;
      a(col - basis.stride(m), col) = local(n - 1, n);
    }
    ops.number.push_back(a.transpose() * a);
    ops.lowering.push_back(std::move(a));
  }
  return ops;
}

ChainHamiltonian::ChainHamiltonian(const ChainConfig& chain)
    : chain_(validated(chain)), basis_(chain.dims()), sectors_(basis_) {
  const int n = basis_.size();
  static_diagonal_ = Eigen::VectorXd::Zero(n);
  bus_number_ = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < kNumModes; ++m) {
      const int level = basis_.level(i, m);
      if (m == kBus) {
        ModeSpec bus = chain_.modes[m];
        bus.freq = 0.0;
        static_diagonal_(i) += bare_level_energy(bus, level);
        bus_number_(i) = level;
      } else {
        static_diagonal_(i) += bare_level_energy(chain_.modes[m], level);
      }
    }
  }
  // (a + a^dag)(b + b^dag) for neighbouring modes a, b: each basis state
  // connects to the four states with both occupations shifted by +-1.
  for (int bond = 0; bond < kNumModes - 1; ++bond) {
    const int ma = bond;
    const int mb = bond + 1;
    auto& terms = bond_terms_[bond];
    for (int col = 0; col < n; ++col) {
      const int na = basis_.level(col, ma);
      const int nb = basis_.level(col, mb);
      for (int da : {-1, 1}) {
        const int na2 = na + da;
        if (na2 < 0 || na2 >= basis_.dims()[ma]) continue;
        const double amp_a = std::sqrt(static_cast<double>(std::max(na, na2)));
        for (int db : {-1, 1}) {
          const int nb2 = nb + db;
          if (nb2 < 0 || nb2 >= basis_.dims()[mb]) continue;
          const double amp_b = std::sqrt(static_cast<double>(std::max(nb, nb2)));
          const int row = col + da * basis_.stride(ma) + db * basis_.stride(mb);
          terms.push_back({row, col, amp_a * amp_b});
        }
      }
    }
  }
}

double ChainHamiltonian::bond_coupling(int bond, double nu_bus) const {
  auto freq = [&](int m) { return m == kBus ? nu_bus : chain_.modes[m].freq; };
  return scaled_coupling(chain_.g_ref, freq(bond), freq(bond + 1), chain_.nu_ref, chain_.scaling);
}

Eigen::VectorXd ChainHamiltonian::diagonal(double nu_bus) const {
  return static_diagonal_ + nu_bus * bus_number_;
}

Eigen::MatrixXd ChainHamiltonian::dense(double nu_bus) const {
  if (!(nu_bus > 0.0)) throw InvalidParameter("bus frequency must be positive");
  const int n = basis_.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  h.diagonal() = diagonal(nu_bus);
  for (int bond = 0; bond < kNumModes - 1; ++bond) {
    const double g = bond_coupling(bond, nu_bus);
    if (g == 0.0) continue;
    for (const Entry& e : bond_terms_[bond]) h(e.row, e.col) += g * e.value;
  }
  return h;
}

Eigen::SparseMatrix<double> ChainHamiltonian::sparse(double nu_bus) const {
  if (!(nu_bus > 0.0)) throw InvalidParameter("bus frequency must be positive");
  const int n = basis_.size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 4 * n * (kNumModes - 1));
  const Eigen::VectorXd diag = diagonal(nu_bus);
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, diag(i));
  for (int bond = 0; bond < kNumModes - 1; ++bond) {
    const double g = bond_coupling(bond, nu_bus);
    if (g == 0.0) continue;
    for (const Entry& e : bond_terms_[bond]) triplets.emplace_back(e.row, e.col, g * e.value);
  }
  Eigen::SparseMatrix<double> h(n, n);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

Eigen::MatrixXd ChainHamiltonian::sector_block(double nu_bus, int parity) const {
  if (!(nu_bus > 0.0)) throw InvalidParameter("bus frequency must be positive");
  const auto& members = sectors_.members[parity];
  const int n = static_cast<int>(members.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  const Eigen::VectorXd diag = diagonal(nu_bus);
  for (int k = 0; k < n; ++k) h(k, k) = diag(members[k]);
  for (int bond = 0; bond < kNumModes - 1; ++bond) {
    const double g = bond_coupling(bond, nu_bus);
    if (g == 0.0) continue;
    for (const Entry& e : bond_terms_[bond]) {
      if (sectors_.sector_of[e.col] != parity) continue;
      h(sectors_.position[e.row], sectors_.position[e.col]) += g * e.value;
    }
  }
  return h;
}

Eigen::MatrixXd build_hamiltonian(const ChainConfig& chain, double nu_bus) {
  return ChainHamiltonian(chain).dense(nu_bus);
}

}  // namespace qbridge
