#include "qbridge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qbridge/errors.hpp"
#include "qbridge/spectrum.hpp"

namespace qbridge {

namespace {

using cdouble = std::complex<double>;
using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr cdouble kI{0.0, 1.0};

// Largest 2 pi * t * (spectral half-width) handled by one Chebyshev expansion.
constexpr double kMaxChebyshevArgument = 60.0;

struct TimeGrid {
  int steps = 0;
  double dt = 0.0;
};

TimeGrid make_grid(double gate_time, double dt) {
  if (!(gate_time >= 0.0)) throw InvalidParameter("gate time must be >= 0");
  if (gate_time == 0.0) return {0, 0.0};
  if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
  const int steps = std::max(64, static_cast<int>(std::ceil(gate_time / dt - 1e-9)));
  return {steps, gate_time / steps};
}

// Midpoint bus frequencies grouped into runs of identical values.
struct Segment {
  double nu;
  int steps;
};

std::vector<Segment> midpoint_segments(const CZPulse& pulse, const TimeGrid& grid) {
  std::vector<Segment> segments;
  for (int k = 0; k < grid.steps; ++k) {
    const double nu = pulse.frequency((k + 0.5) * grid.dt);
    if (!(nu > 0.0)) throw InvalidParameter("pulse drives the bus to a nonpositive frequency");
    if (!segments.empty() && segments.back().nu == nu) {
      ++segments.back().steps;
    } else {
      segments.push_back({nu, 1});
    }
  }
  return segments;
}

struct SpectralBounds {
  double lo;
  double hi;
};

SpectralBounds gershgorin_bounds(const SparseRow& h) {
  SpectralBounds b{INFINITY, -INFINITY};
  for (int r = 0; r < h.outerSize(); ++r) {
    double center = 0.0;
    double radius = 0.0;
    for (SparseRow::InnerIterator it(h, r); it; ++it) {
      if (it.col() == r) {
        center = it.value();
      } else {
        radius += std::abs(it.value());
      }
    }
    b.lo = std::min(b.lo, center - radius);
    b.hi = std::max(b.hi, center + radius);
  }
  return b;
}

// exp(-i 2 pi H t) X by a Chebyshev expansion on [bounds.lo, bounds.hi].
class ChebyshevPropagator {
 public:
  void apply(const SparseRow& h, const SpectralBounds& bounds, double t, Eigen::MatrixXcd& x) {
    const double half = std::max(0.5 * (bounds.hi - bounds.lo), 1e-12);
    const double mid = 0.5 * (bounds.hi + bounds.lo);
    const double theta = kTwoPi * t;
    const double arg = theta * half;

    // c_k (-i)^k J_k(arg); J_k decays faster than exponentially once k > arg.
    coeffs_.clear();
    for (int k = 0;; ++k) {
      const double j = std::cyl_bessel_j(static_cast<double>(k), arg);
      coeffs_.push_back((k == 0 ? 1.0 : 2.0) * j * std::pow(-kI, k));
      if (k > arg && std::abs(j) < 1e-17) break;
      if (k > 10000) throw AccuracyError("Chebyshev expansion did not converge");
    }

    const double inv_half = 1.0 / half;
    t_prev_ = x;
    t_curr_.noalias() = h * x;
    t_curr_ = (t_curr_ - mid * x) * inv_half;
    result_ = coeffs_[0] * t_prev_ + coeffs_[1] * t_curr_;
    for (size_t k = 2; k < coeffs_.size(); ++k) {
      t_next_.noalias() = h * t_curr_;
      t_next_ = (2.0 * inv_half) * (t_next_ - mid * t_curr_) - t_prev_;
      result_ += coeffs_[k] * t_next_;
      std::swap(t_prev_, t_curr_);
      std::swap(t_curr_, t_next_);
    }
    x = std::exp(-kI * theta * mid) * result_;
  }

 private:
  std::vector<cdouble> coeffs_;
  Eigen::MatrixXcd t_prev_, t_curr_, t_next_, result_;
};

// Long constant stretches are split so that each expansion stays short.
void propagate_segment(ChebyshevPropagator& cheb, const SparseRow& h, double duration,
                       Eigen::MatrixXcd& x) {
  const SpectralBounds bounds = gershgorin_bounds(h);
  const double half = std::max(0.5 * (bounds.hi - bounds.lo), 1e-9);
  const double max_chunk = kMaxChebyshevArgument / (kTwoPi * half);
  const int chunks = std::max(1, static_cast<int>(std::ceil(duration / max_chunk)));
  for (int c = 0; c < chunks; ++c) cheb.apply(h, bounds, duration / chunks, x);
}

// exp(-i 2 pi H_p dt) for both parity blocks.
struct SectorStep {
  std::array<Eigen::MatrixXcd, 2> u;
};

SectorStep sector_step(const ChainHamiltonian& model, double nu, double dt) {
  SectorStep step;
  for (int p = 0; p < 2; ++p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(model.sector_block(nu, p));
    if (solver.info() != Eigen::Success) throw AccuracyError("sector eigendecomposition failed");
    const Eigen::MatrixXcd v = solver.eigenvectors().cast<cdouble>();
    const Eigen::VectorXcd phases =
        (-kI * kTwoPi * dt * solver.eigenvalues().cast<cdouble>()).array().exp().matrix();
    step.u[p].noalias() = v * phases.asDiagonal() * v.transpose();
  }
  return step;
}

// Maps each global index to its position in the sector-ordered basis
// (even sector first).
std::vector<int> sector_permutation(const ParitySectors& sectors) {
  std::vector<int> perm(sectors.sector_of.size());
  const int offset = sectors.sector_size(0);
  for (size_t i = 0; i < perm.size(); ++i) {
    perm[i] = sectors.position[i] + (sectors.sector_of[i] == 0 ? 0 : offset);
  }
  return perm;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Exact amplitude-damping channel of one resonator over a fixed time,
// K_m = sum_n sqrt(C(n, m)) s^(n - m) (1 - s^2)^(m / 2) |n - m><n|, s = exp(-kappa t / 2),
// expressed on sector-ordered indices.
class DampingMap {
 public:
  struct Jump {
    std::vector<int> src;
    std::vector<int> dst;
    std::vector<double> amp;
  };

  DampingMap(const ProductBasis& basis, const std::vector<int>& perm, int mode, double kappa,
             double duration) {
    const int n = basis.size();
    const double s = std::exp(-0.5 * kappa * duration);
    const double q = 1.0 - s * s;
    diag_.resize(n);
    jumps_.resize(basis.dims()[mode] - 1);
    for (int i = 0; i < n; ++i) {
      const int level = basis.level(i, mode);
      diag_(perm[i]) = std::pow(s, level);
      for (int m = 1; m <= level; ++m) {
        Jump& j = jumps_[m - 1];
        j.src.push_back(perm[i]);
        j.dst.push_back(perm[i - m * basis.stride(mode)]);
        j.amp.push_back(std::sqrt(binomial(level, m)) * std::pow(s, level - m) *
                        std::pow(q, 0.5 * m));
      }
    }
  }

  void apply(Eigen::MatrixXcd& rho, Eigen::MatrixXcd& scratch) const {
    scratch = rho;
    rho = diag_.asDiagonal() * scratch * diag_.asDiagonal();
    for (const Jump& j : jumps_) {
      const int count = static_cast<int>(j.src.size());
      for (int b = 0; b < count; ++b) {
        const int sb = j.src[b];
        const int db = j.dst[b];
        for (int a = 0; a < count; ++a) {
          rho(j.dst[a], db) += j.amp[a] * j.amp[b] * scratch(j.src[a], sb);
        }
      }
    }
  }

 private:
  Eigen::VectorXd diag_;
  std::vector<Jump> jumps_;
};

double wrap_to_pi(double x) {
  x = std::remainder(x, kTwoPi);
  if (x <= -M_PI) x += kTwoPi;
  return x;
}

}  // namespace

double NoiseSpec::kappa(int resonator, const ChainConfig& chain) const {
  if (resonator < 0 || resonator > 1) throw IndexError("resonator index must be 0 or 1");
  const double q = q_factors[resonator];
  if (std::isinf(q)) return 0.0;
  const double nu = chain.modes[resonator == 0 ? kR1 : kR2].freq;
  return kTwoPi * nu / q;
}

bool NoiseSpec::lossless() const {
  return std::isinf(q_factors[0]) && std::isinf(q_factors[1]);
}

void NoiseSpec::validate() const {
  for (double q : q_factors) {
    if (std::isnan(q) || !(q > 0.0)) throw InvalidParameter("quality factors must be > 0");
  }
}

ComputationalFrame computational_frame(const ChainConfig& chain, double nu_idle) {
  const ChainHamiltonian model(chain);
  const DressedSpectrum s = dressed_spectrum(model.dense(nu_idle), chain.dims());
  ComputationalFrame frame;
  frame.nu_idle = nu_idle;
  for (int k = 0; k < 4; ++k) {
    const Occupation& label = kComputationalLabels[k];
    frame.states[k] = s.vector(label);
    frame.energies[k] = s.energy(label);
    frame.overlaps[k] = s.overlap(label);
  }
  return frame;
}

Eigen::MatrixXcd propagate_unitary(const ChainConfig& chain, const CZPulse& pulse, double dt) {
  const ChainHamiltonian model(chain);
  const ParitySectors& sectors = model.sectors();
  const TimeGrid grid = make_grid(pulse.gate_time, dt);
  std::array<Eigen::MatrixXcd, 2> blocks;
  for (int p = 0; p < 2; ++p) {
    blocks[p] = Eigen::MatrixXcd::Identity(sectors.sector_size(p), sectors.sector_size(p));
  }
  if (grid.steps > 0) {
    Eigen::MatrixXcd tmp;
    for (const Segment& seg : midpoint_segments(pulse, grid)) {
      const SectorStep step = sector_step(model, seg.nu, grid.dt);
      for (int k = 0; k < seg.steps; ++k) {
        for (int p = 0; p < 2; ++p) {
          tmp.noalias() = step.u[p] * blocks[p];
          blocks[p].swap(tmp);
        }
      }
    }
  }
  const int n = model.dim();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(n, n);
  for (int p = 0; p < 2; ++p) {
    const auto& members = sectors.members[p];
    for (size_t c = 0; c < members.size(); ++c)
      for (size_t r = 0; r < members.size(); ++r) u(members[r], members[c]) = blocks[p](r, c);
  }
  return u;
}

namespace {

// Full-space images of the four frame states (columns) and the frame matrix.
struct PropagatedStates {
  Eigen::MatrixXd frame;
  Eigen::MatrixXcd states;
};

PropagatedStates propagate_states(const ChainConfig& chain, const CZPulse& pulse, double dt,
                                  const ComputationalFrame& frame) {
  const ChainHamiltonian model(chain);
  const int n = model.dim();
  PropagatedStates out;
  out.frame.resize(n, 4);
  for (int k = 0; k < 4; ++k) {
    if (frame.states[k].size() != n) throw InvalidInput("frame does not match the chain dimension");
    out.frame.col(k) = frame.states[k];
  }
  out.states = out.frame.cast<cdouble>();
  const TimeGrid grid = make_grid(pulse.gate_time, dt);
  if (grid.steps > 0) {
    ChebyshevPropagator cheb;
    for (const Segment& seg : midpoint_segments(pulse, grid)) {
      const SparseRow h = model.sparse(seg.nu);
      propagate_segment(cheb, h, seg.steps * grid.dt, out.states);
    }
  }
  return out;
}

void check_step_change(double dt, double change, double tolerance) {
  if (change > tolerance) {
    throw AccuracyError("halving dt = " + std::to_string(dt) +
                        " ns moved a computational matrix element by " + std::to_string(change) +
                        "; use a smaller dt");
  }
}

Matrix4c project(const PropagatedStates& p) {
  return p.frame.cast<cdouble>().transpose() * p.states;
}

double norm_drift(const PropagatedStates& p) {
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(p.states.col(k).squaredNorm() - 1.0));
  return worst;
}

}  // namespace

Matrix4c propagate_computational(const ChainConfig& chain, const CZPulse& pulse, double dt,
                                 const ComputationalFrame& frame) {
  return project(propagate_states(chain, pulse, dt, frame));
}

Matrix4c propagate_computational_checked(const ChainConfig& chain, const CZPulse& pulse,
                                         double dt, const ComputationalFrame& frame,
                                         double tolerance) {
  const Matrix4c coarse = propagate_computational(chain, pulse, dt, frame);
  const TimeGrid grid = make_grid(pulse.gate_time, dt);
  if (grid.steps == 0) return coarse;
  const Matrix4c fine = propagate_computational(chain, pulse, 0.5 * grid.dt, frame);
  check_step_change(grid.dt, (fine - coarse).cwiseAbs().maxCoeff(), tolerance);
  return fine;
}

Matrix4c computational_block(const Eigen::MatrixXcd& unitary, const ComputationalFrame& frame) {
  Matrix4c block;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      block(a, b) = frame.states[a].cast<cdouble>().dot(unitary * frame.states[b].cast<cdouble>());
    }
  }
  return block;
}

double unitarity_residual(const Eigen::MatrixXcd& u) {
  const Eigen::MatrixXcd d =
      u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

namespace {

// A density matrix in sector order. The Hamiltonian keeps parity blocks apart
// and photon loss shifts both indices at once, so the diagonal block pair and
// the cross block pair evolve independently.
struct DensityInput {
  Eigen::MatrixXcd rho;
  bool diagonal_pair = true;
  bool cross_pair = false;
  double initial_trace = 1.0;
};

// Strang splitting: exact damping over dt/2, exact unitary step at the
// midpoint Hamiltonian, exact damping over dt/2. Returns the largest trace
// drift seen after any step.
double evolve_densities(const ChainHamiltonian& model, const std::vector<int>& perm,
                        const CZPulse& pulse, const NoiseSpec& noise, const TimeGrid& grid,
                        std::vector<DensityInput>& inputs) {
  if (grid.steps == 0) return 0.0;
  const ParitySectors& sectors = model.sectors();
  const std::array<int, 2> offset = {0, sectors.sector_size(0)};
  const std::array<int, 2> size = {sectors.sector_size(0), sectors.sector_size(1)};

  std::vector<DampingMap> half_damping;
  std::vector<DampingMap> full_damping;
  for (int r = 0; r < 2; ++r) {
    const double kappa = noise.kappa(r, model.chain());
    if (kappa == 0.0) continue;
    const int mode = r == 0 ? kR1 : kR2;
    half_damping.emplace_back(model.basis(), perm, mode, kappa, 0.5 * grid.dt);
    full_damping.emplace_back(model.basis(), perm, mode, kappa, grid.dt);
  }

  Eigen::MatrixXcd scratch;
  Eigen::MatrixXcd tmp;
  double drift = 0.0;
  auto damp = [&](const std::vector<DampingMap>& maps) {
    for (DensityInput& in : inputs)
      for (const DampingMap& m : maps) m.apply(in.rho, scratch);
  };
  auto check_trace = [&]() {
    for (const DensityInput& in : inputs) {
      drift = std::max(drift, std::abs(in.rho.trace() - in.initial_trace));
    }
  };

  bool first = true;
  for (const Segment& seg : midpoint_segments(pulse, grid)) {
    const SectorStep step = sector_step(model, seg.nu, grid.dt);
    for (int k = 0; k < seg.steps; ++k) {
      damp(first ? half_damping : full_damping);
      first = false;
      for (DensityInput& in : inputs) {
        for (int p = 0; p < 2; ++p) {
          for (int q = 0; q < 2; ++q) {
            if (!((p == q) ? in.diagonal_pair : in.cross_pair)) continue;
            auto block = in.rho.block(offset[p], offset[q], size[p], size[q]);
            tmp.noalias() = step.u[p] * block;
            block.noalias() = tmp * step.u[q].adjoint();
          }
        }
      }
      check_trace();
    }
  }
  damp(half_damping);
  check_trace();
  return drift;
}

void check_drift(double drift) {
  if (drift > 1e-6) {
    throw AccuracyError("density-matrix trace drifted by " + std::to_string(drift) +
                        "; use a smaller dt");
  }
}

}  // namespace

Eigen::MatrixXcd propagate_density(const ChainConfig& chain, const CZPulse& pulse,
                                   const NoiseSpec& noise, double dt, const Eigen::MatrixXcd& rho0) {
  noise.validate();
  const ChainHamiltonian model(chain);
  const int n = model.dim();
  if (rho0.rows() != n || rho0.cols() != n) throw InvalidInput("density matrix has the wrong size");
  const std::vector<int> perm = sector_permutation(model.sectors());
  const int even = model.sectors().sector_size(0);

  DensityInput in;
  in.rho.resize(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) in.rho(perm[r], perm[c]) = rho0(r, c);
  const double diag_norm = in.rho.topLeftCorner(even, even).norm() +
                           in.rho.bottomRightCorner(n - even, n - even).norm();
  const double cross_norm =
      in.rho.topRightCorner(even, n - even).norm() + in.rho.bottomLeftCorner(n - even, even).norm();
  in.diagonal_pair = diag_norm > 0.0;
  in.cross_pair = cross_norm > 0.0;
  in.initial_trace = in.rho.trace().real();

  std::vector<DensityInput> inputs{std::move(in)};
  check_drift(evolve_densities(model, perm, pulse, noise, make_grid(pulse.gate_time, dt), inputs));

  Eigen::MatrixXcd out(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) out(r, c) = inputs[0].rho(perm[r], perm[c]);
  return out;
}

Channel propagate_channel(const ChainConfig& chain, const CZPulse& pulse, const NoiseSpec& noise,
                          double dt, const ComputationalFrame& frame) {
  noise.validate();
  const ChainHamiltonian model(chain);
  const ParitySectors& sectors = model.sectors();
  const int n = model.dim();
  const std::vector<int> perm = sector_permutation(sectors);

  // Frame states in sector order, with their parity.
  std::array<Eigen::VectorXd, 4> states;
  std::array<int, 4> parity{};
  for (int k = 0; k < 4; ++k) {
    if (frame.states[k].size() != n) throw InvalidInput("frame does not match the chain dimension");
    states[k] = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) states[k](perm[i]) = frame.states[k](i);
    parity[k] = sectors.sector_of[model.basis().index(kComputationalLabels[k])];
  }

  // Inputs |c_i><c_j| for i <= j; the rest follow by Hermitian conjugation.
  std::vector<std::pair<int, int>> pairs;
  std::vector<DensityInput> inputs;
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      DensityInput in;
      in.rho = (states[i] * states[j].transpose()).cast<cdouble>();
      in.diagonal_pair = parity[i] == parity[j];
      in.cross_pair = !in.diagonal_pair;
      in.initial_trace = i == j ? 1.0 : 0.0;
      pairs.emplace_back(i, j);
      inputs.push_back(std::move(in));
    }
  }

  const TimeGrid grid = make_grid(pulse.gate_time, dt);
  Channel channel;
  channel.max_trace_drift = evolve_densities(model, perm, pulse, noise, grid, inputs);

  for (size_t k = 0; k < inputs.size(); ++k) {
    const auto [i, j] = pairs[k];
    Matrix4c block;
    for (int a = 0; a < 4; ++a) {
      const Eigen::VectorXcd rho_a = inputs[k].rho * states[a].cast<cdouble>();
      for (int b = 0; b < 4; ++b) block(b, a) = states[b].cast<cdouble>().dot(rho_a);
    }
    channel.out[i][j] = block;
    if (i != j) channel.out[j][i] = block.adjoint();
  }

  channel.min_eigenvalue = INFINITY;
  for (size_t k = 0; k < inputs.size(); ++k) {
    if (pairs[k].first != pairs[k].second) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(inputs[k].rho, Eigen::EigenvaluesOnly);
    channel.min_eigenvalue = std::min(channel.min_eigenvalue, solver.eigenvalues().minCoeff());
  }
  channel.positivity_warning = channel.min_eigenvalue < -1e-8;
  channel.solver = {grid.dt, grid.steps, "lindblad-strang-exact-exponential",
                    channel.max_trace_drift};
  check_drift(channel.max_trace_drift);
  return channel;
}

double conditional_phase(const Matrix4c& u) {
  for (int k = 0; k < 4; ++k) {
    if (std::abs(u(k, k)) <= 0.5) {
      throw NotPhaseLike("computational block is not diagonal-dominant (|u_kk| <= 0.5)");
    }
  }
  double phi = std::arg(u(0, 0)) + std::arg(u(3, 3)) - std::arg(u(1, 1)) - std::arg(u(2, 2));
  // Representative in (-pi/2, 3pi/2]: 0 and pi both sit far from the cut.
  phi = std::fmod(phi + 0.5 * M_PI, kTwoPi);
  if (phi <= 0.0) phi += kTwoPi;
  return phi - 0.5 * M_PI;
}

double phase_error_to_pi(double phase) { return std::abs(wrap_to_pi(phase - M_PI)); }

Matrix4c remove_local_phases(const Matrix4c& m) {
  const double ref = std::arg(m(0, 0));
  const double alpha = std::arg(m(2, 2)) - ref;
  const double beta = std::arg(m(1, 1)) - ref;
  Eigen::Vector4cd d;
  d << 1.0, std::exp(-kI * beta), std::exp(-kI * alpha), std::exp(-kI * (alpha + beta));
  return std::exp(-kI * ref) * (d.asDiagonal() * m);
}

double leakage(const Matrix4c& u) { return 1.0 - 0.25 * u.squaredNorm(); }

double leakage(const Channel& channel) {
  double kept = 0.0;
  for (int i = 0; i < 4; ++i) kept += channel.out[i][i].trace().real();
  return 1.0 - 0.25 * kept;
}

Matrix4c cz_target() {
  Matrix4c cz = Matrix4c::Identity();
  cz(3, 3) = -1.0;
  return cz;
}

double average_gate_error(const Matrix4c& u, const Matrix4c& target) {
  const Matrix4c m = target.adjoint() * u;
  const double f = ((m.adjoint() * m).trace().real() + std::norm(m.trace())) / 20.0;
  return 1.0 - f;
}

double process_fidelity(const Channel& channel, const Matrix4c& target) {
  cdouble sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      sum += (target.adjoint() * channel.out[i][j] * target)(i, j);
    }
  }
  return sum.real() / 16.0;
}

double average_gate_error(const Channel& channel, const Matrix4c& target) {
  double kept = 0.0;
  for (int i = 0; i < 4; ++i) kept += channel.out[i][i].trace().real();
  const double f = (4.0 * process_fidelity(channel, target) + 0.25 * kept) / 5.0;
  return 1.0 - f;
}

Channel remove_local_phases(const Channel& channel) {
  // Phase of |k> relative to |00> from the coherence E(|k><00|)_{k,00}.
  const double alpha = std::arg(channel.out[2][0](2, 0));
  const double beta = std::arg(channel.out[1][0](1, 0));
  Eigen::Vector4cd d;
  d << 1.0, std::exp(-kI * beta), std::exp(-kI * alpha), std::exp(-kI * (alpha + beta));
  Channel out = channel;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out.out[i][j] = d.asDiagonal() * channel.out[i][j] * d.conjugate().asDiagonal();
  return out;
}

GateReport evaluate_gate(const ChainConfig& chain, const CZPulse& pulse, const NoiseSpec& noise,
                         const GateEvaluationOptions& options) {
  const ComputationalFrame frame = computational_frame(chain, pulse.nu_idle);
  TimeGrid grid = make_grid(pulse.gate_time, options.dt);
  PropagatedStates states = propagate_states(chain, pulse, grid.dt, frame);
  Matrix4c u = project(states);
  if (options.check_step_convergence && grid.steps > 0) {
    PropagatedStates fine = propagate_states(chain, pulse, 0.5 * grid.dt, frame);
    const Matrix4c u_fine = project(fine);
    check_step_change(grid.dt, (u_fine - u).cwiseAbs().maxCoeff(), 1e-6);
    states = std::move(fine);
    u = u_fine;
    grid = make_grid(pulse.gate_time, 0.5 * grid.dt);
  }
  GateReport report;
  report.conditional_phase = conditional_phase(u);
  report.leakage = leakage(u);
  report.unitary_baseline = average_gate_error(remove_local_phases(u));
  report.error_avg = report.unitary_baseline;
  report.solver = {grid.dt, grid.steps, "midpoint-exponential-chebyshev", norm_drift(states)};
  if (!noise.lossless()) {
    const Channel channel = propagate_channel(chain, pulse, noise, options.dt, frame);
    report.error_avg = average_gate_error(remove_local_phases(channel));
    report.leakage = leakage(channel);
    report.solver = channel.solver;
  }
  return report;
}

}  // namespace qbridge
