#pragma once

#include <array>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "qbridge/circuit_model.hpp"
#include "qbridge/control.hpp"

namespace qbridge {

using Matrix4c = Eigen::Matrix4cd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kTwoPi = 6.283185307179586476925287;

// Resonator losses. kappa_j = 2 pi nu_rj / Q_j in 1/ns; Q = inf disables decay.
struct NoiseSpec {
  std::array<double, 2> q_factors = {kInfinity, kInfinity};

  static NoiseSpec uniform(double q) { return NoiseSpec{{q, q}}; }
  double kappa(int resonator, const ChainConfig& chain) const;
  bool lossless() const;
  void validate() const;
};

struct SolverInfo {
  double dt = 0.0;  // ns, actual step after dividing the gate evenly
  int steps = 0;
  std::string method;
  double residual = 0.0;  // unitarity or trace residual, depending on method
};

struct GateReport {
  double conditional_phase = 0.0;  // rad
  double leakage = 0.0;
  double error_avg = 0.0;
  double unitary_baseline = 0.0;
  SolverInfo solver;
};

// Dressed computational states |00>, |01>, |10>, |11> (|Q1 Q2>) of the chain
// at the bus idle frequency. Every gate is evaluated in this frame.
struct ComputationalFrame {
  std::array<Eigen::VectorXd, 4> states;
  std::array<double, 4> energies{};
  std::array<double, 4> overlaps{};
  double nu_idle = 0.0;
};

ComputationalFrame computational_frame(const ChainConfig& chain, double nu_idle);

// Full-space propagator of i d/dt psi = 2 pi H(nu(t)) psi with one exact
// exponential per step at the step midpoint. dt is shrunk so that the gate
// splits into an integer number (>= 64) of steps.
Eigen::MatrixXcd propagate_unitary(const ChainConfig& chain, const CZPulse& pulse, double dt);

// Same integrator applied only to the four computational states; returns
// <c_a| U |c_b>.
Matrix4c propagate_computational(const ChainConfig& chain, const CZPulse& pulse, double dt,
                                 const ComputationalFrame& frame);

// Runs the computational propagation at dt and dt / 2 and throws
// AccuracyError if any element moves by more than `tolerance`. Returns the
// finer result.
Matrix4c propagate_computational_checked(const ChainConfig& chain, const CZPulse& pulse,
                                         double dt, const ComputationalFrame& frame,
                                         double tolerance = 1e-6);

Matrix4c computational_block(const Eigen::MatrixXcd& unitary, const ComputationalFrame& frame);

double unitarity_residual(const Eigen::MatrixXcd& u);

// Quantum channel restricted to the computational subspace:
// out[i][j] = P E(|c_i><c_j|) P with P the projector on the frame states.
struct Channel {
  std::array<std::array<Matrix4c, 4>, 4> out;
  double max_trace_drift = 0.0;      // over all steps and diagonal inputs
  double min_eigenvalue = 0.0;       // of the evolved diagonal inputs
  bool positivity_warning = false;   // min_eigenvalue < -1e-8
  SolverInfo solver;
};

// Lindblad evolution with bare resonator dissipators sqrt(kappa_j) b_j,
// Strang-split into exact amplitude-damping half steps around exact unitary
// midpoint steps. Throws AccuracyError if the trace drifts by more than 1e-6.
Channel propagate_channel(const ChainConfig& chain, const CZPulse& pulse, const NoiseSpec& noise,
                          double dt, const ComputationalFrame& frame);

// Same integrator for one density matrix given in the product basis.
Eigen::MatrixXcd propagate_density(const ChainConfig& chain, const CZPulse& pulse,
                                   const NoiseSpec& noise, double dt, const Eigen::MatrixXcd& rho0);

// arg u00 + arg u11 - arg u01 - arg u10 modulo 2 pi, reported in
// (-pi/2, 3pi/2].
double conditional_phase(const Matrix4c& u);

// Distance of a phase from pi modulo 2 pi.
double phase_error_to_pi(double phase);

// Applies the single-qubit Z rotations and global phase that make the |00>,
// |01> and |10> diagonal elements real and positive.
Matrix4c remove_local_phases(const Matrix4c& m);

// 1 - mean population that stays in the computational subspace.
double leakage(const Matrix4c& u);
double leakage(const Channel& channel);

Matrix4c cz_target();

// (Tr(M^dag M) + |Tr M|^2) / 20 with M = target^dag U. Local phases are not
// removed here.
double average_gate_error(const Matrix4c& u, const Matrix4c& target = cz_target());

// (4 F_pro + p) / 5 where p is the mean surviving trace; reduces to the usual
// (d F_pro + 1) / (d + 1) for trace-preserving channels and to the unitary
// expression above for closed-system channels.
double average_gate_error(const Channel& channel, const Matrix4c& target = cz_target());
// Channel version of the rotation above, read from the |k><00| coherences.
Channel remove_local_phases(const Channel& channel);

double process_fidelity(const Channel& channel, const Matrix4c& target);

struct GateEvaluationOptions {
  double dt = 0.025;
  bool check_step_convergence = false;
};

// Unitary baseline and, for a lossy noise spec, the Lindblad error.
GateReport evaluate_gate(const ChainConfig& chain, const CZPulse& pulse, const NoiseSpec& noise,
                         const GateEvaluationOptions& options = {});

}  // namespace qbridge
