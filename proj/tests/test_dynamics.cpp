#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qbridge/circuit_model.hpp"
#include "qbridge/control.hpp"
#include "qbridge/dynamics.hpp"
#include "qbridge/errors.hpp"
#include "qbridge/spectrum.hpp"

using namespace qbridge;
using cd = std::complex<double>;

namespace {

const cd kI(0.0, 1.0);

// Close to the calibrated 80 ns CZ at g = 170 MHz; used wherever a realistic
// trajectory is needed without running the calibration.
constexpr double kOperatingPoint = 5.259782;

CZPulse static_pulse(double gate_time, double nu) {
  return flattop_trajectory(gate_time, 0.2, nu, nu, 64);
}

Matrix4c diag4(cd a, cd b, cd c, cd d) {
  Matrix4c m = Matrix4c::Zero();
  m.diagonal() << a, b, c, d;
  return m;
}

template <typename Matrix>
Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Lowering operator of `mode` in the product space, Q1 most significant.
Eigen::MatrixXd embedded_lowering(const std::vector<int>& dims, int mode) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (int m = 0; m < static_cast<int>(dims.size()); ++m) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dims[m], dims[m]);
    if (m == mode) {
      f.setZero();
      for (int n = 1; n < dims[m]; ++n) f(n - 1, n) = std::sqrt(static_cast<double>(n));
    }
    out = kron<Eigen::MatrixXd>(out, f);
  }
  return out;
}

Eigen::MatrixXcd pure_state(int dim, const std::vector<int>& indices) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  for (int i : indices) psi(i) = 1.0;
  psi.normalize();
  return psi * psi.adjoint();
}

}  // namespace

TEST(Propagation, ZeroDurationIsIdentity) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  CZPulse p;
  p.gate_time = 0.0;
  p.nu_idle = p.nu_op = 5.65;
  const Eigen::MatrixXcd u = propagate_unitary(chain, p, 0.05);
  EXPECT_TRUE(u.isApprox(Eigen::MatrixXcd::Identity(243, 243), 0.0));
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  EXPECT_LT((propagate_computational(chain, p, 0.05, frame) - Matrix4c::Identity()).norm(), 1e-12);
}

TEST(Propagation, StaticBusGivesDressedPhases) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  for (double nu : {5.65, 5.4}) {
    const double t = 80.0;
    const ComputationalFrame frame = computational_frame(chain, nu);
    const Matrix4c u = propagate_computational(chain, static_pulse(t, nu), 0.025, frame);
    for (int k = 0; k < 4; ++k) {
      const double expected = -kTwoPi * frame.energies[k] * t;
      EXPECT_LT(std::abs(std::arg(u(k, k) * std::exp(-kI * expected))), 1e-6) << nu << " " << k;
      EXPECT_NEAR(std::abs(u(k, k)), 1.0, 1e-10);
    }
    const double zeta = zz_coupling(chain, nu).zeta;
    EXPECT_NEAR(conditional_phase(u), -kTwoPi * zeta * t, 1e-6);
  }
}

TEST(Propagation, RealisticPulseIsUnitary) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(80.0, 0.2, 5.65, kOperatingPoint, 256);
  const Eigen::MatrixXcd u = propagate_unitary(chain, p, 0.025);
  EXPECT_LT(unitarity_residual(u), 1e-8);

  // The Chebyshev path for the four computational states agrees
  // with the per-step eigendecomposition.
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  const Matrix4c block = computational_block(u, frame);
  const Matrix4c direct = propagate_computational(chain, p, 0.025, frame);
  EXPECT_LT((block - direct).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Propagation, StepHalvingConverged) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(80.0, 0.2, 5.65, kOperatingPoint, 256);
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  EXPECT_NO_THROW(propagate_computational_checked(chain, p, 0.025, frame));
  const double coarse = average_gate_error(remove_local_phases(propagate_computational(chain, p, 0.025, frame)));
  const double fine = average_gate_error(remove_local_phases(propagate_computational(chain, p, 0.0125, frame)));
  EXPECT_LT(std::abs(coarse - fine), 1e-5);
}

TEST(Propagation, CoarseStepRaisesAccuracyError) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(80.0, 0.2, 5.65, kOperatingPoint, 256);
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  EXPECT_THROW(propagate_computational_checked(chain, p, 1.25, frame), AccuracyError);
}

TEST(Propagation, RejectsMismatchedFrame) {
  const ComputationalFrame frame = computational_frame(ChainConfig::reference(0.17), 5.65);
  const ChainConfig bigger = ChainConfig::reference(0.17, 4);
  EXPECT_THROW(propagate_computational(bigger, static_pulse(10.0, 5.65), 0.05, frame), InvalidInput);
}

TEST(Channel, LosslessMatchesUnitaryBlock) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(20.0, 0.2, 5.65, 5.3, 128);
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  const Matrix4c u = propagate_computational(chain, p, 0.025, frame);
  const Channel ch = propagate_channel(chain, p, NoiseSpec{}, 0.025, frame);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const Matrix4c expected = u.col(i) * u.col(j).adjoint();
      EXPECT_LT((ch.out[i][j] - expected).cwiseAbs().maxCoeff(), 1e-8) << i << j;
    }
  }
  EXPECT_NEAR(average_gate_error(remove_local_phases(ch)),
              average_gate_error(remove_local_phases(u)), 1e-8);
  EXPECT_NEAR(leakage(ch), leakage(u), 1e-8);
  EXPECT_LT(ch.max_trace_drift, 1e-6);
}

TEST(Channel, LossyTracePreservedAndPositive) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(20.0, 0.2, 5.65, 5.3, 128);
  const ComputationalFrame frame = computational_frame(chain, 5.65);
  const Channel ch = propagate_channel(chain, p, NoiseSpec::uniform(1e3), 0.025, frame);
  EXPECT_LT(ch.max_trace_drift, 1e-6);
  EXPECT_GE(ch.min_eigenvalue, -1e-8);
  EXPECT_FALSE(ch.positivity_warning);
  EXPECT_EQ(ch.solver.method, "lindblad-strang-exact-exponential");
  const double err = average_gate_error(remove_local_phases(ch));
  const double base = average_gate_error(remove_local_phases(propagate_computational(chain, p, 0.025, frame)));
  EXPECT_GE(err, base - 1e-8);
  EXPECT_LE(err, 1.0);
}

TEST(Channel, ResonatorPhotonDecaysExponentially) {
  const ChainConfig chain = ChainConfig::reference(0.0);
  const NoiseSpec noise = NoiseSpec::uniform(1e3);
  const double kappa = noise.kappa(0, chain);
  const double t = 1.0 / kappa;
  const ChainHamiltonian model(chain);
  const int start = model.basis().index({0, 1, 0, 0, 0});
  const Eigen::MatrixXcd rho = propagate_density(chain, static_pulse(t, 5.65), noise, 0.025,
                                                 pure_state(model.dim(), {start}));
  EXPECT_NEAR(rho(start, start).real(), std::exp(-1.0), 1e-4);
  EXPECT_NEAR(rho(0, 0).real(), 1.0 - std::exp(-1.0), 1e-4);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-6);
}

// Two levels per mode keeps the Liouvillian at 1024 x 1024 so it can be
// exponentiated directly.
TEST(Channel, MatchesLiouvillianExponential) {
  const ChainConfig chain = ChainConfig::reference(0.17, 2);
  const double nu = 5.5, t = 3.0;
  const NoiseSpec noise = NoiseSpec::uniform(40.0);
  const ChainHamiltonian model(chain);
  const int n = model.dim();
  const Eigen::MatrixXcd h = model.dense(nu).cast<cd>();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  // Column-major vectorization: vec(A X B) = (B^T kron A) vec(X).
  auto kronc = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return kron(a, b); };
  Eigen::MatrixXcd liouvillian = -kI * kTwoPi * (kronc(id, h) - kronc(h.transpose(), id));
  for (int r = 0; r < 2; ++r) {
    const Eigen::MatrixXcd b = embedded_lowering(chain.dims(), r == 0 ? kR1 : kR2).cast<cd>();
    const Eigen::MatrixXcd nb = b.adjoint() * b;
    liouvillian += noise.kappa(r, chain) *
                   (kronc(b.conjugate(), b) - 0.5 * kronc(id, nb) - 0.5 * kronc(nb.transpose(), id));
  }
  const Eigen::MatrixXcd rho0 = pure_state(n, {model.basis().index({0, 0, 0, 0, 0}),
                                              model.basis().index({0, 1, 0, 0, 0}),
                                              model.basis().index({1, 1, 0, 0, 0}),
                                              model.basis().index({0, 0, 0, 1, 1})});
  const Eigen::MatrixXcd propagator = (liouvillian * t).exp();
  const Eigen::VectorXcd vec = propagator * Eigen::Map<const Eigen::VectorXcd>(rho0.data(), n * n);
  const Eigen::MatrixXcd expected = Eigen::Map<const Eigen::MatrixXcd>(vec.data(), n, n);
  const Eigen::MatrixXcd rho = propagate_density(chain, static_pulse(t, nu), noise, 0.005, rho0);
  EXPECT_LT((rho - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Channel, RejectsWrongDensitySize) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  EXPECT_THROW(propagate_density(chain, static_pulse(1.0, 5.65), NoiseSpec{}, 0.05,
                                 Eigen::MatrixXcd::Identity(10, 10)),
               InvalidInput);
}

TEST(Noise, RatesAndValidation) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const NoiseSpec n = NoiseSpec::uniform(1e4);
  EXPECT_DOUBLE_EQ(n.kappa(0, chain), kTwoPi * 7.0 / 1e4);
  EXPECT_DOUBLE_EQ(n.kappa(1, chain), kTwoPi * 7.2 / 1e4);
  EXPECT_EQ(NoiseSpec{}.kappa(0, chain), 0.0);
  EXPECT_TRUE(NoiseSpec{}.lossless());
  EXPECT_FALSE(n.lossless());
  EXPECT_THROW(n.kappa(2, chain), IndexError);
  EXPECT_THROW(NoiseSpec::uniform(0.0).validate(), InvalidParameter);
  EXPECT_THROW(NoiseSpec::uniform(-5.0).validate(), InvalidParameter);
  EXPECT_THROW(NoiseSpec::uniform(NAN).validate(), InvalidParameter);
  EXPECT_NO_THROW(NoiseSpec::uniform(kInfinity).validate());
}

TEST(ConditionalPhase, Examples) {
  EXPECT_NEAR(conditional_phase(cz_target()), M_PI, 1e-15);
  EXPECT_EQ(conditional_phase(Matrix4c::Identity()), 0.0);
  for (double theta : {0.3, -0.001, 1.2, 2.9, -1.5}) {
    EXPECT_NEAR(conditional_phase(diag4(1.0, 1.0, 1.0, std::exp(kI * theta))), theta, 1e-14);
  }
  // Local phases drop out.
  EXPECT_NEAR(conditional_phase(diag4(1.0, kI, kI, -1.0)), 0.0, 1e-14);
}

TEST(ConditionalPhase, RejectsNonDiagonalBlocks) {
  Matrix4c swap = Matrix4c::Zero();
  swap(0, 0) = swap(3, 3) = 1.0;
  swap(1, 2) = swap(2, 1) = 1.0;
  EXPECT_THROW(conditional_phase(swap), NotPhaseLike);
  EXPECT_THROW(conditional_phase(0.5 * Matrix4c::Identity()), NotPhaseLike);
}

TEST(ConditionalPhase, DistanceToPi) {
  EXPECT_NEAR(phase_error_to_pi(M_PI), 0.0, 1e-15);
  EXPECT_NEAR(phase_error_to_pi(-M_PI), 0.0, 1e-15);
  EXPECT_NEAR(phase_error_to_pi(3 * M_PI), 0.0, 1e-14);
  EXPECT_NEAR(phase_error_to_pi(M_PI + 0.1), 0.1, 1e-14);
  EXPECT_NEAR(phase_error_to_pi(0.0), M_PI, 1e-15);
}

TEST(LocalPhases, PureLocalRotationBecomesIdentity) {
  const double a = 0.7, b = -2.1;
  const Matrix4c m = diag4(1.0, std::exp(kI * b), std::exp(kI * a), std::exp(kI * (a + b)));
  EXPECT_LT((remove_local_phases(m) - Matrix4c::Identity()).norm(), 1e-14);
  EXPECT_LT((remove_local_phases(cz_target()) - cz_target()).norm(), 1e-15);
}

TEST(LocalPhases, PropertyPreservesConditionalPhase) {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix4c m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = cd(noise(rng), noise(rng));
    for (int k = 0; k < 4; ++k) m(k, k) += std::polar(0.9, angle(rng));
    const Matrix4c fixed = remove_local_phases(m);
    EXPECT_LT(std::abs(std::remainder(conditional_phase(fixed) - conditional_phase(m), kTwoPi)), 1e-12);
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(std::arg(fixed(k, k))), 1e-12);
    EXPECT_NEAR(fixed.norm(), m.norm(), 1e-12);
  }
}

TEST(GateError, Examples) {
  EXPECT_NEAR(average_gate_error(cz_target()), 0.0, 1e-15);
  EXPECT_NEAR(average_gate_error(Matrix4c::Identity()), 0.6, 1e-15);
  EXPECT_NEAR(average_gate_error(Matrix4c::Identity(), Matrix4c::Identity()), 0.0, 1e-15);
  // Uniform amplitude loss a: F = (4 a^2 + 16 a^2) / 20.
  EXPECT_NEAR(average_gate_error(0.9 * cz_target()), 1.0 - 0.81, 1e-14);
  EXPECT_NEAR(leakage(0.9 * cz_target()), 0.19, 1e-14);
}

TEST(GateError, CZWithLocalPhasesAfterRemoval) {
  const Matrix4c m = diag4(std::exp(kI * 0.3), std::exp(kI * 1.1), std::exp(kI * -0.4),
                           -std::exp(kI * (1.1 - 0.4 - 0.3)));
  EXPECT_GT(average_gate_error(m), 0.1);
  EXPECT_NEAR(average_gate_error(remove_local_phases(m)), 0.0, 1e-14);
}

TEST(GateEvaluation, LosslessReportIsConsistent) {
  const ChainConfig chain = ChainConfig::reference(0.17);
  const CZPulse p = flattop_trajectory(80.0, 0.2, 5.65, kOperatingPoint, 256);
  const GateReport r = evaluate_gate(chain, p, NoiseSpec{});
  EXPECT_EQ(r.error_avg, r.unitary_baseline);
  EXPECT_LT(r.solver.residual, 1e-10);
  EXPECT_EQ(r.solver.method, "midpoint-exponential-chebyshev");
  EXPECT_GE(r.leakage, 0.0);
  EXPECT_LE(r.leakage, 1.0);
  EXPECT_LT(phase_error_to_pi(r.conditional_phase), 1e-2);
  EXPECT_LT(r.error_avg, 1e-2);
}
