#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qbridge/circuit_model.hpp"

namespace qbridge {

enum class PulseShape { Flattop, FourierAdiabatic };

std::string to_string(PulseShape shape);
PulseShape parse_pulse_shape(const std::string& text);

// Bus-frequency trajectory nu(t) = nu_idle + (nu_op - nu_idle) * e(t) with a
// unit envelope e that vanishes at both ends of the gate.
struct CZPulse {
  PulseShape shape = PulseShape::Flattop;
  double gate_time = 0.0;  // ns
  double ramp_frac = 0.2;  // flattop only: each ramp lasts ramp_frac * gate_time
  double nu_idle = 0.0;    // GHz
  double nu_op = 0.0;      // GHz, extremum of the trajectory
  std::vector<double> fourier_coeffs;  // fourier-adiabatic only
  std::vector<double> samples;         // nu on an even grid covering [0, gate_time]

  double envelope(double t) const;
  double frequency(double t) const { return nu_idle + (nu_op - nu_idle) * envelope(t); }
  double sample_time(int k) const;
  void resample(int n_samples);
};

// Flat top with half-cosine ramps; ramp_frac = 0 gives a square pulse.
CZPulse flattop_trajectory(double gate_time, double ramp_frac, double nu_idle, double nu_op,
                           int n_samples);

// Truncated cosine series e(t) ~ sum_n c_n (1 - cos(2 pi n t / T)), normalized
// so that e(T/2) = 1 and clipped to [0, 1]. Only odd n contribute at T/2, so
// the odd coefficients must not sum to zero.
CZPulse fourier_trajectory(double gate_time, std::vector<double> coeffs, double nu_idle,
                           double nu_op, int n_samples);

struct CalibrationOptions {
  PulseShape shape = PulseShape::Flattop;
  double ramp_frac = 0.2;
  std::vector<double> fourier_coeffs = {1.0};
  // Search the higher Fourier coefficients to minimize gate error.
  bool optimize_coefficients = false;
  int max_optimizer_evaluations = 40;
  double nu_idle = 5.65;
  // Interval for nu_op. Default: from nu_idle down to 20 MHz above the
  // upper qubit frequency.
  std::optional<std::pair<double, double>> nu_op_bracket;
  double phase_tol = 1e-3;  // rad
  double dt = 0.025;        // ns
  int n_samples = 256;
};

struct CalibrationResult {
  CZPulse pulse;
  double conditional_phase = 0.0;
  double leakage = 0.0;
  double unitary_error = 0.0;
  int evaluations = 0;
};

// Tunes nu_op at fixed gate time until the simulated conditional phase is
// pi within options.phase_tol. Throws CalibrationInfeasible if the bracket
// cannot reach pi.
CalibrationResult calibrate_cz(const ChainConfig& chain, double gate_time,
                               const CalibrationOptions& options = {});

// Adiabatic estimate -2 pi * integral zeta(nu(t)) dt of the conditional phase,
// with zeta interpolated from a continuity-tracked table between nu_idle and
// nu_op.
double adiabatic_phase_estimate(const ChainConfig& chain, const CZPulse& pulse,
                                int table_points = 200);

}  // namespace qbridge
