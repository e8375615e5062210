#pragma once

#include <array>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qbridge/circuit_model.hpp"
#include "qbridge/control.hpp"

namespace qbridge {

inline constexpr const char* kVersion = "1.0.0";

// Shortest decimal that round-trips; "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double x);

struct DeviceSection {
  std::array<double, kNumModes> freqs = {5.0, 7.0, 5.65, 7.2, 5.2};  // GHz, Q1 R1 Qt R2 Q2
  double anharmonicity = -0.3;                                       // GHz, both qubits and bus
  std::vector<double> g_ref_mhz = {130.0, 150.0, 170.0, 190.0};
  double nu_ref = 6.0;  // GHz
  std::array<int, kNumModes> dims = {3, 3, 3, 3, 3};
  CouplingScaling scaling = CouplingScaling::SqrtFrequency;
};

struct PulseSection {
  PulseShape shape = PulseShape::Flattop;
  double ramp_frac = 0.2;
  double idle = 5.65;  // GHz; ignored when idle_auto is set
  bool idle_auto = false;
  std::vector<double> gate_times = {40, 50, 60, 70, 80, 90, 100, 110, 120};  // ns
  std::vector<double> fourier_coeffs = {1.0};
  bool optimize_coefficients = false;
};

struct NoiseSection {
  std::vector<double> q_factors = {1e3, 5e3, 1e4, 1e5, 1e6, std::numeric_limits<double>::infinity()};
  double gate_time = 80.0;  // ns, single gate of the Q study
  double g_mhz = 170.0;
};

struct SolverSection {
  double dt = 0.025;       // ns
  double eig_tol = 1e-10;  // recorded only: the dense eigensolver is direct
  bool check_convergence = false;
};

struct SweepSection {
  double lo = 5.3;  // GHz
  double hi = 6.6;
  int points = 400;
  double idle_lo = 5.45;  // GHz, bracket of idle-find
  double idle_hi = 5.85;
  double idle_tol_khz = 10.0;
};

struct ExperimentConfig {
  DeviceSection device;
  PulseSection pulse;
  NoiseSection noise;
  SolverSection solver;
  SweepSection sweep;
  std::string output = "results.csv";

  // Throws ConfigurationError naming every offending key.
  void validate() const;
  ChainConfig chain(double g_mhz) const;
  // Canonical text that parses back to the same config.
  std::string to_text() const;
};

// Sections in brackets, `key = value` lines, comma-separated lists, `#` or
// `;` comments. Missing keys keep their defaults; unknown sections or keys,
// malformed values and failed validation are all reported together.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

// Parses "3,3,4,3,3".
std::array<int, kNumModes> parse_dims(const std::string& text);

}  // namespace qbridge
