#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbridge/config.hpp"
#include "qbridge/dynamics.hpp"
#include "qbridge/spectrum.hpp"

namespace qbridge {

inline constexpr const char* kZZHeader = "bus_freq_ghz,g_mhz,zeta_mhz,ambiguous";
// The last column is filled only for infeasible calibrations.
inline constexpr const char* kCZHeader =
    "gate_time_ns,g_mhz,nu_op_ghz,cond_phase_rad,leakage,error,reason";
inline constexpr const char* kQHeader = "quality_factor,error,unitary_baseline";
inline constexpr const char* kIdleHeader = "g_mhz,nu_idle_ghz,zeta_khz";
inline constexpr const char* kSpectrumHeader = "eigenindex,energy_ghz,label,overlap,ambiguous";

struct ZZRow {
  double g_mhz;
  ZZPoint point;
};

struct CZRow {
  double gate_time;
  double g_mhz;
  std::optional<CalibrationResult> result;
  std::string reason;  // set when result is empty
};

struct QRow {
  double quality_factor;
  double error;
  double unitary_baseline;
};

struct IdleRow {
  double g_mhz;
  double nu_idle;
  double zeta;  // GHz
};

// Idle frequency used for gates at this coupling: the configured value or,
// with idle = auto, the located zero crossing.
double resolve_idle(const ExperimentConfig& config, double g_mhz);

CalibrationOptions calibration_options(const ExperimentConfig& config, double nu_idle);

// Rows ordered by g (config order), then bus frequency.
std::vector<ZZRow> run_zz_sweep(const ExperimentConfig& config, int threads);
// Rows ordered by gate time, then g.
std::vector<CZRow> run_cz_scan(const ExperimentConfig& config, int threads);
// One calibration at noise.gate_time and noise.g_mhz, then one row per Q.
std::vector<QRow> run_q_scan(const ExperimentConfig& config, int threads);
std::vector<IdleRow> run_idle_find(const ExperimentConfig& config, int threads);

// `#` lines with the tool version, command and resolved configuration.
std::string csv_preamble(const ExperimentConfig& config, const std::string& command);

std::string zz_csv(const ExperimentConfig& config, const std::vector<ZZRow>& rows);
std::string cz_csv(const ExperimentConfig& config, const std::vector<CZRow>& rows);
std::string q_csv(const ExperimentConfig& config, const std::vector<QRow>& rows);
std::string idle_csv(const ExperimentConfig& config, const std::vector<IdleRow>& rows);
// Every dressed state at one bus frequency, in ascending energy.
std::string spectrum_csv(const ExperimentConfig& config, double g_mhz, double nu_bus);

// Throws IoError when the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qbridge
