#include "qbridge/experiments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qbridge/errors.hpp"
#include "qbridge/parallel.hpp"

namespace qbridge {

namespace {

std::string csv_field(double x) { return format_number(x); }

// Reasons go into a CSV cell: no commas, no newlines.
std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

double resolve_idle(const ExperimentConfig& config, double g_mhz) {
  if (!config.pulse.idle_auto) return config.pulse.idle;
  return find_idle_frequency(config.chain(g_mhz), {config.sweep.idle_lo, config.sweep.idle_hi},
                             config.sweep.idle_tol_khz * 1e-6);
}

CalibrationOptions calibration_options(const ExperimentConfig& config, double nu_idle) {
  CalibrationOptions o;
  o.shape = config.pulse.shape;
  o.ramp_frac = config.pulse.ramp_frac;
  o.fourier_coeffs = config.pulse.fourier_coeffs;
  o.optimize_coefficients = config.pulse.optimize_coefficients;
  o.nu_idle = nu_idle;
  o.dt = config.solver.dt;
  return o;
}

std::vector<ZZRow> run_zz_sweep(const ExperimentConfig& config, int threads) {
  config.validate();
  const std::vector<double> grid = linspace(config.sweep.lo, config.sweep.hi, config.sweep.points);
  const auto& gs = config.device.g_ref_mhz;
  // Continuity tracking makes each g a sequential task.
  const auto per_g = parallel_map<std::vector<ZZPoint>>(gs.size(), threads, [&](std::size_t i) {
    return sweep_zz(config.chain(gs[i]), grid);
  });
  std::vector<ZZRow> rows;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (const ZZPoint& p : per_g[i]) rows.push_back({gs[i], p});
  }
  return rows;
}

std::vector<CZRow> run_cz_scan(const ExperimentConfig& config, int threads) {
  config.validate();
  const auto& gs = config.device.g_ref_mhz;
  const auto& ts = config.pulse.gate_times;
  const auto idles = parallel_map<double>(gs.size(), threads, [&](std::size_t i) {
    return resolve_idle(config, gs[i]);
  });
  return parallel_map<CZRow>(ts.size() * gs.size(), threads, [&](std::size_t k) {
    const std::size_t ti = k / gs.size();
    const std::size_t gi = k % gs.size();
    CZRow row{ts[ti], gs[gi], std::nullopt, {}};
    try {
      row.result = calibrate_cz(config.chain(gs[gi]), ts[ti], calibration_options(config, idles[gi]));
    } catch (const CalibrationInfeasible& e) {
      row.reason = sanitize(std::string("calibration-infeasible: ") + e.what());
    }
    return row;
  });
}

std::vector<QRow> run_q_scan(const ExperimentConfig& config, int threads) {
  config.validate();
  const ChainConfig chain = config.chain(config.noise.g_mhz);
  const double nu_idle = resolve_idle(config, config.noise.g_mhz);
  const CalibrationResult cal =
      calibrate_cz(chain, config.noise.gate_time, calibration_options(config, nu_idle));
  GateEvaluationOptions eval;
  eval.dt = config.solver.dt;
  eval.check_step_convergence = config.solver.check_convergence;
  const double baseline = evaluate_gate(chain, cal.pulse, NoiseSpec{}, eval).unitary_baseline;
  const auto& qs = config.noise.q_factors;
  return parallel_map<QRow>(qs.size(), threads, [&](std::size_t i) {
    if (std::isinf(qs[i])) return QRow{qs[i], baseline, baseline};
    const GateReport r = evaluate_gate(chain, cal.pulse, NoiseSpec::uniform(qs[i]), eval);
    return QRow{qs[i], r.error_avg, baseline};
  });
}

std::vector<IdleRow> run_idle_find(const ExperimentConfig& config, int threads) {
  config.validate();
  const auto& gs = config.device.g_ref_mhz;
  return parallel_map<IdleRow>(gs.size(), threads, [&](std::size_t i) {
    const ChainConfig chain = config.chain(gs[i]);
    const double nu = find_idle_frequency(chain, {config.sweep.idle_lo, config.sweep.idle_hi},
                                          config.sweep.idle_tol_khz * 1e-6);
    return IdleRow{gs[i], nu, zz_coupling(chain, nu).zeta};
  });
}

std::string csv_preamble(const ExperimentConfig& config, const std::string& command) {
  std::ostringstream out;
  out << "# qbridge " << kVersion << "\n# command: " << command << "\n";
  std::istringstream text(config.to_text());
  std::string line;
  while (std::getline(text, line)) out << "# " << line << "\n";
  return out.str();
}

std::string zz_csv(const ExperimentConfig& config, const std::vector<ZZRow>& rows) {
  std::string out = csv_preamble(config, "zz-sweep") + kZZHeader + "\n";
  for (const ZZRow& r : rows) {
    out += csv_field(r.point.nu_bus) + "," + csv_field(r.g_mhz) + "," +
           csv_field(r.point.zeta * 1e3) + "," + (r.point.ambiguous ? "1" : "0") + "\n";
  }
  return out;
}

std::string cz_csv(const ExperimentConfig& config, const std::vector<CZRow>& rows) {
  std::string out = csv_preamble(config, "cz-scan") + kCZHeader + "\n";
  for (const CZRow& r : rows) {
    out += csv_field(r.gate_time) + "," + csv_field(r.g_mhz) + ",";
    if (r.result) {
      out += csv_field(r.result->pulse.nu_op) + "," + csv_field(r.result->conditional_phase) + "," +
             csv_field(r.result->leakage) + "," + csv_field(r.result->unitary_error) + ",\n";
    } else {
      out += ",,,," + r.reason + "\n";
    }
  }
  return out;
}

std::string q_csv(const ExperimentConfig& config, const std::vector<QRow>& rows) {
  std::string out = csv_preamble(config, "q-scan") + kQHeader + "\n";
  for (const QRow& r : rows) {
    out += csv_field(r.quality_factor) + "," + csv_field(r.error) + "," +
           csv_field(r.unitary_baseline) + "\n";
  }
  return out;
}

std::string idle_csv(const ExperimentConfig& config, const std::vector<IdleRow>& rows) {
  std::string out = csv_preamble(config, "idle-find") + kIdleHeader + "\n";
  for (const IdleRow& r : rows) {
    out += csv_field(r.g_mhz) + "," + csv_field(r.nu_idle) + "," + csv_field(r.zeta * 1e6) + "\n";
  }
  return out;
}

std::string spectrum_csv(const ExperimentConfig& config, double g_mhz, double nu_bus) {
  config.validate();
  const ChainConfig chain = config.chain(g_mhz);
  const ChainHamiltonian model(chain);
  const DressedSpectrum s = dressed_spectrum(model.dense(nu_bus), chain.dims());
  std::vector<int> bare_of(s.size());
  for (int b = 0; b < s.size(); ++b) bare_of[s.label_of[b]] = b;
  std::string out = csv_preamble(config, "spectrum g_mhz=" + format_number(g_mhz) +
                                             " bus_ghz=" + format_number(nu_bus)) +
                    kSpectrumHeader + "\n";
  for (int k = 0; k < s.size(); ++k) {
    const int b = bare_of[k];
    const double overlap = s.overlap_of[b];
    out += std::to_string(k) + "," + csv_field(s.energies(k)) + "," +
           to_string(model.basis().occupation(b)) + "," + csv_field(overlap) + "," +
           (overlap < kAmbiguityThreshold ? "1" : "0") + "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace qbridge
