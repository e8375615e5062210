#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qbridge/config.hpp"
#include "qbridge/errors.hpp"
#include "qbridge/experiments.hpp"
#include "qbridge/parallel.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAccuracy = 3;

struct CommonFlags {
  std::string config_path;
  std::string out;
  int threads = 0;
  std::string dims;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config file (defaults if omitted)");
  cmd->add_option("--out", flags.out, "Output CSV path; '-' writes to stdout");
  cmd->add_option("--threads", flags.threads, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--dims", flags.dims, "Levels per mode, e.g. 3,3,4,3,3");
}

qbridge::ExperimentConfig resolve_config(const CommonFlags& flags) {
  qbridge::ExperimentConfig config =
      flags.config_path.empty() ? qbridge::ExperimentConfig{} : qbridge::load_config(flags.config_path);
  if (!flags.dims.empty()) config.device.dims = qbridge::parse_dims(flags.dims);
  if (!flags.out.empty()) config.output = flags.out;
  config.validate();
  return config;
}

void emit(const qbridge::ExperimentConfig& config, const std::string& csv) {
  if (config.output == "-") {
    std::cout << csv;
  } else {
    qbridge::write_text_file(config.output, csv);
    std::cerr << "wrote " << config.output << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Five-mode coupler chain simulator: ZZ sweeps, CZ calibration, loss studies"};
  app.set_version_flag("--version", std::string(qbridge::kVersion));
  app.require_subcommand(1);

  CommonFlags flags;
  auto* zz = app.add_subcommand("zz-sweep", "ZZ coupling versus bus frequency for each g");
  auto* cz = app.add_subcommand("cz-scan", "Calibrated CZ error versus gate time for each g");
  auto* qs = app.add_subcommand("q-scan", "CZ error versus resonator quality factor");
  auto* idle = app.add_subcommand("idle-find", "Locate the ZZ-free bus frequency for each g");
  auto* spec = app.add_subcommand("spectrum", "Labeled dressed spectrum at one bus frequency");
  for (auto* cmd : {zz, cz, qs, idle, spec}) add_common(cmd, flags);
  std::optional<double> spec_g;
  std::optional<double> spec_bus;
  spec->add_option("--g", spec_g, "Coupling g_ref in MHz (default: first configured value)");
  spec->add_option("--bus", spec_bus, "Bus frequency in GHz (default: pulse idle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const qbridge::ExperimentConfig config = resolve_config(flags);
    const int threads = flags.threads > 0 ? flags.threads : qbridge::default_thread_count();
    if (zz->parsed()) {
      emit(config, qbridge::zz_csv(config, qbridge::run_zz_sweep(config, threads)));
    } else if (cz->parsed()) {
      emit(config, qbridge::cz_csv(config, qbridge::run_cz_scan(config, threads)));
    } else if (qs->parsed()) {
      emit(config, qbridge::q_csv(config, qbridge::run_q_scan(config, threads)));
    } else if (idle->parsed()) {
      emit(config, qbridge::idle_csv(config, qbridge::run_idle_find(config, threads)));
    } else if (spec->parsed()) {
      const double g = spec_g.value_or(config.device.g_ref_mhz.front());
      const double bus = spec_bus.value_or(config.pulse.idle_auto ? qbridge::resolve_idle(config, g)
                                                                  : config.pulse.idle);
      emit(config, qbridge::spectrum_csv(config, g, bus));
    }
  } catch (const qbridge::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qbridge::InvalidParameter& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qbridge::AccuracyError& e) {
    std::cerr << "accuracy error: " << e.what() << "\n";
    return kExitAccuracy;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
