#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "qbridge/config.hpp"
#include "qbridge/errors.hpp"
#include "qbridge/experiments.hpp"

using namespace qbridge;

namespace {

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.device.g_ref_mhz = {0.0, 170.0, 190.0};
  c.sweep.points = 6;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> out;
  for (const auto& l : lines(csv)) {
    if (!l.empty() && l[0] != '#') out.push_back(l);
  }
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST(ZZSweep, RowCountAndOrder) {
  const ExperimentConfig c = small_sweep();
  const auto rows = run_zz_sweep(c, 2);
  ASSERT_EQ(rows.size(), 18u);
  for (size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].g_mhz, c.device.g_ref_mhz[i / 6]);
    if (i % 6) EXPECT_GT(rows[i].point.nu_bus, rows[i - 1].point.nu_bus);
  }
  EXPECT_EQ(rows.front().point.nu_bus, 5.3);
  EXPECT_EQ(rows.back().point.nu_bus, 6.6);
}

TEST(ZZSweep, DecoupledRowsAreZero) {
  const auto rows = run_zz_sweep(small_sweep(), 1);
  for (const ZZRow& r : rows) {
    if (r.g_mhz == 0.0) EXPECT_LT(std::abs(r.point.zeta * 1e3), 1e-6);
  }
}

TEST(ZZSweep, CsvHeaderPreambleAndDeterminism) {
  const ExperimentConfig c = small_sweep();
  const std::string one = zz_csv(c, run_zz_sweep(c, 1));
  const std::string three = zz_csv(c, run_zz_sweep(c, 3));
  EXPECT_EQ(one, three);
  const auto data = data_lines(one);
  ASSERT_EQ(data.size(), 19u);
  EXPECT_EQ(data[0], "bus_freq_ghz,g_mhz,zeta_mhz,ambiguous");
  EXPECT_EQ(fields(data[1]).size(), 4u);
  const auto all = lines(one);
  EXPECT_EQ(all[0], std::string("# qbridge ") + kVersion);
  EXPECT_EQ(all[1], "# command: zz-sweep");
}

TEST(Preamble, EchoesConfigThatParsesBack) {
  ExperimentConfig c = small_sweep();
  c.pulse.idle_auto = true;
  std::string echoed;
  for (const auto& l : lines(csv_preamble(c, "test"))) {
    ASSERT_EQ(l.substr(0, 2), "# ");
    if (l.find("qbridge") == std::string::npos && l.find("command:") == std::string::npos) {
      echoed += l.substr(2) + "\n";
    }
  }
  EXPECT_EQ(parse_config(echoed).to_text(), c.to_text());
}

TEST(CZScan, InfeasibleRowsCarryReason) {
  ExperimentConfig c;
  c.device.g_ref_mhz = {0.0};
  c.pulse.gate_times = {10.0, 12.0};
  const auto rows = run_cz_scan(c, 1);
  ASSERT_EQ(rows.size(), 2u);
  for (const CZRow& r : rows) {
    EXPECT_FALSE(r.result.has_value());
    EXPECT_EQ(r.reason.rfind("calibration-infeasible", 0), 0u) << r.reason;
    EXPECT_EQ(r.reason.find(','), std::string::npos);
  }
  const auto data = data_lines(cz_csv(c, rows));
  EXPECT_EQ(data[0], "gate_time_ns,g_mhz,nu_op_ghz,cond_phase_rad,leakage,error,reason");
  const auto cells = fields(data[1]);
  ASSERT_EQ(cells.size(), 7u);
  EXPECT_EQ(cells[0], "10");
  EXPECT_EQ(cells[1], "0");
  for (int k = 2; k < 6; ++k) EXPECT_TRUE(cells[k].empty());
  EXPECT_FALSE(cells[6].empty());
}

TEST(CZScan, RowsOrderedByGateTimeThenCoupling) {
  ExperimentConfig c;
  c.device.g_ref_mhz = {0.0, 1.0};
  c.pulse.gate_times = {12.0, 10.0};
  const auto rows = run_cz_scan(c, 2);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].gate_time, 12.0);
  EXPECT_EQ(rows[0].g_mhz, 0.0);
  EXPECT_EQ(rows[1].g_mhz, 1.0);
  EXPECT_EQ(rows[2].gate_time, 10.0);
}

TEST(QScan, LosslessRowEqualsBaselineExactly) {
  ExperimentConfig c;
  c.noise.q_factors = {1e5, INFINITY};
  const auto rows = run_q_scan(c, 1);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].error, rows[1].unitary_baseline);
  EXPECT_EQ(rows[0].unitary_baseline, rows[1].unitary_baseline);
  EXPECT_GE(rows[0].error, rows[0].unitary_baseline - 1e-8);
  const auto data = data_lines(q_csv(c, rows));
  EXPECT_EQ(data[0], "quality_factor,error,unitary_baseline");
  EXPECT_EQ(fields(data[1])[0], "1e+05");
  EXPECT_EQ(fields(data[2])[0], "inf");
  EXPECT_EQ(fields(data[2])[1], fields(data[2])[2]);
}

TEST(IdleFind, OneRowPerCoupling) {
  ExperimentConfig c;
  c.device.g_ref_mhz = {170.0, 190.0};
  const auto rows = run_idle_find(c, 2);
  ASSERT_EQ(rows.size(), 2u);
  for (const IdleRow& r : rows) {
    EXPECT_GE(r.nu_idle, c.sweep.idle_lo);
    EXPECT_LE(r.nu_idle, c.sweep.idle_hi);
    EXPECT_LE(std::abs(r.zeta), 1e-5);
  }
  EXPECT_EQ(data_lines(idle_csv(c, rows))[0], "g_mhz,nu_idle_ghz,zeta_khz");
  c.pulse.idle_auto = true;
  EXPECT_EQ(resolve_idle(c, 170.0), rows[0].nu_idle);
  c.pulse.idle_auto = false;
  EXPECT_EQ(resolve_idle(c, 170.0), 5.65);
}

TEST(Spectrum, OneRowPerState) {
  const ExperimentConfig c;
  const auto data = data_lines(spectrum_csv(c, 170.0, 5.65));
  ASSERT_EQ(data.size(), 244u);
  EXPECT_EQ(data[0], "eigenindex,energy_ghz,label,overlap,ambiguous");
  const auto first = fields(data[1]);
  ASSERT_EQ(first.size(), 5u);
  EXPECT_EQ(first[0], "0");
  EXPECT_EQ(first[4], "0");
  double prev = -INFINITY;
  for (size_t i = 1; i < data.size(); ++i) {
    const double e = std::stod(fields(data[i])[1]);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(Output, UnwritablePathThrows) {
  const auto dir = std::filesystem::temp_directory_path() / "qbridge_missing_dir_for_test";
  std::filesystem::remove_all(dir);
  EXPECT_THROW(write_text_file((dir / "x.csv").string(), "a\n"), IoError);
}

TEST(Experiments, InvalidConfigRejectedBeforeWork) {
  ExperimentConfig c;
  c.device.g_ref_mhz.clear();
  EXPECT_THROW(run_zz_sweep(c, 1), ConfigurationError);
  EXPECT_THROW(run_cz_scan(c, 1), ConfigurationError);
}
