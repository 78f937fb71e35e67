#include "cwsim/run.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include "json.hpp"

namespace cwsim {
namespace {

namespace fs = std::filesystem;

RunConfig small_config(ScenarioKind kind = ScenarioKind::epr_two_apparatuses) {
  RunConfig c;
  c.scenario.kind = kind;
  c.scenario.spin_state = kind == ScenarioKind::single ? pure_spin_state(0.3) : epr_state();
  const std::size_t n = apparatus_count(kind);
  c.scenario.magnets.assign(n, MagnetSpec{16, 0.0, 1.0});
  c.scenario.baths.assign(n, BathSpec{});
  c.scenario.schedule = CouplingSchedule{0.1, 0.0, 150.0, 1.0};
  c.scenario.t_final = 200.0;
  c.scenario.samples = 9;
  c.integrator.samples = 9;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cwsim_run_test_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-2.5), "-2.5");
  EXPECT_EQ(format_number(1e-300), "1e-300");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Run, WritesThreeFilesWithHeaders) {
  const auto dir = scratch("files");
  const auto result = run(small_config(), dir);
  ASSERT_TRUE(fs::exists(dir / "timeseries.csv"));
  ASSERT_TRUE(fs::exists(dir / "distributions.csv"));
  ASSERT_TRUE(fs::exists(dir / "readout.json"));

  std::ifstream ts(dir / "timeseries.csv");
  std::string header;
  std::getline(ts, header);
  EXPECT_EQ(header.rfind("t,b0_trace_re,b0_trace_im,b0_coh_mag,", 0), 0u);
  EXPECT_NE(header.find("b3_a1_var_m"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(ts, line);) ++rows;
  EXPECT_EQ(rows, static_cast<int>(result.trajectory.times.size()));

  std::ifstream dist(dir / "distributions.csv");
  std::getline(dist, header);
  EXPECT_EQ(header, "t,block_id,apparatus,m,re,im");
  std::size_t dist_rows = 0;
  for (std::string line; std::getline(dist, line);) ++dist_rows;
  EXPECT_EQ(dist_rows, result.trajectory.snapshots.size() * result.plan.blocks.size() * 2 * 17);

  const auto j = nlohmann::json::parse(slurp(dir / "readout.json"));
  EXPECT_EQ(j.at("blocks").size(), 4u);
  EXPECT_EQ(j.at("readout").at("joint").size(), 9u);
  EXPECT_EQ(j.at("diagnostics").size(), 2u);
  EXPECT_EQ(parse_config_text(j.at("config").dump()), small_config());
  fs::remove_all(dir);
}

TEST(Run, OutputIsDeterministic) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto c = small_config(ScenarioKind::spatial_two_detectors);
  c.scenario.spin_state = pure_spin_state(1.0);
  c.scenario.regions = RegionSpec{{{0.0, 0.3}, {0.5, 0.8}}, 2.0};
  c.scenario.packet = PacketSpec{PacketSpec::Kind::uniform, {0.5}, {1.0}};
  c.integrator.threads = 1;
  run(c, a);
  c.integrator.threads = 3;
  run(c, b);
  for (const char* f : {"timeseries.csv", "distributions.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  // The config echo records the thread count; everything else must match.
  auto ja = nlohmann::json::parse(slurp(a / "readout.json"));
  auto jb = nlohmann::json::parse(slurp(b / "readout.json"));
  ja["config"]["integrator"].erase("threads");
  jb["config"]["integrator"].erase("threads");
  EXPECT_EQ(ja.dump(), jb.dump());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, PointerProbabilitiesSumToOne) {
  const auto r = simulate(small_config());
  for (const auto& p : r.readout.pointers) EXPECT_NEAR(p.up + p.down + p.null, 1.0, 1e-9);
  ASSERT_EQ(r.diagnostics.size(), 2u);
  EXPECT_TRUE(r.diagnostics[0].h_c.has_value());
  EXPECT_GT(r.diagnostics[0].m_f, 0.5);
}

TEST(Run, NormalizedTraceStartsAtOne) {
  const auto r = simulate(small_config());
  for (std::size_t b = 0; b < r.plan.blocks.size(); ++b) EXPECT_NEAR(normalized_trace(r.trajectory, 0, b), 1.0, 1e-12);
}

TEST(Run, ReadoutTimeMustBeReachable) {
  auto c = small_config();
  c.readout_at = 50.0;
  const auto r = simulate(c);
  EXPECT_EQ(r.readout.at, 50.0);
  c.readout_at = 500.0;
  EXPECT_THROW(simulate(c), std::invalid_argument);
}

TEST(Run, DefaultSingleSpinIsFast) {
  RunConfig c;
  c.scenario.kind = ScenarioKind::single;
  c.scenario.spin_state = pure_spin_state(0.3);
  c.scenario.magnets = {MagnetSpec{}};
  c.scenario.baths = {BathSpec{}};
  c.scenario.schedule.t_off = c.scenario.t_final;
  const auto start = std::chrono::steady_clock::now();
  const auto r = simulate(c);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 10.0);
  EXPECT_NEAR(r.readout.pointers[0].up, 0.3, 1e-3);
}

}  // namespace
}  // namespace cwsim
