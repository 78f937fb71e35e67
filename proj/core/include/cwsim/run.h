#pragma once

// Running a config and writing its three output files:
//   timeseries.csv     t, then per block b<i>_trace_re, b<i>_trace_im,
//                      b<i>_coh_mag, then per block and apparatus
//                      b<i>_a<k>_mean_m, b<i>_a<k>_var_m
//   distributions.csv  t, block_id, apparatus, m, re, im (one row per
//                      snapshot, block, apparatus and grid point)
//   readout.json       readout at the readout time, block table, config
//                      echo and per-apparatus h_c / m_F diagnostics
// Numbers are written in shortest round-trip form, so identical configs give
// byte-identical files.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cwsim/config.h"
#include "cwsim/scenarios.h"

namespace cwsim {

struct ApparatusDiagnostics {
  std::optional<double> h_c;  // nullopt when no threshold exists
  double m_f = 0.0;           // g = 0 mean-field magnetization
};

struct RunResult {
  ScenarioPlan plan;
  Trajectory trajectory;
  Readout readout;
  std::vector<ApparatusDiagnostics> diagnostics;
};

/// Builds the scenario, evolves every block and reads the pointers out.
RunResult simulate(const RunConfig& config);

/// Shortest decimal string that parses back to `x`.
std::string format_number(double x);

/// |trace| / |initial weight| of block i at sample s (1 at t = 0).
double normalized_trace(const Trajectory& trajectory, std::size_t sample, std::size_t block);

void write_timeseries(std::ostream& out, const Trajectory& trajectory);
void write_distributions(std::ostream& out, const RunResult& result);
std::string readout_json_text(const RunConfig& config, const RunResult& result);

/// simulate() followed by writing the three files into `out_dir`
/// (created if missing). Throws std::runtime_error on I/O failure.
RunResult run(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace cwsim
