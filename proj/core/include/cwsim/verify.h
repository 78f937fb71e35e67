#pragma once

// Engine-versus-oracle checks behind `cwsim verify`.

#include <ostream>
#include <string>
#include <vector>

#include "cwsim/block_engine.h"
#include "cwsim/scenarios.h"

namespace cwsim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Small configuration of the given kind used for engine/oracle comparison:
/// N-spin magnets, g = 0.1 on over [20, 150], t_final = 200; spatial kinds
/// use a uniform packet on [0, 1].
ScenarioSpec test_matrix_scenario(ScenarioKind kind, double gamma, int N);

/// Max-norm difference between engine snapshots and the dense matrix
/// exponential, over every block, apparatus and grid point at `checkpoints`
/// evenly spaced times (plus the schedule switches).
double oracle_deviation(const ScenarioSpec& spec, OffdiagBath mode, const IntegratorConfig& integrator,
                        int checkpoints = 16);

/// Every check the verify subcommand runs; `n` is the magnet size for the
/// engine/oracle comparisons (at most 64).
std::vector<CheckResult> run_oracle_suite(int n);

/// One "PASS name: detail" / "FAIL name: detail" line per check; returns the
/// number of failures.
int print_checks(std::ostream& out, const std::vector<CheckResult>& checks);

}  // namespace cwsim
