#include <cstdio>
#include <iostream>
#include <numbers>
#include <string>

#include "CLI11.hpp"
#include "cwsim/config.h"
#include "cwsim/oracle.h"
#include "cwsim/run.h"
#include "cwsim/verify.h"

using namespace cwsim;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  const RunConfig config = parse_config(config_path);
  const std::string dir = out_dir.empty() ? config.output_dir : out_dir;
  const RunResult r = run(config, dir);
  const auto& p = r.readout.pointers;
  for (std::size_t a = 0; a < p.size(); ++a) {
    std::printf("apparatus %zu: P(up)=%.10f P(down)=%.10f P(null)=%.3e\n", a, p[a].up, p[a].down, p[a].null);
  }
  std::printf("blocks=%zu unique_evolutions=%zu outputs in %s\n", r.trajectory.labels.size(),
              r.trajectory.unique_evolutions, dir.c_str());
  return 0;
}

int cmd_threshold(const std::string& config_path) {
  const RunConfig config = parse_config(config_path);
  for (std::size_t a = 0; a < config.scenario.magnets.size(); ++a) {
    const auto& magnet = config.scenario.magnets[a];
    const double T = config.scenario.baths[a].T;
    std::printf("apparatus %zu (N=%d J2=%g J4=%g T=%g): ", a, magnet.N, magnet.J2, magnet.J4, T);
    try {
      const double h_c = threshold_coupling(magnet, T);
      const auto grid = oracle::uniform_grid(0.0, std::max(2.0 * h_c, 1e-3), 1e-4);
      const auto scan = oracle::barrier_scan(magnet, SpinZ::up, T, grid);
      std::printf("h_c=%.9f", h_c);
      if (scan) std::printf(" barrier_scan=%.4f diff=%.2e", *scan, std::abs(*scan - h_c));
      std::printf("\n");
    } catch (const std::domain_error& e) {
      std::printf("%s\n", e.what());
    }
  }
  return 0;
}

int cmd_meanfield(const std::string& config_path) {
  const RunConfig config = parse_config(config_path);
  const double g = config.scenario.schedule.g;
  for (std::size_t a = 0; a < config.scenario.magnets.size(); ++a) {
    const auto& magnet = config.scenario.magnets[a];
    const double T = config.scenario.baths[a].T;
    const auto at0 = meanfield_fixed_point(magnet, SpinZ::up, 0.0, T);
    const auto atg = meanfield_fixed_point(magnet, SpinZ::up, g, T);
    std::printf("apparatus %zu: m_F(g=0)=%.12f m_F(g=%g)=%.12f\n", a, at0.m_f, g, atg.m_f);
  }
  return 0;
}

int cmd_dephase(const std::string& config_path) {
  const RunConfig config = parse_config(config_path);
  const RunResult r = simulate(config);
  const auto& tr = r.trajectory;
  std::size_t block = tr.labels.size();
  for (std::size_t b = 0; b < tr.labels.size(); ++b) {
    if (!tr.labels[b].spin_diagonal()) {
      block = b;
      break;
    }
  }
  if (block == tr.labels.size()) {
    std::cerr << "dephase: scenario has no spin off-diagonal block\n";
    return 1;
  }
  const int N = config.scenario.magnets[0].N;
  const double g = config.scenario.schedule.g;
  const double t_on = config.scenario.schedule.t_on;
  if (config.scenario.baths[0].gamma != 0.0 || t_on != 0.0) {
    std::cout << "# analytic column assumes gamma=0 and coupling on from t=0\n";
  }
  std::cout << "# block " << tr.labels[block].to_string() << "\n";
  std::cout << "t,analytic,simulated,abs_diff\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    const double analytic = oracle::analytic_dephasing(N, g, std::min(t, config.scenario.schedule.t_off));
    const double sim = normalized_trace(tr, i, block);
    worst = std::max(worst, std::abs(analytic - sim));
    std::cout << format_number(t) << ',' << format_number(analytic) << ',' << format_number(sim) << ','
              << format_number(std::abs(analytic - sim)) << '\n';
  }
  std::cout << "# max abs diff " << format_number(worst) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curie-Weiss measurement simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int verify_n = 20;

  auto* run_cmd = app.add_subcommand("run", "evolve a configuration and write timeseries/distributions/readout");
  run_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory (default: output.dir from the config)");

  auto* verify_cmd = app.add_subcommand("verify", "run the oracle suite");
  verify_cmd->add_option("--n", verify_n, "magnet size for engine/oracle comparisons")->check(CLI::Range(1, 64));

  auto* threshold_cmd = app.add_subcommand("threshold", "print h_c per apparatus, cross-checked by a grid scan");
  threshold_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);

  auto* meanfield_cmd = app.add_subcommand("meanfield", "print mean-field magnetizations per apparatus");
  meanfield_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);

  auto* dephase_cmd = app.add_subcommand("dephase", "print analytic vs simulated coherence");
  dephase_cmd->add_option("--config", config_path, "config JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(config_path, out_dir);
    if (*verify_cmd) return print_checks(std::cout, run_oracle_suite(verify_n)) == 0 ? 0 : 1;
    if (*threshold_cmd) return cmd_threshold(config_path);
    if (*meanfield_cmd) return cmd_meanfield(config_path);
    if (*dephase_cmd) return cmd_dephase(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
