#include "cwsim/verify.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cwsim/oracle.h"
#include "cwsim/run.h"

namespace cwsim {

ScenarioSpec test_matrix_scenario(ScenarioKind kind, double gamma, int N) {
  ScenarioSpec s;
  s.kind = kind;
  s.spin_state = spin_count(kind) == 2 ? epr_state() : pure_spin_state(0.3);
  const std::size_t n_app = apparatus_count(kind);
  s.magnets.assign(n_app, MagnetSpec{N, 0.0, 1.0});
  BathSpec bath;
  bath.gamma = gamma;
  s.baths.assign(n_app, bath);
  s.t_final = 200.0;
  s.schedule = CouplingSchedule{0.1, 20.0, 150.0, 1.0};
  s.samples = 64;
  if (is_spatial(kind)) {
    RegionSpec r;
    if (detector_count(kind) == 1) {
      r.intervals = {{0.0, 0.7}};
    } else {
      r.intervals = {{0.0, 0.3}, {0.5, 0.8}};
    }
    s.regions = r;
    s.packet = PacketSpec{PacketSpec::Kind::uniform, {0.5}, {1.0}};
  }
  return s;
}

double oracle_deviation(const ScenarioSpec& spec, OffdiagBath mode, const IntegratorConfig& integrator,
                        int checkpoints) {
  const ScenarioPlan plan = build_scenario(spec, mode);
  IntegratorConfig ic = integrator;
  ic.samples = spec.samples;
  ic.snapshot_times.clear();
  for (int i = 1; i <= checkpoints; ++i) ic.snapshot_times.push_back(spec.t_final * i / checkpoints);
  const Trajectory tr = evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, plan.t_final, ic);

  // Segment boundaries for the piecewise-constant dense evolution.
  std::vector<double> cuts = {plan.schedule.t_on, plan.schedule.t_off};
  double worst = 0.0;
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    for (std::size_t a = 0; a < plan.apparatus.size(); ++a) {
      SectorDistribution x = plan.blocks[b].per_apparatus[a];
      double t = 0.0;
      for (const auto& snap : tr.snapshots) {
        while (t < snap.t) {
          double next = snap.t;
          for (double c : cuts) {
            if (c > t && c < next) next = c;
          }
          const auto& gen = plan.schedule.active_at(t) ? plan.generators[b][a].active : plan.generators[b][a].idle;
          x = oracle::dense_reference_evolution(*gen, x, next - t);
          t = next;
        }
        const auto& engine = snap.blocks[b].per_apparatus[a].amplitudes;
        for (std::size_t k = 0; k < engine.size(); ++k) worst = std::max(worst, std::abs(engine[k] - x.amplitudes[k]));
      }
    }
  }
  return worst;
}

namespace {

std::string sci(double x) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << x;
  return s.str();
}

CheckResult check_dephasing_sum() {
  double worst = 0.0;
  for (int n : {1, 20, 50, 200}) {
    for (int i = 0; i <= 200; ++i) {
      const double t = 0.05 * i;
      worst = std::max(worst, std::abs(oracle::analytic_dephasing(n, 0.1, t) - oracle::binomial_phase_sum(n, 0.1, t)));
    }
  }
  return {"analytic dephasing equals binomial phase sum", worst < 1e-12, "max diff " + sci(worst)};
}

CheckResult check_engine_dephasing(int n) {
  ScenarioSpec s;
  s.kind = ScenarioKind::single;
  s.spin_state = pure_spin_state(0.5);
  s.magnets = {MagnetSpec{n, 0.0, 1.0}};
  BathSpec bath;
  bath.gamma = 0.0;
  s.baths = {bath};
  const double g = 0.1;
  s.t_final = std::numbers::pi / (2.0 * g);
  s.schedule = CouplingSchedule{g, 0.0, s.t_final, 1.0};
  s.samples = 512;
  const ScenarioPlan plan = build_scenario(s);
  IntegratorConfig ic;
  ic.samples = s.samples;
  const Trajectory tr = evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, s.t_final, ic);
  double worst = 0.0;
  for (std::size_t b = 0; b < tr.labels.size(); ++b) {
    if (tr.labels[b].is_diagonal()) continue;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      worst = std::max(worst, std::abs(normalized_trace(tr, i, b) - oracle::analytic_dephasing(n, g, tr.times[i])));
    }
  }
  return {"engine dephasing matches |cos 2gt|^N (N=" + std::to_string(n) + ")", worst < 1e-8, "max diff " + sci(worst)};
}

CheckResult check_detailed_balance(int n, double g) {
  MagnetSpec magnet{n, 0.0, 1.0};
  BathSpec bath;
  const auto gen = build_generator(magnet, bath, SpinZ::up, SpinZ::up, g, g);
  const double r = oracle::stationarity_residual(gen, magnet, bath, SpinZ::up, g);
  std::ostringstream name;
  name << "detailed balance N=" << n << " g=" << g;
  return {name.str(), r < 1e-10, "residual " + sci(r)};
}

CheckResult check_threshold() {
  MagnetSpec magnet{200, 0.0, 1.0};
  const double T = 0.2;
  const double h_c = threshold_coupling(magnet, T);
  const auto grid = oracle::uniform_grid(0.0, 0.2, 1e-4);
  const auto scan = oracle::barrier_scan(magnet, SpinZ::up, T, grid);
  if (!scan) return {"threshold_coupling matches barrier scan", false, "scan found no threshold"};
  const double diff = std::abs(*scan - h_c);
  std::ostringstream d;
  d.precision(8);
  d << "h_c " << h_c << ", scan " << *scan << ", diff " << sci(diff);
  return {"threshold_coupling matches barrier scan", diff <= 1e-4, d.str()};
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(int n) {
  std::vector<CheckResult> out;
  out.push_back(check_dephasing_sum());
  out.push_back(check_engine_dephasing(n));
  for (int N : {10, 50, 200}) {
    for (double g : {0.0, 0.1}) out.push_back(check_detailed_balance(N, g));
  }
  out.push_back(check_threshold());

  IntegratorConfig ic;
  for (auto kind : {ScenarioKind::single, ScenarioKind::epr_one_apparatus, ScenarioKind::epr_two_apparatuses,
                    ScenarioKind::spatial_one_detector, ScenarioKind::spatial_two_detectors}) {
    for (double gamma : {0.0, 0.002}) {
      const double dev = oracle_deviation(test_matrix_scenario(kind, gamma, n), OffdiagBath::mixed, ic);
      std::ostringstream name;
      name << "engine matches dense exponential: " << to_string(kind) << " gamma=" << gamma << " N=" << n;
      out.push_back({name.str(), dev < 1e-6, "max-norm diff " + sci(dev)});
    }
  }
  return out;
}

int print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
  int failures = 0;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    failures += c.pass ? 0 : 1;
  }
  return failures;
}

}  // namespace cwsim
