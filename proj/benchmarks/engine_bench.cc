#include <benchmark/benchmark.h>

#include <vector>

#include "cwsim/bath_kernel.h"
#include "cwsim/block_engine.h"
#include "cwsim/magnet_thermo.h"
#include "cwsim/scenarios.h"

namespace {

using namespace cwsim;

void BM_MagnetizationGrid(benchmark::State& state) {
  const MagnetSpec magnet{static_cast<int>(state.range(0)), 0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(magnetization_grid(magnet));
}
BENCHMARK(BM_MagnetizationGrid)->Arg(200)->Arg(1000)->Arg(10000)->Arg(1000000);

void BM_GeneratorApply(benchmark::State& state) {
  const MagnetSpec magnet{static_cast<int>(state.range(0)), 0.0, 1.0};
  const auto gen = build_generator(magnet, BathSpec{}, SpinZ::up, SpinZ::down, 0.1, 0.1);
  const auto in = binomial_distribution(magnet).amplitudes;
  std::vector<cplx> out(in.size());
  for (auto _ : state) {
    gen.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(in.size()));
}
BENCHMARK(BM_GeneratorApply)->Arg(200)->Arg(1000)->Arg(10000);

void BM_EvolveSingleSpin(benchmark::State& state) {
  ScenarioSpec s;
  s.kind = ScenarioKind::single;
  s.spin_state = pure_spin_state(0.3);
  s.magnets = {MagnetSpec{static_cast<int>(state.range(0)), 0.0, 1.0}};
  s.baths = {BathSpec{}};
  s.t_final = 2000.0;
  s.schedule = CouplingSchedule{0.1, 0.0, s.t_final, 1.0};
  s.samples = 16;
  const auto plan = build_scenario(s);
  IntegratorConfig ic;
  ic.samples = 16;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, plan.t_final, ic));
  }
}
BENCHMARK(BM_EvolveSingleSpin)->Arg(200)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
