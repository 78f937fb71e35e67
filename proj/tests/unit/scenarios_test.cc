#include "cwsim/scenarios.h"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "cwsim/verify.h"

namespace cwsim {
namespace {

RegionSpec regions(std::vector<std::pair<double, double>> iv, double k = 1.0) { return RegionSpec{std::move(iv), k}; }

ScenarioSpec base(ScenarioKind kind) { return test_matrix_scenario(kind, 0.002, 12); }

TEST(Names, RoundTrip) {
  for (auto k : {ScenarioKind::single, ScenarioKind::epr_one_apparatus, ScenarioKind::epr_two_apparatuses,
                 ScenarioKind::spatial_one_detector, ScenarioKind::spatial_two_detectors}) {
    EXPECT_EQ(scenario_kind_from_string(to_string(k)), k);
  }
  EXPECT_EQ(to_string(ScenarioKind::epr_one_apparatus), "epr-one-apparatus");
  EXPECT_THROW(scenario_kind_from_string("three-detectors"), std::invalid_argument);
  EXPECT_EQ(packet_kind_from_string("two-lobe-gaussian"), PacketSpec::Kind::two_lobe_gaussian);
}

TEST(RegionSpec, OverlapRejected) {
  try {
    regions({{0.0, 0.5}, {0.4, 0.9}}).validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "intervals must be disjoint");
  }
  EXPECT_NO_THROW(regions({{0.0, 0.5}, {0.5, 0.9}}).validate());
  EXPECT_THROW(regions({{0.0, 0.5}}, 0.0).validate(), std::invalid_argument);
}

TEST(RegionWeights, GaussianInsideOneRegion) {
  const auto w = region_weights(PacketSpec{PacketSpec::Kind::gaussian, {0.0}, {0.01}}, regions({{-1.0, 1.0}, {2.0, 3.0}}));
  EXPECT_NEAR(w(0, 0).real(), 1.0, 1e-12);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (i || j) {
        EXPECT_LT(std::abs(w(i, j)), 1e-12);
      }
    }
  }
}

TEST(RegionWeights, SymmetricTwoLobePacket) {
  const auto w = region_weights(PacketSpec{PacketSpec::Kind::two_lobe_gaussian, {-2.0, 2.0}, {0.1, 0.1}},
                                regions({{-3.0, -1.0}, {1.0, 3.0}}));
  EXPECT_NEAR(w(0, 0).real(), 0.5, 1e-12);
  EXPECT_NEAR(w(1, 1).real(), 0.5, 1e-12);
  EXPECT_NEAR(w(2, 2).real(), 0.0, 1e-12);
}

TEST(RegionWeights, UniformPacketAndCauchySchwarz) {
  const auto w = region_weights(PacketSpec{PacketSpec::Kind::uniform, {0.5}, {1.0}}, regions({{0.0, 0.3}, {0.5, 0.8}}));
  EXPECT_NEAR(w(0, 0).real(), 0.3, 1e-12);
  EXPECT_NEAR(w(1, 1).real(), 0.3, 1e-12);
  EXPECT_NEAR(w(2, 2).real(), 0.4, 1e-12);
  EXPECT_NEAR(w.trace().real(), 1.0, 1e-12);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_LE(std::norm(w(i, j)), w(i, i).real() * w(j, j).real() * (1 + 1e-12));
      EXPECT_EQ(w(i, j), std::conj(w(j, i)));
    }
  }
}

TEST(RegionWeights, BadPacketRejected) {
  EXPECT_THROW(region_weights(PacketSpec{PacketSpec::Kind::gaussian, {0.0}, {0.0}}, regions({{0.0, 1.0}})),
               std::invalid_argument);
  EXPECT_THROW(region_weights(PacketSpec{PacketSpec::Kind::two_lobe_gaussian, {0.0}, {1.0}}, regions({{0.0, 1.0}})),
               std::invalid_argument);
}

TEST(ScenarioSpec, SpinStateValidation) {
  auto s = base(ScenarioKind::single);
  s.spin_state(0, 1) = 0.9;  // not Hermitian
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = base(ScenarioKind::single);
  s.spin_state(0, 0) = 0.5;  // trace 1.2
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = base(ScenarioKind::single);
  s.spin_state << 1.2, 0, 0, -0.2;  // negative eigenvalue
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = base(ScenarioKind::single);
  s.spin_state = epr_state();  // wrong size
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(ScenarioSpec, SpatialKindsNeedRegions) {
  auto s = base(ScenarioKind::spatial_one_detector);
  s.regions.reset();
  EXPECT_THROW(build_scenario(s), std::invalid_argument);
  s = base(ScenarioKind::spatial_one_detector);
  s.packet.reset();
  EXPECT_THROW(build_scenario(s), std::invalid_argument);
  s = base(ScenarioKind::single);
  s.regions = regions({{0.0, 1.0}});
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(BuildScenario, BlockCounts) {
  EXPECT_EQ(build_scenario(base(ScenarioKind::single)).blocks.size(), 4u);
  EXPECT_EQ(build_scenario(base(ScenarioKind::epr_one_apparatus)).blocks.size(), 4u);
  EXPECT_EQ(build_scenario(base(ScenarioKind::epr_two_apparatuses)).blocks.size(), 4u);
  EXPECT_EQ(build_scenario(base(ScenarioKind::spatial_one_detector)).blocks.size(), 16u);
  const auto two = build_scenario(base(ScenarioKind::spatial_two_detectors));
  EXPECT_EQ(two.blocks.size(), 36u);
  std::set<std::pair<int, int>> classes;
  for (const auto& b : two.blocks) classes.emplace(b.label.region_bra, b.label.region_ket);
  EXPECT_EQ(classes.size(), 9u);
}

TEST(BuildScenario, EprOneApparatusOffDiagonalBlocks) {
  const auto plan = build_scenario(base(ScenarioKind::epr_one_apparatus));
  ASSERT_EQ(plan.apparatus.size(), 1u);
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    const auto& label = plan.blocks[b].label;
    EXPECT_EQ(plan.blocks[b].weight, cplx(0.5));
    if (label.spin_diagonal()) continue;
    // bra spin a and ket spin a differ: the phase is +-2gNm, opposite for the two blocks
    const auto& gen = *plan.generators[b][0].active;
    const double expected = (label.spin_bra[0] == SpinZ::up ? 1.0 : -1.0) * 2 * 0.1 * 12 * 1.0;
    EXPECT_NEAR(gen.diagonal().back().imag(), expected, 1e-12) << label.to_string();
  }
}

TEST(BuildScenario, PacketOutsideTheDetectorLeavesOnlyTheOutsideBlock) {
  auto s = base(ScenarioKind::spatial_one_detector);
  s.packet = PacketSpec{PacketSpec::Kind::uniform, {5.0}, {1.0}};
  const auto plan = build_scenario(s);
  for (const auto& b : plan.blocks) {
    EXPECT_EQ(b.label.region_bra, kOutside);
    EXPECT_EQ(b.label.region_ket, kOutside);
  }
  EXPECT_EQ(plan.side_coupling(0, kOutside), 0.0);
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    for (const auto& d : plan.generators[b][0].active->diagonal()) EXPECT_EQ(d.imag(), 0.0);
  }
}

TEST(BuildScenario, InterferenceBlockPhaseMatchesSpinCoherence) {
  // An (R, outside) block sees k g on one side and nothing on the other; its
  // phase equals that of a spin-off-diagonal block at coupling k g / 2.
  auto s = base(ScenarioKind::spatial_one_detector);
  s.baths[0].gamma = 0.0;
  s.regions->k = 3.0;
  const auto plan = build_scenario(s);
  MagnetSpec magnet = s.magnets[0];
  const auto reference = build_generator(magnet, s.baths[0], SpinZ::up, SpinZ::down, 0.15, 0.15);
  bool found = false;
  for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
    const auto& l = plan.blocks[b].label;
    if (l.spin_bra[0] == SpinZ::up && l.spin_ket[0] == SpinZ::up && l.region_bra == 0 && l.region_ket == kOutside) {
      const auto& gen = *plan.generators[b][0].active;
      ASSERT_EQ(gen.diagonal().size(), reference.diagonal().size());
      for (std::size_t k = 0; k < gen.diagonal().size(); ++k) {
        EXPECT_NEAR(std::abs(gen.diagonal()[k] - reference.diagonal()[k]), 0.0, 1e-12) << "k=" << k;
        EXPECT_EQ(gen.from_below()[k], 0.0);
        EXPECT_EQ(gen.from_above()[k], 0.0);
      }
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Readout, RejectsBadThreshold) {
  auto s = base(ScenarioKind::single);
  const auto plan = build_scenario(s);
  IntegratorConfig ic;
  const auto tr = evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, plan.t_final, ic);
  EXPECT_THROW(readout(plan, tr, 0.0, plan.t_final), std::invalid_argument);
  EXPECT_THROW(readout(plan, tr, 1.0, plan.t_final), std::invalid_argument);
  EXPECT_THROW(readout(plan, tr, 0.5, 17.0), std::out_of_range);

  auto hot = s;
  hot.baths[0].T = 5.0;
  const auto hot_plan = build_scenario(hot);
  const auto hot_tr = evolve(hot_plan.blocks, hot_plan.generators, hot_plan.magnets(), hot_plan.schedule,
                             hot_plan.t_final, ic);
  EXPECT_THROW(readout(hot_plan, hot_tr, 0.5, hot_plan.t_final), std::invalid_argument);
}

TEST(Readout, MarginalsSumToOne) {
  for (auto kind : {ScenarioKind::single, ScenarioKind::epr_two_apparatuses, ScenarioKind::spatial_two_detectors}) {
    const auto plan = build_scenario(base(kind));
    const auto tr = evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, plan.t_final, {});
    const auto r = readout(plan, tr, 0.5, plan.t_final);
    for (const auto& p : r.pointers) EXPECT_NEAR(p.up + p.down + p.null, 1.0, 1e-9);
    double joint = 0.0;
    for (double v : r.joint) joint += v;
    EXPECT_NEAR(joint, 1.0, 1e-9);
    EXPECT_NEAR(r.total_trace, 1.0, 1e-9);
    if (is_spatial(kind)) {
      double regions_total = 0.0;
      for (double v : r.region_probability) regions_total += v;
      EXPECT_NEAR(regions_total, 1.0, 1e-9);
    }
  }
}

TEST(Readout, SingleSpinBornWeights) {
  ScenarioSpec s = base(ScenarioKind::single);
  s.magnets = {MagnetSpec{100, 0.0, 1.0}};
  s.t_final = 20000.0;
  s.schedule = CouplingSchedule{0.1, 0.0, 16000.0, 1.0};
  const auto plan = build_scenario(s);
  const auto tr = evolve(plan.blocks, plan.generators, plan.magnets(), plan.schedule, plan.t_final, {});
  const auto r = readout(plan, tr, 0.5, plan.t_final);
  EXPECT_NEAR(r.pointers[0].up, 0.3, 1e-6);
  EXPECT_NEAR(r.pointers[0].down, 0.7, 1e-6);
  // Pointer and spin are perfectly correlated.
  EXPECT_NEAR(r.pointer_spin[0][0][0][0], 0.3, 1e-6);
  EXPECT_NEAR(r.pointer_spin[0][0][0][1], 0.0, 1e-6);
  EXPECT_NEAR(r.correlators[0][0], 1.0, 1e-6);
  for (const auto& [block, value] : r.residual_coherence) EXPECT_LT(value, 1e-6) << block;
}

TEST(TraceDistance, Basics) {
  SpinMatrix up = SpinMatrix::Zero(), down = SpinMatrix::Zero();
  up(0, 0) = 1.0;
  down(1, 1) = 1.0;
  EXPECT_NEAR(trace_distance(up, down), 1.0, 1e-15);
  EXPECT_NEAR(trace_distance(up, up), 0.0, 1e-15);
  SpinMatrix plus = SpinMatrix::Constant(0.5);
  EXPECT_NEAR(trace_distance(up, plus), std::sqrt(0.5), 1e-12);
}

}  // namespace
}  // namespace cwsim
