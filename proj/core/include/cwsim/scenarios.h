#pragma once

// The measurement set-ups: a single spin, either spin of an EPR pair (one or
// two apparatuses), and a spin whose position is spread over spatially
// confined detectors. A ScenarioSpec is turned into blocks plus per-block
// generators, and a finished trajectory is folded into pointer statistics.

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cwsim/bath_kernel.h"
#include "cwsim/block_engine.h"
#include "cwsim/magnet_thermo.h"

namespace cwsim {

enum class ScenarioKind { single, epr_one_apparatus, epr_two_apparatuses, spatial_one_detector, spatial_two_detectors };

std::string_view to_string(ScenarioKind kind);
/// Accepts the hyphenated names ("epr-one-apparatus", ...).
ScenarioKind scenario_kind_from_string(std::string_view name);

std::size_t spin_count(ScenarioKind kind);
std::size_t apparatus_count(ScenarioKind kind);
std::size_t detector_count(ScenarioKind kind);  // 0 for non-spatial kinds
bool is_spatial(ScenarioKind kind);

struct RegionSpec {
  std::vector<std::pair<double, double>> intervals;  // one (a, b) per detector
  double k = 1.0;                                    // potential depth

  /// Throws std::invalid_argument("intervals must be disjoint") and the like.
  void validate() const;
  friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

struct PacketSpec {
  enum class Kind { gaussian, uniform, two_lobe_gaussian };
  Kind kind = Kind::gaussian;
  // gaussian: means[0], widths[0] = standard deviation of |psi|^2.
  // uniform: flat on [means[0] - widths[0]/2, means[0] + widths[0]/2].
  // two_lobe_gaussian: equal-amplitude sum of two gaussians.
  std::vector<double> means;
  std::vector<double> widths;

  void validate() const;
  friend bool operator==(const PacketSpec&, const PacketSpec&) = default;
};

std::string_view to_string(PacketSpec::Kind kind);
PacketSpec::Kind packet_kind_from_string(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::single;
  Eigen::MatrixXcd spin_state;        // 2x2 or 4x4 in the z basis (see initialize_blocks)
  std::vector<MagnetSpec> magnets;    // one per apparatus
  std::vector<BathSpec> baths;        // one per apparatus
  CouplingSchedule schedule;
  std::optional<RegionSpec> regions;
  std::optional<PacketSpec> packet;
  std::optional<Eigen::MatrixXcd> region_weights;  // direct (possibly mixed) spatial weights
  double t_final = 20000.0;
  int samples = 512;

  /// Checks shapes, positivity of the spin state (eigenvalues >= -1e-12),
  /// Hermiticity, unit trace, and the per-kind requirements.
  void validate() const;
  bool operator==(const ScenarioSpec& other) const;
};

/// The EPR state (|ud> + |du>)/sqrt 2 as a 4x4 density matrix.
Eigen::MatrixXcd epr_state();
/// Pure single-spin state with the given probability of up and real amplitudes.
Eigen::MatrixXcd pure_spin_state(double p_up);

/// Coarse-grained spatial weights, ordered (detector 0, ..., outside).
/// Diagonal entries are the probabilities of finding the particle in each
/// region; off-diagonal entries are sqrt(p_i p_j) times the relative phase of
/// the region amplitudes (packets here are real and positive, so the phase is
/// trivial). Integrals use adaptive Gauss-Kronrod quadrature. Throws
/// std::invalid_argument when the packet does not normalize to 1 within 1e-10.
Eigen::MatrixXcd region_weights(const PacketSpec& packet, const RegionSpec& regions);

struct ApparatusModel {
  MagnetSpec magnet;
  BathSpec bath;
  std::size_t spin_index = 0;        // which tested spin it reads
  std::optional<int> region;         // detector region, or coupled everywhere
};

struct ScenarioPlan {
  ScenarioKind kind = ScenarioKind::single;
  std::vector<ApparatusModel> apparatus;
  std::vector<BlockState> blocks;
  std::vector<std::vector<GeneratorPair>> generators;  // [block][apparatus]
  CouplingSchedule schedule;
  Eigen::MatrixXcd region_weights;                     // 1x1 for non-spatial kinds
  double t_final = 0.0;

  std::vector<MagnetSpec> magnets() const;
  /// Effective coupling apparatus `a` sees on one side of a block while the
  /// coupling is on: g, k*g inside its region, 0 elsewhere.
  double side_coupling(std::size_t a, int region) const;
};

ScenarioPlan build_scenario(const ScenarioSpec& spec, OffdiagBath mode = OffdiagBath::mixed);

/// Blocks for a scenario (initial product state with binomial magnets).
std::vector<BlockState> initialize_blocks(const ScenarioSpec& spec);

enum class Pointer { up = 0, down = 1, null = 2 };

struct PointerStats {
  double up = 0.0;
  double down = 0.0;
  double null = 0.0;
  double click() const { return up + down; }
};

using SpinMatrix = Eigen::Matrix2cd;

struct Readout {
  double at = 0.0;
  std::vector<double> m_f;                 // g = 0 ferromagnetic magnetization per apparatus
  std::vector<double> threshold;           // pointer threshold per apparatus
  std::vector<PointerStats> pointers;      // per apparatus
  // Joint pointer table, entry sum_a outcome_a * 3^a (outcome: up, down, null).
  std::vector<double> joint;
  // [apparatus][spin][outcome][spin value up/down]
  std::vector<std::vector<std::array<std::array<double, 2>, 3>>> pointer_spin;
  // <sign(pointer_a) s_z(j)>, [apparatus][spin]
  std::vector<std::vector<double>> correlators;
  // Reduced state of spin j given pointer a reads up / down, [apparatus][spin][0=up,1=down].
  std::vector<std::vector<std::array<SpinMatrix, 2>>> conditional_spin;
  // Diagonal region masses (detector 0, ..., outside), spatial kinds only.
  std::vector<double> region_probability;
  // |block trace| of every non-diagonal block.
  std::vector<std::pair<std::size_t, double>> residual_coherence;
  double total_trace = 0.0;

  double joint_at(std::span<const Pointer> outcomes) const;
  /// Probability that every apparatus clicks.
  double all_click() const;
};

/// Pointer statistics at snapshot time `at`. The pointer reads up when
/// m > threshold_fraction * m_F and down when m < -threshold_fraction * m_F,
/// with m_F the g = 0 mean-field magnetization at the bath temperature.
/// Throws std::invalid_argument when threshold_fraction is not in (0, 1)
/// and std::out_of_range when `at` is not a snapshot time.
Readout readout(const ScenarioPlan& plan, const Trajectory& trajectory, double threshold_fraction, double at);

double trace_distance(const SpinMatrix& a, const SpinMatrix& b);

}  // namespace cwsim
