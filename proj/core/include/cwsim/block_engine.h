#pragma once

// Block-decomposed evolution of the joint spin + magnet density operator.
//
// The state is a sum of blocks |spins_bra, region_bra><spins_ket, region_ket|
// times a product of sector distributions, one per apparatus. Every
// Hamiltonian commutes with the tested spins' s_z and with position, so the
// blocks never mix: each (block, apparatus) pair is an independent linear
// ODE on N+1 complex amplitudes.

#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwsim/bath_kernel.h"
#include "cwsim/integrator.h"
#include "cwsim/magnet_thermo.h"

namespace cwsim {

/// Region label for "not inside any detector region" (also used by
/// scenarios without spatial structure).
inline constexpr int kOutside = -1;

struct BlockLabel {
  std::vector<SpinZ> spin_bra;
  std::vector<SpinZ> spin_ket;
  int region_bra = kOutside;
  int region_ket = kOutside;

  bool spin_diagonal() const { return spin_bra == spin_ket; }
  bool region_diagonal() const { return region_bra == region_ket; }
  bool is_diagonal() const { return spin_diagonal() && region_diagonal(); }
  BlockLabel conjugate() const { return {spin_ket, spin_bra, region_ket, region_bra}; }
  /// e.g. "ud|du@R0|out"
  std::string to_string() const;

  friend bool operator==(const BlockLabel&, const BlockLabel&) = default;
};

struct SectorDistribution {
  std::vector<cplx> amplitudes;  // indexed by grid k, m_k = -1 + 2k/N

  cplx sum() const;
};

struct BlockState {
  BlockLabel label;
  cplx weight{1.0, 0.0};
  std::vector<SectorDistribution> per_apparatus;
};

struct CouplingSchedule {
  double g = 0.1;
  double t_on = 0.0;
  double t_off = 0.0;
  double k = 1.0;  // region potential depth; spatial scenarios only

  bool active_at(double t) const { return t >= t_on && t < t_off; }
  /// Throws std::invalid_argument unless 0 <= t_on < t_off <= t_final, g >= 0.
  void validate(double t_final) const;

  friend bool operator==(const CouplingSchedule&, const CouplingSchedule&) = default;
};

struct IntegratorConfig {
  double rtol = 1e-8;
  double atol = 0.0;
  double max_step = std::numeric_limits<double>::infinity();
  // Blocks that decay below this fraction of their initial max-norm are set
  // to zero (0 disables). Nothing linear can bring them back.
  double negligible = 1e-30;
  int samples = 512;                  // uniform sample times over [0, t_final]
  std::vector<double> snapshot_times; // full distributions kept here, plus 0, t_off, t_final
  unsigned threads = 0;               // 0: CWSIM_THREADS or hardware concurrency

  friend bool operator==(const IntegratorConfig&, const IntegratorConfig&) = default;
};

/// Generators for one (block, apparatus) pair: `idle` acts while the
/// coupling is off, `active` while it is on.
struct GeneratorPair {
  std::shared_ptr<const BlockGenerator> idle;
  std::shared_ptr<const BlockGenerator> active;
};

struct SectorMoments {
  double mean = 0.0;  // moments of |amplitude| over m
  double var = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<BlockState> blocks;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<BlockLabel> labels;
  std::vector<cplx> weights;
  std::size_t apparatus_count = 0;
  std::vector<std::vector<cplx>> traces;                       // [sample][block]
  std::vector<std::vector<std::vector<SectorMoments>>> moments; // [sample][block][apparatus]
  std::vector<Snapshot> snapshots;                             // ascending t
  std::size_t unique_evolutions = 0;                           // distinct ODEs integrated

  /// Snapshot taken at time t (within 1e-9 relative). Throws
  /// std::out_of_range when t was not a snapshot time.
  const Snapshot& snapshot_at(double t) const;
};

class EvolutionError : public std::runtime_error {
 public:
  EvolutionError(const BlockLabel& label, std::size_t apparatus, const std::string& what);
  const BlockLabel& label() const { return label_; }

 private:
  BlockLabel label_;
};

/// Binomial initial distribution exp(ln G(m)) / 2^N.
SectorDistribution binomial_distribution(const MagnetSpec& magnet);

/// One block per (spin_bra, spin_ket, region_bra, region_ket) with nonzero
/// weight r[spin_bra][spin_ket] * w[region_bra][region_ket]. Spin states are
/// indexed as bit strings with bit j (most significant first) set when spin
/// j is down; regions 0..R-1 are detectors and index R is kOutside.
/// Throws std::invalid_argument when |w_ij|^2 > w_ii w_jj (beyond 1e-12)
/// or shapes mismatch.
std::vector<BlockState> initialize_blocks(std::span<const cplx> spin_state, std::size_t spin_count,
                                          std::span<const cplx> region_weights, std::size_t region_dim,
                                          std::span<const MagnetSpec> magnets);

/// weight * product over apparatuses of sum_m amplitudes.
cplx block_trace(const BlockState& block);

/// |block_trace|. Throws std::invalid_argument on a diagonal block.
double coherence_magnitude(const BlockState& block);

SectorMoments sector_moments(const SectorDistribution& dist, const MagnetSpec& magnet);

/// Integrates every (block, apparatus) pair over [0, t_final] following the
/// schedule. Pairs whose generators and initial amplitudes coincide (or are
/// exact complex conjugates) are integrated once; the result does not depend
/// on thread count or order. Throws EvolutionError on step-size underflow.
Trajectory evolve(const std::vector<BlockState>& blocks, const std::vector<std::vector<GeneratorPair>>& generators,
                  std::span<const MagnetSpec> magnets, const CouplingSchedule& schedule, double t_final,
                  const IntegratorConfig& config);

/// Threads to use: explicit value, else CWSIM_THREADS, else hardware concurrency.
unsigned resolve_thread_count(unsigned requested);

}  // namespace cwsim
