#pragma once

// Brute-force references for the engine. Nothing here calls into the engine's
// numerics: multiplicities and energies are recomputed locally, evolution uses
// a dense matrix exponential, and thresholds come from scanning a g grid.

#include <optional>
#include <span>
#include <vector>

#include "cwsim/bath_kernel.h"
#include "cwsim/block_engine.h"
#include "cwsim/magnet_thermo.h"

namespace cwsim::oracle {

/// |cos(2gt)|^N for the bath-free off-diagonal block, evaluated as
/// exp(N ln|cos 2gt|); exactly 0 when cos(2gt) == 0.
double analytic_dephasing(int N, double g, double t);

/// The same quantity as an explicit sum over the N+1 binomial terms,
/// |sum_k binom(N,k) 2^-N exp(2 i g N m_k t)|.
double binomial_phase_sum(int N, double g, double t);

inline constexpr int kMaxDenseN = 64;
inline constexpr int kDenseSteps = 1024;

/// exp(L t) applied to `initial` as 1024 applications of the scaling-and-
/// squaring exponential of L t / 1024. Throws std::invalid_argument when the
/// grid exceeds N = 64.
SectorDistribution dense_reference_evolution(const BlockGenerator& generator, const SectorDistribution& initial,
                                             double t_final);

/// ||L P_eq||_inf / (largest rate), with P_eq(m) proportional to
/// exp(ln G(m) - H(m)/T) built independently. Returns 0 when the bath is off.
double stationarity_residual(const BlockGenerator& generator, const MagnetSpec& magnet, const BathSpec& bath,
                             SpinZ s, double g);

/// First g on the grid at which a ball rolling downhill on F(m) from the
/// paramagnetic point reaches the global minimum. nullopt when no g on the
/// grid has a barrier to begin with, or none erases it.
std::optional<double> barrier_scan(const MagnetSpec& magnet, SpinZ s, double T, std::span<const double> g_grid);

/// lo, lo + step, ... up to and including hi (within rounding).
std::vector<double> uniform_grid(double lo, double hi, double step);

}  // namespace cwsim::oracle
