#pragma once

// Static thermodynamics of the Curie-Weiss magnet used as a measurement
// pointer. All Hamiltonians depend on the magnet only through the
// magnetization m, so every quantity here lives on the N+1 point grid
// m_k = -1 + 2k/N with binomial multiplicities kept in log domain.

#include <cstddef>
#include <vector>

namespace cwsim {

/// z-basis value of a tested spin.
enum class SpinZ : int { up = +1, down = -1 };

constexpr double sign_of(SpinZ s) { return static_cast<int>(s) > 0 ? 1.0 : -1.0; }
constexpr SpinZ flipped(SpinZ s) { return s == SpinZ::up ? SpinZ::down : SpinZ::up; }

struct MagnetSpec {
  int N = 200;      // number of magnet spins
  double J2 = 0.0;  // pair coupling
  double J4 = 1.0;  // quartet coupling

  /// Throws std::invalid_argument unless N >= 1, J2 >= 0, J4 > 0.
  void validate() const;

  std::size_t grid_size() const { return static_cast<std::size_t>(N) + 1; }
  double m_at(std::size_t k) const { return (2.0 * static_cast<double>(k) - N) / N; }

  friend bool operator==(const MagnetSpec&, const MagnetSpec&) = default;
};

struct SectorPoint {
  double m;
  double log_multiplicity;  // ln binom(N, N(1+m)/2)
};

/// Ascending grid of magnetization sectors. Uses lgamma, so N up to 10^6
/// and beyond is fine.
std::vector<SectorPoint> magnetization_grid(const MagnetSpec& spec);

/// Index k with m_k == m. Throws std::domain_error when m is not a grid value.
std::size_t grid_index(const MagnetSpec& spec, double m);

/// Energy of sector m for a magnet coupled with field `field` = g * s:
///   -N*field*m - (N/2) J2 m^2 - (N/4) J4 m^4.
/// No grid check; this is the hot-path form used by the generators.
double sector_energy(const MagnetSpec& spec, double field, double m);

/// H_i(m) = -g N s m - (N/2) J2 m^2 - (N/4) J4 m^4 on a grid point.
/// Throws std::domain_error when m is off-grid.
double sector_hamiltonian(const MagnetSpec& spec, SpinZ s, double g, double m);

struct FreeEnergyProfile {
  std::vector<double> m;
  std::vector<double> F;                   // F(m) = H(m) - T ln G(m)
  std::vector<std::size_t> local_minima;   // grid indices, ascending
  // Largest free-energy rise met when walking from the paramagnetic point
  // towards the s-side global minimum. Zero means nothing confines m ~ 0.
  double barrier = 0.0;
  std::size_t paramagnetic_index = 0;      // grid point closest to m = 0 on the s side
  std::size_t ferro_index = 0;             // global minimum along the walk
};

FreeEnergyProfile free_energy(const MagnetSpec& spec, SpinZ s, double g, double T);

struct MeanFieldResult {
  double m_f = 0.0;  // signed: negative for s = down
  bool converged = false;
  int iterations = 0;
};

/// Stable root of m = tanh(beta (J2 m + J4 m^3 + g s)) reached by damped
/// fixed-point iteration from 0.9 s (damping 0.5). Throws std::runtime_error
/// when 10^5 iterations do not reach a residual below 1e-12.
MeanFieldResult meanfield_fixed_point(const MagnetSpec& spec, SpinZ s, double g, double T);

/// Smallest coupling g at which the free-energy barrier around m = 0
/// disappears (bisection, absolute tolerance 1e-6 or better). Throws
/// std::domain_error("no threshold in this regime") when g = 0 has no
/// metastable paramagnet separated from a ferromagnetic minimum.
double threshold_coupling(const MagnetSpec& spec, double T);

}  // namespace cwsim
