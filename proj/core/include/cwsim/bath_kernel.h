#pragma once

// Effective quasi-Ohmic bath acting on the magnet. The phonon modes are not
// simulated; they enter through the Markovian kernel
//
//   K(w) = (1/4) w exp(-|w|/cutoff) / (exp(w/T) - 1),   K(0) = T/4,
//
// which obeys K(-w) = exp(w/T) K(w). Single-spin flips of the magnet then
// become birth-death rates between neighbouring magnetization sectors.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cwsim/magnet_thermo.h"

namespace cwsim {

using cplx = std::complex<double>;

struct BathSpec {
  double gamma = 0.002;  // dimensionless magnet-bath coupling
  double T = 0.2;        // temperature, energy units
  double cutoff = 50.0;  // exponential frequency cutoff

  /// Throws std::invalid_argument unless gamma >= 0, T > 0, cutoff > 0.
  /// gamma = 0 is accepted and switches the bath off.
  void validate() const;
  /// The weak-coupling reduction is questionable past this point.
  bool beyond_weak_coupling() const { return gamma > 0.05; }

  friend bool operator==(const BathSpec&, const BathSpec&) = default;
};

/// How the bath acts on blocks whose bra and ket sides see different
/// Hamiltonians. `mixed` uses gain and loss at the averaged frequency,
/// `loss_only` keeps only the loss terms, `off` gives pure dephasing.
enum class OffdiagBath { mixed, loss_only, off };

std::string_view to_string(OffdiagBath mode);
/// Throws std::invalid_argument on an unknown name.
OffdiagBath offdiag_bath_from_string(std::string_view name);

double spectral_kernel(const BathSpec& bath, double omega);

struct RatePair {
  double up = 0.0;    // m -> m + 2/N
  double down = 0.0;  // m -> m - 2/N
};

/// Flip rates out of sector m for a magnet under H_i with field g*s.
/// up = gamma (N(1-m)/2) 2K(H(m+2/N) - H(m)), down likewise; rates towards
/// off-grid targets vanish. Throws std::domain_error when m is off-grid.
RatePair flip_rates(const MagnetSpec& magnet, const BathSpec& bath, SpinZ s, double g, double m);

// Tridiagonal generator on a sector distribution x:
//
//   (Lx)_k = diagonal_k x_k + from_below_k x_{k-1} + from_above_k x_{k+1}
//
// The imaginary part of the diagonal carries the phase -i(H_bra - H_ket); the
// real part and the off-diagonals carry the bath gain and loss.
class BlockGenerator {
 public:
  BlockGenerator() = default;
  BlockGenerator(std::vector<cplx> diagonal, std::vector<double> from_below, std::vector<double> from_above);

  std::size_t size() const { return diagonal_.size(); }
  const std::vector<cplx>& diagonal() const { return diagonal_; }
  const std::vector<double>& from_below() const { return from_below_; }
  const std::vector<double>& from_above() const { return from_above_; }

  /// out = L x. Spans must have size() elements and must not alias.
  void apply(std::span<const cplx> x, std::span<cplx> out) const;

  /// Largest total loss rate over the grid.
  double max_rate() const;
  /// True when L is exactly the complex conjugate of `other`.
  bool is_conjugate_of(const BlockGenerator& other) const;

  friend bool operator==(const BlockGenerator&, const BlockGenerator&) = default;

 private:
  std::vector<cplx> diagonal_;
  std::vector<double> from_below_;  // index 0 unused (zero)
  std::vector<double> from_above_;  // index N unused (zero)
};

/// Generator for one apparatus in one block. `coupling_bra`/`coupling_ket`
/// are the effective per-side couplings (g times any region factor), so the
/// sides see H(field = coupling * s). When both sides see the same
/// Hamiltonian the bath part is the exact birth-death matrix; otherwise
/// `mode` decides.
BlockGenerator build_generator(const MagnetSpec& magnet, const BathSpec& bath, SpinZ s_bra, SpinZ s_ket,
                               double coupling_bra, double coupling_ket,
                               OffdiagBath mode = OffdiagBath::mixed);

}  // namespace cwsim
