#include "cwsim/bath_kernel.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cwsim {

void BathSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("bath: gamma must be >= 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("bath: T must be > 0");
  if (!(cutoff > 0.0)) throw std::invalid_argument("bath: cutoff must be > 0");
}

std::string_view to_string(OffdiagBath mode) {
  switch (mode) {
    case OffdiagBath::mixed: return "mixed";
    case OffdiagBath::loss_only: return "loss_only";
    case OffdiagBath::off: return "off";
  }
  return "mixed";
}

OffdiagBath offdiag_bath_from_string(std::string_view name) {
  if (name == "mixed") return OffdiagBath::mixed;
  if (name == "loss_only") return OffdiagBath::loss_only;
  if (name == "off") return OffdiagBath::off;
  throw std::invalid_argument("offdiag_bath must be one of mixed|loss_only|off, got '" + std::string(name) + "'");
}

double spectral_kernel(const BathSpec& bath, double omega) {
  const double x = omega / bath.T;
  if (x == 0.0) return 0.25 * bath.T;
  const double cut = std::exp(-std::abs(omega) / bath.cutoff);
  // omega / expm1(omega/T) keeps full precision near zero.
  return 0.25 * omega * cut / std::expm1(x);
}

namespace {

// Number of magnet spins that can flip up (down) out of sector k.
double flippable_down_spins(const MagnetSpec& magnet, std::size_t k) {
  return static_cast<double>(magnet.N) - static_cast<double>(k);
}
double flippable_up_spins(std::size_t k) { return static_cast<double>(k); }

}  // namespace

RatePair flip_rates(const MagnetSpec& magnet, const BathSpec& bath, SpinZ s, double g, double m) {
  const std::size_t k = grid_index(magnet, m);
  const double field = g * sign_of(s);
  const double here = sector_energy(magnet, field, magnet.m_at(k));
  RatePair r;
  if (k < static_cast<std::size_t>(magnet.N)) {
    const double w = sector_energy(magnet, field, magnet.m_at(k + 1)) - here;
    r.up = bath.gamma * flippable_down_spins(magnet, k) * 2.0 * spectral_kernel(bath, w);
  }
  if (k > 0) {
    const double w = sector_energy(magnet, field, magnet.m_at(k - 1)) - here;
    r.down = bath.gamma * flippable_up_spins(k) * 2.0 * spectral_kernel(bath, w);
  }
  return r;
}

BlockGenerator::BlockGenerator(std::vector<cplx> diagonal, std::vector<double> from_below,
                               std::vector<double> from_above)
    : diagonal_(std::move(diagonal)), from_below_(std::move(from_below)), from_above_(std::move(from_above)) {
  if (from_below_.size() != diagonal_.size() || from_above_.size() != diagonal_.size()) {
    throw std::invalid_argument("BlockGenerator: band sizes differ");
  }
}

void BlockGenerator::apply(std::span<const cplx> x, std::span<cplx> out) const {
  const std::size_t n = diagonal_.size();
  assert(x.size() == n && out.size() == n);
  // Spelled out in real arithmetic: the generic complex product carries
  // inf/nan recovery that costs more than the rest of the step.
  auto diag = [&](std::size_t k) {
    const double a = diagonal_[k].real(), b = diagonal_[k].imag();
    const double c = x[k].real(), d = x[k].imag();
    return cplx(a * c - b * d, a * d + b * c);
  };
  if (n == 1) {
    out[0] = diag(0);
    return;
  }
  out[0] = diag(0) + from_above_[0] * x[1];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    out[k] = diag(k) + from_below_[k] * x[k - 1] + from_above_[k] * x[k + 1];
  }
  out[n - 1] = diag(n - 1) + from_below_[n - 1] * x[n - 2];
}

double BlockGenerator::max_rate() const {
  double r = 0.0;
  for (const auto& d : diagonal_) r = std::max(r, -d.real());
  return r;
}

bool BlockGenerator::is_conjugate_of(const BlockGenerator& other) const {
  if (size() != other.size() || from_below_ != other.from_below_ || from_above_ != other.from_above_) return false;
  for (std::size_t k = 0; k < size(); ++k) {
    if (diagonal_[k] != std::conj(other.diagonal_[k])) return false;
  }
  return true;
}

BlockGenerator build_generator(const MagnetSpec& magnet, const BathSpec& bath, SpinZ s_bra, SpinZ s_ket,
                               double coupling_bra, double coupling_ket, OffdiagBath mode) {
  magnet.validate();
  bath.validate();
  const std::size_t n = magnet.grid_size();
  const double field_bra = coupling_bra * sign_of(s_bra);
  const double field_ket = coupling_ket * sign_of(s_ket);
  const bool same_sides = field_bra == field_ket;

  std::vector<double> h_bra(n), h_ket(n);
  for (std::size_t k = 0; k < n; ++k) {
    h_bra[k] = sector_energy(magnet, field_bra, magnet.m_at(k));
    h_ket[k] = same_sides ? h_bra[k] : sector_energy(magnet, field_ket, magnet.m_at(k));
  }

  // Bath frequencies: exact when both sides agree, arithmetic mean otherwise.
  auto omega = [&](std::size_t from, std::size_t to) {
    const double bra = h_bra[to] - h_bra[from];
    if (same_sides) return bra;
    return 0.5 * (bra + (h_ket[to] - h_ket[from]));
  };

  const bool bath_on = bath.gamma > 0.0 && (same_sides || mode != OffdiagBath::off);
  const bool with_gain = same_sides || mode == OffdiagBath::mixed;

  std::vector<double> up(n, 0.0), down(n, 0.0);
  if (bath_on) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k + 1 < n) up[k] = bath.gamma * flippable_down_spins(magnet, k) * 2.0 * spectral_kernel(bath, omega(k, k + 1));
      if (k > 0) down[k] = bath.gamma * flippable_up_spins(k) * 2.0 * spectral_kernel(bath, omega(k, k - 1));
    }
  }

  std::vector<cplx> diagonal(n);
  std::vector<double> from_below(n, 0.0), from_above(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    diagonal[k] = cplx(-(up[k] + down[k]), -(h_bra[k] - h_ket[k]));
    if (with_gain) {
      if (k > 0) from_below[k] = up[k - 1];
      if (k + 1 < n) from_above[k] = down[k + 1];
    }
  }
  return BlockGenerator(std::move(diagonal), std::move(from_below), std::move(from_above));
}

}  // namespace cwsim
