#include "cwsim/magnet_thermo.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cwsim {

void MagnetSpec::validate() const {
  if (N < 1) throw std::invalid_argument("magnet: N must be >= 1, got " + std::to_string(N));
  if (!(J2 >= 0.0) || !std::isfinite(J2)) throw std::invalid_argument("magnet: J2 must be >= 0");
  if (!(J4 > 0.0) || !std::isfinite(J4)) throw std::invalid_argument("magnet: J4 must be > 0");
}

std::vector<SectorPoint> magnetization_grid(const MagnetSpec& spec) {
  spec.validate();
  const double log_n_fact = std::lgamma(spec.N + 1.0);
  std::vector<SectorPoint> grid;
  grid.reserve(spec.grid_size());
  for (std::size_t k = 0; k < spec.grid_size(); ++k) {
    const double up = static_cast<double>(k);
    const double down = static_cast<double>(spec.N) - up;
    double log_g = log_n_fact - std::lgamma(up + 1.0) - std::lgamma(down + 1.0);
    if (k == 0 || k + 1 == spec.grid_size()) log_g = 0.0;  // exact endpoints
    grid.push_back({spec.m_at(k), log_g});
  }
  // lgamma rounding can break the m -> -m mirror by an ulp; restore it.
  for (std::size_t k = 0, j = spec.grid_size() - 1; k < j; ++k, --j) {
    grid[j].log_multiplicity = grid[k].log_multiplicity;
  }
  return grid;
}

std::size_t grid_index(const MagnetSpec& spec, double m) {
  const double pos = (m + 1.0) * spec.N / 2.0;
  const double k = std::round(pos);
  if (!std::isfinite(m) || k < 0.0 || k > spec.N || std::abs(pos - k) > 1e-9 * std::max(1.0, pos)) {
    throw std::domain_error("magnetization " + std::to_string(m) + " is not on the N=" +
                            std::to_string(spec.N) + " grid");
  }
  return static_cast<std::size_t>(k);
}

double sector_energy(const MagnetSpec& spec, double field, double m) {
  const double n = spec.N;
  const double m2 = m * m;
  return -n * field * m - 0.5 * n * spec.J2 * m2 - 0.25 * n * spec.J4 * m2 * m2;
}

double sector_hamiltonian(const MagnetSpec& spec, SpinZ s, double g, double m) {
  const std::size_t k = grid_index(spec, m);
  return sector_energy(spec, g * sign_of(s), spec.m_at(k));
}

FreeEnergyProfile free_energy(const MagnetSpec& spec, SpinZ s, double g, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("free_energy: T must be > 0");
  const auto grid = magnetization_grid(spec);
  const double field = g * sign_of(s);

  FreeEnergyProfile out;
  out.m.reserve(grid.size());
  out.F.reserve(grid.size());
  for (const auto& p : grid) {
    out.m.push_back(p.m);
    out.F.push_back(sector_energy(spec, field, p.m) - T * p.log_multiplicity);
  }

  const std::size_t last = grid.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    const bool below_left = i == 0 || out.F[i] < out.F[i - 1];
    const bool below_right = i == last || out.F[i] <= out.F[i + 1];
    if (below_left && below_right) out.local_minima.push_back(i);
  }

  // Walk from the paramagnetic point towards m = s.
  const int dir = s == SpinZ::up ? +1 : -1;
  const std::size_t start = s == SpinZ::up ? (static_cast<std::size_t>(spec.N) + 1) / 2
                                           : static_cast<std::size_t>(spec.N) / 2;
  const std::size_t stop = s == SpinZ::up ? last : 0;
  out.paramagnetic_index = start;

  std::size_t best = start;
  for (std::size_t i = start;; i += dir) {
    if (out.F[i] < out.F[best]) best = i;
    if (i == stop) break;
  }
  out.ferro_index = best;

  double lowest = out.F[start];
  double barrier = 0.0;
  for (std::size_t i = start;; i += dir) {
    lowest = std::min(lowest, out.F[i]);
    barrier = std::max(barrier, out.F[i] - lowest);
    if (i == best) break;
  }
  out.barrier = barrier;
  return out;
}

MeanFieldResult meanfield_fixed_point(const MagnetSpec& spec, SpinZ s, double g, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("meanfield_fixed_point: T must be > 0");
  const double beta = 1.0 / T;
  const double field = g * sign_of(s);
  auto target = [&](double m) { return std::tanh(beta * (spec.J2 * m + spec.J4 * m * m * m + field)); };

  constexpr int kMaxIterations = 100000;
  constexpr double kDamping = 0.5;
  MeanFieldResult res;
  double m = 0.9 * sign_of(s);
  for (int it = 1; it <= kMaxIterations; ++it) {
    m = (1.0 - kDamping) * m + kDamping * target(m);
    if (std::abs(m - target(m)) < 1e-12) {
      res.m_f = m;
      res.converged = true;
      res.iterations = it;
      return res;
    }
  }
  throw std::runtime_error("meanfield_fixed_point: no convergence after 100000 iterations");
}

double threshold_coupling(const MagnetSpec& spec, double T) {
  auto barrier = [&](double g) { return free_energy(spec, SpinZ::up, g, T).barrier; };

  const auto at_zero = free_energy(spec, SpinZ::up, 0.0, T);
  if (!(at_zero.barrier > 0.0) || at_zero.ferro_index == at_zero.paramagnetic_index) {
    throw std::domain_error("no threshold in this regime");
  }

  double lo = 0.0;
  double hi = 1e-2 * (spec.J2 + spec.J4 + T);
  for (int i = 0; barrier(hi) > 0.0; ++i) {
    if (i > 200) throw std::domain_error("no threshold in this regime");
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (barrier(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace cwsim
