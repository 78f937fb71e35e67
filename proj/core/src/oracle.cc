#include "cwsim/oracle.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace cwsim::oracle {

namespace {

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double magnetization(int n, int k) { return (2.0 * k - n) / n; }

double energy(const MagnetSpec& magnet, double field, double m) {
  const double n = magnet.N;
  return -n * field * m - n * magnet.J2 * m * m / 2.0 - n * magnet.J4 * std::pow(m, 4) / 4.0;
}

}  // namespace

double analytic_dephasing(int N, double g, double t) {
  const double c = std::abs(std::cos(2.0 * g * t));
  if (c == 0.0) return 0.0;
  return std::exp(N * std::log(c));
}

double binomial_phase_sum(int N, double g, double t) {
  std::complex<double> acc{0.0, 0.0};
  for (int k = 0; k <= N; ++k) {
    const double w = std::exp(log_binomial(N, k) - N * std::log(2.0));
    acc += w * std::polar(1.0, 2.0 * g * N * magnetization(N, k) * t);
  }
  return std::abs(acc);
}

SectorDistribution dense_reference_evolution(const BlockGenerator& generator, const SectorDistribution& initial,
                                             double t_final) {
  const auto n = static_cast<Eigen::Index>(generator.size());
  if (n - 1 > kMaxDenseN) throw std::invalid_argument("dense_reference_evolution: N above 64");
  if (static_cast<Eigen::Index>(initial.amplitudes.size()) != n) {
    throw std::invalid_argument("dense_reference_evolution: size mismatch");
  }
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    L(k, k) = generator.diagonal()[static_cast<std::size_t>(k)];
    if (k > 0) L(k, k - 1) = generator.from_below()[static_cast<std::size_t>(k)];
    if (k + 1 < n) L(k, k + 1) = generator.from_above()[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXcd step = (L * (t_final / kDenseSteps)).exp();
  Eigen::VectorXcd x(n);
  for (Eigen::Index k = 0; k < n; ++k) x(k) = initial.amplitudes[static_cast<std::size_t>(k)];
  for (int i = 0; i < kDenseSteps; ++i) x = step * x;
  SectorDistribution out;
  out.amplitudes.assign(x.data(), x.data() + n);
  return out;
}

double stationarity_residual(const BlockGenerator& generator, const MagnetSpec& magnet, const BathSpec& bath,
                             SpinZ s, double g) {
  const int n = magnet.N;
  if (generator.size() != static_cast<std::size_t>(n) + 1) throw std::invalid_argument("stationarity_residual: size mismatch");
  const double field = g * (s == SpinZ::up ? 1.0 : -1.0);

  std::vector<double> log_w(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) log_w[k] = log_binomial(n, k) - energy(magnet, field, magnetization(n, k)) / bath.T;
  const double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> p(log_w.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) z += p[k] = std::exp(log_w[k] - top);
  for (auto& v : p) v /= z;

  double max_rate = 0.0;
  for (const auto& d : generator.diagonal()) max_rate = std::max(max_rate, std::abs(d.real()));
  for (double v : generator.from_below()) max_rate = std::max(max_rate, v);
  for (double v : generator.from_above()) max_rate = std::max(max_rate, v);

  double residual = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::complex<double> acc = generator.diagonal()[k] * p[k];
    if (k > 0) acc += generator.from_below()[k] * p[k - 1];
    if (k + 1 < p.size()) acc += generator.from_above()[k] * p[k + 1];
    residual = std::max(residual, std::abs(acc));
  }
  if (max_rate == 0.0) return residual;
  return residual / max_rate;
}

std::optional<double> barrier_scan(const MagnetSpec& magnet, SpinZ s, double T, std::span<const double> g_grid) {
  const int n = magnet.N;
  const double sign = s == SpinZ::up ? 1.0 : -1.0;
  const int start = s == SpinZ::up ? (n + 1) / 2 : n / 2;

  // Steepest descent on the grid from the paramagnetic point; the ball is
  // free when it ends at the global minimum.
  auto ball_escapes = [&](double g) {
    std::vector<double> f(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
      f[k] = energy(magnet, g * sign, magnetization(n, k)) - T * log_binomial(n, k);
    }
    int pos = start;
    for (;;) {
      int next = pos;
      if (pos > 0 && f[pos - 1] < f[next]) next = pos - 1;
      if (pos < n && f[pos + 1] < f[next]) next = pos + 1;
      if (next == pos) break;
      pos = next;
    }
    const double lowest = *std::min_element(f.begin(), f.end());
    return f[pos] <= lowest;
  };

  bool saw_barrier = false;
  for (double g : g_grid) {
    if (!ball_escapes(g)) {
      saw_barrier = true;
    } else if (saw_barrier) {
      return g;
    }
  }
  return std::nullopt;
}

std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

}  // namespace cwsim::oracle
