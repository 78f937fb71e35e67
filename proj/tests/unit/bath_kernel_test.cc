#include "cwsim/bath_kernel.h"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace cwsim {
namespace {

double log_binom(int n, int k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

TEST(BathSpec, Validation) {
  BathSpec b;
  EXPECT_NO_THROW(b.validate());
  b.T = 0.0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = BathSpec{};
  b.gamma = -1e-3;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = BathSpec{};
  b.cutoff = 0.0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b = BathSpec{};
  b.gamma = 0.0;
  EXPECT_NO_THROW(b.validate());
  EXPECT_FALSE(b.beyond_weak_coupling());
  b.gamma = 0.1;
  EXPECT_TRUE(b.beyond_weak_coupling());
}

TEST(OffdiagBathNames, RoundTrip) {
  for (auto m : {OffdiagBath::mixed, OffdiagBath::loss_only, OffdiagBath::off}) {
    EXPECT_EQ(offdiag_bath_from_string(to_string(m)), m);
  }
  EXPECT_THROW(offdiag_bath_from_string("sometimes"), std::invalid_argument);
}

TEST(SpectralKernel, ZeroFrequencyLimit) {
  BathSpec b;
  EXPECT_DOUBLE_EQ(spectral_kernel(b, 0.0), b.T / 4);
  EXPECT_NEAR(spectral_kernel(b, 1e-9), b.T / 4, 1e-9);
  EXPECT_NEAR(spectral_kernel(b, -1e-9), b.T / 4, 1e-9);
}

TEST(SpectralKernel, KmsAtOnePointThree) {
  BathSpec b;
  const double w = 1.3;
  const double lhs = spectral_kernel(b, -w), rhs = std::exp(w / b.T) * spectral_kernel(b, w);
  EXPECT_NEAR(lhs / rhs, 1.0, 1e-14);
}

TEST(SpectralKernel, KmsRandomFrequencies) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  BathSpec b;
  for (int i = 0; i < 1000; ++i) {
    const double w = dist(rng);
    const double lhs = spectral_kernel(b, -w), rhs = std::exp(w / b.T) * spectral_kernel(b, w);
    ASSERT_NEAR(lhs / rhs, 1.0, 1e-12) << "omega=" << w;
  }
}

TEST(SpectralKernel, BeyondCutoffIsNegligibleAndNonNegative) {
  BathSpec b;
  EXPECT_LT(spectral_kernel(b, b.cutoff * 50), 1e-18);
  EXPECT_GE(spectral_kernel(b, b.cutoff * 50), 0.0);
  EXPECT_LT(spectral_kernel(b, -b.cutoff * 50), 1e-18);
}

TEST(FlipRates, EdgesCannotOverflow) {
  MagnetSpec magnet{10, 0.0, 1.0};
  BathSpec b;
  EXPECT_EQ(flip_rates(magnet, b, SpinZ::up, 0.1, 1.0).up, 0.0);
  EXPECT_EQ(flip_rates(magnet, b, SpinZ::up, 0.1, -1.0).down, 0.0);
  EXPECT_THROW(flip_rates(magnet, b, SpinZ::up, 0.1, 0.15), std::domain_error);
}

TEST(FlipRates, DetailedBalanceRatio) {
  MagnetSpec magnet{10, 0.0, 1.0};
  BathSpec b;
  const double g = 0.1, m = 0.2, m2 = m + 2.0 / magnet.N;
  const double lhs = flip_rates(magnet, b, SpinZ::up, g, m).up / flip_rates(magnet, b, SpinZ::up, g, m2).down;
  auto H = [&](double x) { return -g * magnet.N * x - magnet.N * std::pow(x, 4) / 4; };
  const int k = 6, k2 = 7;  // grid indices of m and m + 2/N
  const double rhs = std::exp(log_binom(10, k2) - log_binom(10, k) - (H(m2) - H(m)) / b.T);
  EXPECT_NEAR(lhs / rhs, 1.0, 1e-12);
}

TEST(FlipRates, FiniteAndNonNegativeEverywhere) {
  MagnetSpec magnet{200, 0.0, 1.0};
  BathSpec b;
  for (int k = 0; k <= magnet.N; ++k) {
    const auto r = flip_rates(magnet, b, SpinZ::down, 0.3, magnet.m_at(k));
    EXPECT_TRUE(std::isfinite(r.up) && r.up >= 0.0);
    EXPECT_TRUE(std::isfinite(r.down) && r.down >= 0.0);
  }
}

// Column sums of the rate part: loss on the diagonal balances the gain the
// neighbours receive.
double worst_column_sum(const BlockGenerator& gen) {
  double worst = 0.0;
  const std::size_t n = gen.size();
  for (std::size_t j = 0; j < n; ++j) {
    double s = gen.diagonal()[j].real();
    if (j + 1 < n) s += gen.from_below()[j + 1];
    if (j > 0) s += gen.from_above()[j - 1];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

TEST(BuildGenerator, SameSidesIsAStochasticRateMatrix) {
  MagnetSpec magnet{200, 0.0, 1.0};
  BathSpec b;
  for (SpinZ s : {SpinZ::up, SpinZ::down}) {
    const auto gen = build_generator(magnet, b, s, s, 0.1, 0.1);
    for (const auto& d : gen.diagonal()) EXPECT_EQ(d.imag(), 0.0);
    EXPECT_LT(worst_column_sum(gen), 1e-14);
  }
}

TEST(BuildGenerator, OppositeSpinPhase) {
  MagnetSpec magnet{4, 0.0, 1.0};
  BathSpec b;
  const auto gen = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1);
  EXPECT_NEAR(gen.diagonal()[3].imag(), 0.4, 1e-15);  // m = 0.5
}

TEST(BuildGenerator, NoBathMeansPureDephasing) {
  MagnetSpec magnet{50, 0.0, 1.0};
  BathSpec b;
  b.gamma = 0.0;
  const auto gen = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1);
  for (std::size_t k = 0; k < gen.size(); ++k) {
    EXPECT_EQ(gen.diagonal()[k].real(), 0.0);
    EXPECT_EQ(gen.from_below()[k], 0.0);
    EXPECT_EQ(gen.from_above()[k], 0.0);
    EXPECT_NEAR(gen.diagonal()[k].imag(), 2 * 0.1 * 50 * magnet.m_at(k), 1e-12);
  }
}

TEST(BuildGenerator, OffdiagModes) {
  MagnetSpec magnet{40, 0.0, 1.0};
  BathSpec b;
  const auto mixed = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1, OffdiagBath::mixed);
  const auto loss = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1, OffdiagBath::loss_only);
  const auto off = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1, OffdiagBath::off);
  double gain = 0.0;
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    gain += mixed.from_below()[k] + mixed.from_above()[k];
    EXPECT_EQ(loss.from_below()[k], 0.0);
    EXPECT_EQ(loss.from_above()[k], 0.0);
    EXPECT_EQ(loss.diagonal()[k], mixed.diagonal()[k]);
    EXPECT_EQ(off.diagonal()[k].real(), 0.0);
    EXPECT_EQ(off.diagonal()[k].imag(), mixed.diagonal()[k].imag());
  }
  EXPECT_GT(gain, 0.0);
  // Diagonal blocks always get the exact rate matrix.
  EXPECT_EQ(build_generator(magnet, b, SpinZ::up, SpinZ::up, 0.1, 0.1, OffdiagBath::off),
            build_generator(magnet, b, SpinZ::up, SpinZ::up, 0.1, 0.1, OffdiagBath::mixed));
}

TEST(BuildGenerator, SwappedSidesAreConjugate) {
  MagnetSpec magnet{30, 0.0, 1.0};
  BathSpec b;
  const auto ud = build_generator(magnet, b, SpinZ::up, SpinZ::down, 0.1, 0.1);
  const auto du = build_generator(magnet, b, SpinZ::down, SpinZ::up, 0.1, 0.1);
  EXPECT_TRUE(ud.is_conjugate_of(du));
  EXPECT_FALSE(ud.is_conjugate_of(ud));
}

TEST(BlockGenerator, ApplyMatchesBands) {
  BlockGenerator gen({{1, 2}, {3, -1}, {0, 0.5}}, {0, 2, 4}, {5, 6, 0});
  std::vector<cplx> x = {{1, 0}, {0, 1}, {2, -1}}, out(3);
  gen.apply(x, out);
  EXPECT_EQ(out[0], cplx(1, 2) * x[0] + 5.0 * x[1]);
  EXPECT_EQ(out[1], cplx(3, -1) * x[1] + 2.0 * x[0] + 6.0 * x[2]);
  EXPECT_EQ(out[2], cplx(0, 0.5) * x[2] + 4.0 * x[1]);
}

}  // namespace
}  // namespace cwsim
