#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qprtm/modes.hpp"

using namespace qprtm;

namespace {

constexpr double kPi = std::numbers::pi;

GratingParams example1(double theta = kPi / 2) { return {2 * kPi, 5.2 * kPi, theta}; }

}  // namespace

TEST(Modes, PropagatingSetOfExample1) {
  const auto m = build_mode_set(example1(), 30);
  EXPECT_EQ(m.first_propagating(), -16);
  EXPECT_EQ(m.last_propagating(), 16);
  EXPECT_EQ(m.propagating_count(), 33u);
  EXPECT_EQ(m.evanescent().size(), 28u);
}

TEST(Modes, BetaBranches) {
  const auto m = build_mode_set(example1(), 30);
  EXPECT_DOUBLE_EQ(m.beta_n(0).real(), 5.2 * kPi);
  EXPECT_EQ(m.beta_n(0).imag(), 0.0);
  const double k = 5.2 * kPi;
  EXPECT_EQ(m.beta_n(17).real(), 0.0);
  EXPECT_NEAR(m.beta_n(17).imag(), std::sqrt(17.0 * 17.0 - k * k), 1e-13);
}

TEST(Modes, AlphaLadder) {
  const auto p = example1(kPi / 2 + 3 * kPi / 16);
  const auto m = build_mode_set(p, 30);
  for (long n = -30; n <= 30; ++n) EXPECT_NEAR(m.alpha_n(n), p.alpha() + n, 1e-13);
}

TEST(Modes, SignDichotomyOfIBeta) {
  const auto m = build_mode_set(example1(kPi / 2 + kPi / 16), 24);
  const cplx I(0.0, 1.0);
  for (long n = -24; n <= 24; ++n) {
    const cplx ib = I * m.beta_n(n);
    if (m.is_propagating(n)) {
      EXPECT_EQ(std::conj(ib), -ib);
      EXPECT_GT(m.beta_n(n).real(), 0.0);
    } else {
      EXPECT_EQ(std::conj(ib), ib);
      EXPECT_GT(m.beta_n(n).imag(), 0.0);
    }
  }
}

TEST(Modes, PropagatingSetSymmetricAtNormalIncidence) {
  const auto m = build_mode_set({2 * kPi, 4.9, kPi / 2}, 8);
  EXPECT_EQ(m.first_propagating(), -m.last_propagating());
}

TEST(Modes, WoodsAnomaly) {
  EXPECT_TRUE(check_woods_anomaly(example1(), 30).ok);
  const auto bad = check_woods_anomaly({2 * kPi, 5.0, kPi / 2}, 10);
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(std::abs(bad.offending_index), 5);
  EXPECT_TRUE(check_woods_anomaly({2 * kPi, 5.0 + 2 * kWoodMargin * 5.0, kPi / 2}, 10).ok);
  try {
    build_mode_set({2 * kPi, 5.0, kPi / 2}, 10);
    FAIL() << "expected WoodAnomalyError";
  } catch (const WoodAnomalyError& e) {
    EXPECT_EQ(std::abs(e.offending_index()), 5);
  }
}

TEST(Modes, RejectsShortTruncation) {
  EXPECT_THROW(build_mode_set(example1(), 10), PreconditionError);
  EXPECT_THROW(build_mode_set({2 * kPi, 1.0, 0.0}, 4), PreconditionError);
  EXPECT_THROW(build_mode_set({-1.0, 1.0, 1.0}, 4), PreconditionError);
}

TEST(Modes, IncidentWave) {
  const auto p = example1(kPi / 2 + 2 * kPi / 16);
  const auto m = build_mode_set(p, 30);
  EXPECT_EQ(incident_wave(build_mode_set(example1(), 30), 0, {0, 0}), cplx(1.0, 0.0));
  const Point z{0.37, -1.2};
  for (long n : {-16L, -3L, 0L, 5L, 15L}) {
    if (!m.is_propagating(n)) continue;
    const cplx a = incident_wave(m, n, z);
    EXPECT_NEAR(std::abs(a), 1.0, 1e-15);
    const cplx b = incident_wave(m, n, {z.x1 + p.period, z.x2});
    EXPECT_NEAR(std::abs(b - std::polar(1.0, p.period * p.alpha()) * a), 0.0, 1e-12);
  }
  EXPECT_THROW(incident_wave(m, 23, z), PreconditionError);
}

TEST(Modes, RayleighSingleModeExtraction) {
  const auto m = build_mode_set(example1(), 30);
  for (double h : {0.5, 7.0}) {
    auto w = RayleighCoefficients::zeros(Side::upper, 30);
    w[1] = 1.0;
    const auto back = rayleigh_coefficients(synthesize_trace(w, h, 101, m), h, Side::upper, m);
    // evanescent amplitudes are recovered through e^{|beta| h}, which amplifies roundoff
    for (long n = -30; n <= 30; ++n) {
      const double tol = m.is_propagating(n) ? 1e-12 : 1e-14 * std::exp(std::abs(m.beta_n(n)) * h);
      EXPECT_LT(std::abs(back[n] - (n == 1 ? 1.0 : 0.0)), tol) << n << " h=" << h;
    }
  }
}

TEST(Modes, RayleighZeroSamples) {
  const auto m = build_mode_set(example1(), 30);
  const std::vector<cplx> z(101);
  const auto w = rayleigh_coefficients(z, 7.0, Side::lower, m);
  for (auto v : w.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(Modes, RayleighRoundTrip) {
  const auto m = build_mode_set(example1(kPi / 2 - kPi / 16), 30);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (Side side : {Side::upper, Side::lower}) {
    auto w = RayleighCoefficients::zeros(side, 30);
    for (long n = m.first_propagating(); n <= m.last_propagating(); ++n) w[n] = {nd(rng), nd(rng)};
    for (long n : {-30L, 25L, 30L}) w[n] = {nd(rng), nd(rng)};
    const auto back = rayleigh_coefficients(synthesize_trace(w, 0.5, 101, m), 0.5, side, m);
    for (long n = -30; n <= 30; ++n)
      EXPECT_LT(std::abs(back[n] - w[n]), 1e-12 * std::exp(std::abs(m.beta_n(n)) * 0.5)) << n;
  }
}

TEST(Modes, RayleighRejectsAliasing) {
  const auto m = build_mode_set(example1(), 30);
  const std::vector<cplx> s(40);
  EXPECT_THROW(rayleigh_coefficients(s, 7.0, Side::upper, m), PreconditionError);
}

TEST(Modes, Flux) {
  const auto m = build_mode_set(example1(), 30);
  auto up = RayleighCoefficients::zeros(Side::upper, 30);
  auto lo = RayleighCoefficients::zeros(Side::lower, 30);
  EXPECT_EQ(propagating_flux(up, lo, m), 0.0);
  up[0] = 1.0;
  EXPECT_NEAR(propagating_flux(up, lo, m), 2 * kPi * 5.2 * kPi, 1e-12);
}

TEST(Modes, FluxPhaseInvariant) {
  const auto m = build_mode_set(example1(kPi / 2 + kPi / 8), 30);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  auto up = RayleighCoefficients::zeros(Side::upper, 30);
  auto lo = RayleighCoefficients::zeros(Side::lower, 30);
  for (long n = -30; n <= 30; ++n) {
    up[n] = {nd(rng), nd(rng)};
    lo[n] = {nd(rng), nd(rng)};
  }
  const double f0 = propagating_flux(up, lo, m);
  const cplx rot = std::polar(1.0, 0.81);
  for (auto& v : up.values) v *= rot;
  for (auto& v : lo.values) v *= rot;
  EXPECT_NEAR(propagating_flux(up, lo, m), f0, 1e-12 * f0);
}

TEST(Modes, DefaultTruncationMeetsDecayTarget) {
  const auto p = example1();
  const int nt = default_truncation(p, 6.2);
  const auto m = build_mode_set(p, nt);
  EXPECT_LT(std::exp(-std::abs(m.beta_n(nt)) * 6.2), 1e-14);
  EXPECT_LT(std::exp(-std::abs(m.beta_n(-nt)) * 6.2), 1e-14);
  EXPECT_GE(nt, 2 * static_cast<int>(std::ceil(5.2)));
}
