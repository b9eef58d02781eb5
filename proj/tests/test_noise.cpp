#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qprtm/noise.hpp"

using namespace qprtm;

namespace {

MeasurementSet synthetic(std::size_t receivers = 101, std::size_t cols = 33) {
  MeasurementSet m;
  m.receivers = receivers;
  m.wavenumber = 5.2 * std::numbers::pi;
  for (std::size_t c = 0; c < cols; ++c) m.modes.push_back(static_cast<long>(c) - 16);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  m.values.resize(receivers * cols);
  for (auto& v : m.values) v = {nd(rng), nd(rng)};
  return m;
}

}  // namespace

TEST(Noise, ZeroLevelIsIdentity) {
  const auto m = synthetic();
  const auto [n, rep] = add_noise(m, 0.0, 5);
  EXPECT_EQ(n.values, m.values);
  EXPECT_EQ(n.provenance, m.provenance);
  EXPECT_EQ(rep.noise_level, 0.0);
  EXPECT_EQ(rep.sigma, 0.0);
}

TEST(Noise, LevelMatchesSigma) {
  const auto m = synthetic();
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto rep = add_noise(m, 0.1, seed).second;
    EXPECT_GE(rep.noise_level / rep.sigma, 0.95);
    EXPECT_LE(rep.noise_level / rep.sigma, 1.05);
  }
}

TEST(Noise, SigmaLinearInMu) {
  const auto m = synthetic();
  const double s1 = add_noise(m, 0.1, 1).second.sigma;
  for (double f : {2.0, 3.0, 6.0}) EXPECT_NEAR(add_noise(m, 0.1 * f, 1).second.sigma, f * s1, 1e-15 * f * s1);
}

TEST(Noise, MeanOverSeedsMatchesSigma) {
  const auto m = synthetic();
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto rep = add_noise(m, 0.2, seed).second;
    acc += rep.noise_level / rep.sigma;
  }
  EXPECT_NEAR(acc / 100.0, 1.0, 0.01);
}

TEST(Noise, DeterministicPerSeedAndDistinctAcrossSeeds) {
  const auto m = synthetic();
  EXPECT_EQ(add_noise(m, 0.3, 42).first.values, add_noise(m, 0.3, 42).first.values);
  EXPECT_NE(add_noise(m, 0.3, 42).first.values, add_noise(m, 0.3, 43).first.values);
}

TEST(Noise, StreamIsReceiverMajorRealFirst) {
  const auto m = synthetic(3, 2);
  const auto noisy = add_noise(m, 0.5, 7).first;
  GaussianStream g(7);
  const double s = 0.5 * max_abs(m.values) / std::numbers::sqrt2;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      const auto [e1, e2] = g.pair();
      EXPECT_EQ(noisy(r, c), m(r, c) + cplx(s * e1, s * e2));
    }
}

TEST(Noise, ProvenanceAndValidation) {
  const auto m = synthetic();
  EXPECT_NE(add_noise(m, 0.1, 9).first.provenance.find("noise(mu="), std::string::npos);
  EXPECT_THROW(add_noise(m, -0.1, 1), PreconditionError);
  EXPECT_THROW(add_noise(m, NAN, 1), PreconditionError);
}
