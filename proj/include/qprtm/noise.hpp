#pragma once

// Additive complex Gaussian noise on measurement matrices.
// Stream: std::mt19937_64 seeded with `seed`; each entry draws one Box-Muller
// pair from two 53-bit uniforms, real part first. Entries are visited
// receiver-major (all modes of receiver 0, then receiver 1, ...).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

#include "qprtm/errors.hpp"
#include "qprtm/measurement.hpp"

namespace qprtm {

struct NoiseReport {
  double mu = 0.0;
  double sigma = 0.0;
  double signal_level = 0.0;  // sqrt((1 / (N_r |B|)) sum |U|^2)
  double noise_level = 0.0;   // same for V
  std::uint64_t seed = 0;
};

/// Portable standard-normal pairs.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  std::pair<double, double> pair() {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  // (0, 1] with 53 random bits
  double uniform_open() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 eng_;
};

inline double l2_level(const std::vector<cplx>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

/// U + (sigma / sqrt 2)(e1 + i e2) with sigma = mu max|U|.
inline std::pair<MeasurementSet, NoiseReport> add_noise(const MeasurementSet& meas, double mu, std::uint64_t seed) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw PreconditionError("noise level mu must be finite and >= 0");
  NoiseReport rep;
  rep.mu = mu;
  rep.seed = seed;
  rep.sigma = mu * max_abs(meas.values);
  rep.signal_level = l2_level(meas.values);
  MeasurementSet noisy = meas;
  if (mu == 0.0) return {noisy, rep};
  GaussianStream g(seed);
  const double s = rep.sigma / std::numbers::sqrt2;
  std::vector<cplx> v(meas.values.size());
  for (std::size_t r = 0; r < meas.receivers; ++r)
    for (std::size_t c = 0; c < meas.columns(); ++c) {
      const auto [e1, e2] = g.pair();
      const std::size_t i = r * meas.columns() + c;
      v[i] = cplx(s * e1, s * e2);
      noisy.values[i] += v[i];
    }
  rep.noise_level = l2_level(v);
  noisy.provenance += ";noise(mu=" + fmt17(mu) + ",seed=" + std::to_string(seed) + ")";
  return {noisy, rep};
}

}  // namespace qprtm
