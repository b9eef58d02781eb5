#pragma once

// Grating parameters and the Rayleigh mode machinery: alpha_n, beta_n, the
// propagating set B and evanescent set U, incident plane waves, extraction of
// Rayleigh coefficients from line samples, and the propagating energy flux.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qprtm/errors.hpp"

namespace qprtm {

using cplx = std::complex<double>;

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Point operator-(Point a, Point b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Point operator*(double s, Point a) { return {s * a.x1, s * a.x2}; }
inline double norm(Point a) { return std::hypot(a.x1, a.x2); }

enum class Side { upper, lower };

inline const char* to_string(Side s) { return s == Side::upper ? "upper" : "lower"; }

inline Side parse_side(const std::string& s) {
  if (s == "upper") return Side::upper;
  if (s == "lower") return Side::lower;
  throw ConfigError("unknown side '" + s + "' (expected upper or lower)");
}

/// Period, wavenumber and incidence angle of a grating problem.
struct GratingParams {
  double period = 2.0 * std::numbers::pi;
  double wavenumber = 1.0;
  double theta = 0.5 * std::numbers::pi;

  double alpha() const { return wavenumber * std::cos(theta); }

  void validate() const {
    if (!(period > 0.0) || !std::isfinite(period)) throw PreconditionError("period must be > 0");
    if (!(wavenumber > 0.0) || !std::isfinite(wavenumber))
      throw PreconditionError("wavenumber must be > 0");
    if (!(theta > 0.0 && theta < std::numbers::pi))
      throw PreconditionError("incidence angle must lie in (0, pi)");
  }
};

/// Relative Wood's-anomaly margin; the absolute threshold is this times k.
inline constexpr double kWoodMargin = 1e-6;

namespace detail {

inline double mode_alpha(double alpha, double period, long n) {
  return alpha + 2.0 * std::numbers::pi * static_cast<double>(n) / period;
}

inline cplx mode_beta(double k, double alpha_n) {
  const double a = std::abs(alpha_n);
  if (a < k) return {std::sqrt((k - a) * (k + a)), 0.0};
  return {0.0, std::sqrt((a - k) * (a + k))};
}

}  // namespace detail

struct WoodCheck {
  bool ok = true;
  long offending_index = 0;
};

/// Scans n in [-N_t, N_t] for | |alpha_n| - k | <= kWoodMargin * k.
inline WoodCheck check_woods_anomaly(const GratingParams& params, int truncation) {
  const double k = params.wavenumber;
  const double alpha = params.alpha();
  const double eps = kWoodMargin * k;
  for (long n = 0; n <= truncation; ++n) {
    for (long s : {-n, n}) {
      const double an = detail::mode_alpha(alpha, params.period, s);
      if (std::abs(std::abs(an) - k) <= eps) return {false, s};
      if (n == 0) break;
    }
  }
  return {};
}

/// Retained modes n = -N_t..N_t with their alpha_n, beta_n and the B/U split.
/// B is the contiguous index range [first_propagating, last_propagating].
class ModeSet {
 public:
  ModeSet(const GratingParams& params, int truncation)
      : params_(params), alpha_(params.alpha()), truncation_(truncation) {
    const auto count = static_cast<std::size_t>(2 * truncation + 1);
    alpha_n_.resize(count);
    beta_n_.resize(count);
    first_ = truncation + 1;
    last_ = -truncation - 1;
    for (long n = -truncation; n <= truncation; ++n) {
      const double an = detail::mode_alpha(alpha_, params.period, n);
      alpha_n_[slot(n)] = an;
      beta_n_[slot(n)] = detail::mode_beta(params.wavenumber, an);
      if (std::abs(an) < params.wavenumber) {
        first_ = std::min<long>(first_, n);
        last_ = std::max<long>(last_, n);
      }
    }
  }

  const GratingParams& params() const { return params_; }
  double period() const { return params_.period; }
  double wavenumber() const { return params_.wavenumber; }
  double alpha() const { return alpha_; }
  int truncation() const { return truncation_; }
  std::size_t size() const { return alpha_n_.size(); }

  /// Storage slot of mode n (n in [-N_t, N_t]).
  std::size_t slot(long n) const { return static_cast<std::size_t>(n + truncation_); }
  bool retained(long n) const { return n >= -truncation_ && n <= truncation_; }

  double alpha_n(long n) const { return alpha_n_[slot(n)]; }
  cplx beta_n(long n) const { return beta_n_[slot(n)]; }
  /// alpha_n / beta_n for any integer n, retained or not.
  double alpha_any(long n) const { return detail::mode_alpha(alpha_, params_.period, n); }
  cplx beta_any(long n) const { return detail::mode_beta(params_.wavenumber, alpha_any(n)); }

  long first_propagating() const { return first_; }
  long last_propagating() const { return last_; }
  std::size_t propagating_count() const {
    return last_ >= first_ ? static_cast<std::size_t>(last_ - first_ + 1) : 0;
  }
  bool is_propagating(long n) const { return n >= first_ && n <= last_; }

  std::vector<long> propagating() const {
    std::vector<long> b;
    for (long n = first_; n <= last_; ++n) b.push_back(n);
    return b;
  }
  std::vector<long> evanescent() const {
    std::vector<long> u;
    for (long n = -truncation_; n <= truncation_; ++n)
      if (!is_propagating(n)) u.push_back(n);
    return u;
  }

  /// min |beta_n| over the retained evanescent modes.
  double evanescent_gap() const {
    double g = INFINITY;
    for (long n = -truncation_; n <= truncation_; ++n)
      if (!is_propagating(n)) g = std::min(g, std::abs(beta_n(n)));
    return g;
  }

 private:
  GratingParams params_;
  double alpha_;
  int truncation_;
  std::vector<double> alpha_n_;
  std::vector<cplx> beta_n_;
  long first_ = 0;
  long last_ = -1;
};

/// Smallest N with exp(-|beta_N| d_min) < 1e-14 on both sides, never below
/// 2 ceil(Lambda k / 2 pi).
inline int default_truncation(const GratingParams& params, double d_min) {
  const int floor_n = 2 * static_cast<int>(std::ceil(params.period * params.wavenumber /
                                                      (2.0 * std::numbers::pi)));
  if (!(d_min > 0.0)) return std::max(floor_n, 2);
  const double target = -std::log(1e-14) / d_min;
  const double alpha = params.alpha();
  int n = std::max(floor_n, 2);
  for (;; ++n) {
    const double lo = std::abs(detail::mode_beta(params.wavenumber,
                                                 detail::mode_alpha(alpha, params.period, -n)));
    const double hi = std::abs(detail::mode_beta(params.wavenumber,
                                                 detail::mode_alpha(alpha, params.period, n)));
    if (std::min(lo, hi) > target) return n;
    if (n > 100000) return n;
  }
}

/// Validated mode set. Throws WoodAnomalyError on a Wood's anomaly and
/// PreconditionError when the truncation does not contain every propagating mode.
inline ModeSet build_mode_set(const GratingParams& params, int truncation) {
  params.validate();
  const int need = static_cast<int>(std::ceil(params.period * params.wavenumber /
                                              (2.0 * std::numbers::pi))) + 2;
  if (truncation < need)
    throw PreconditionError("truncation " + std::to_string(truncation) + " below required " +
                            std::to_string(need));
  const auto wood = check_woods_anomaly(params, truncation);
  if (!wood.ok)
    throw WoodAnomalyError("Wood's anomaly at mode n=" + std::to_string(wood.offending_index),
                           wood.offending_index);
  ModeSet ms(params, truncation);
  const double k = params.wavenumber;
  if (std::abs(ms.alpha_n(-truncation)) < k || std::abs(ms.alpha_n(truncation)) < k)
    throw PreconditionError("truncation does not contain the full propagating set");
  return ms;
}

/// Plane wave exp(i alpha_n z1 - i beta_n z2) for a propagating mode n.
inline cplx incident_wave(const ModeSet& modes, long n, Point z) {
  if (!modes.retained(n) || !modes.is_propagating(n))
    throw PreconditionError("incident_wave: mode " + std::to_string(n) + " is not propagating");
  const double b = modes.beta_n(n).real();
  return std::polar(1.0, modes.alpha_n(n) * z.x1 - b * z.x2);
}

/// Abscissas x_r = -Lambda/2 + r Lambda / N, r = 0..N-1.
inline std::vector<double> receiver_abscissas(double period, std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t r = 0; r < count; ++r)
    x[r] = -0.5 * period + period * static_cast<double>(r) / static_cast<double>(count);
  return x;
}

/// Rayleigh amplitudes w_n of one side, stored for n = -N_t..N_t.
struct RayleighCoefficients {
  Side side = Side::upper;
  int truncation = 0;
  std::vector<cplx> values;

  cplx operator[](long n) const { return values[static_cast<std::size_t>(n + truncation)]; }
  cplx& operator[](long n) { return values[static_cast<std::size_t>(n + truncation)]; }

  static RayleighCoefficients zeros(Side side, int truncation) {
    return {side, truncation, std::vector<cplx>(static_cast<std::size_t>(2 * truncation + 1))};
  }
};

/// Phase exp(+-i beta_n x2) of mode n on the side's expansion, evaluated at |x2| = h.
inline cplx rayleigh_phase(const ModeSet& modes, long n, double h) {
  // upper: exp(i beta h), lower: exp(-i beta (-h)) -- identical.
  return std::exp(cplx(0.0, 1.0) * modes.beta_n(n) * h);
}

/// Samples of sum_n w_n e^{i alpha_n x1 +- i beta_n x2} on Gamma_{+-h} at receiver_abscissas.
inline std::vector<cplx> synthesize_trace(const RayleighCoefficients& w, double h,
                                          std::size_t count, const ModeSet& modes) {
  const auto xs = receiver_abscissas(modes.period(), count);
  std::vector<cplx> out(count);
  const int nt = std::min(w.truncation, modes.truncation());
  for (std::size_t r = 0; r < count; ++r) {
    cplx acc = 0.0;
    for (long n = -nt; n <= nt; ++n)
      acc += w[n] * rayleigh_phase(modes, n, h) * std::polar(1.0, modes.alpha_n(n) * xs[r]);
    out[r] = acc;
  }
  return out;
}

/// Periodic-trapezoid extraction of the Rayleigh coefficients from samples
/// taken at receiver_abscissas(Lambda, N_s) on Gamma_{+h} (upper) or Gamma_{-h} (lower).
inline RayleighCoefficients rayleigh_coefficients(std::span<const cplx> samples, double h,
                                                  Side side, const ModeSet& modes) {
  const int nt = modes.truncation();
  const std::size_t ns = samples.size();
  if (ns <= static_cast<std::size_t>(2 * nt))
    throw PreconditionError("rayleigh_coefficients: " + std::to_string(ns) +
                            " samples alias modes up to |n|=" + std::to_string(nt));
  const auto xs = receiver_abscissas(modes.period(), ns);
  auto w = RayleighCoefficients::zeros(side, nt);
  for (long n = -nt; n <= nt; ++n) {
    cplx acc = 0.0;
    const double an = modes.alpha_n(n);
    for (std::size_t r = 0; r < ns; ++r) acc += samples[r] * std::polar(1.0, -an * xs[r]);
    acc /= static_cast<double>(ns);
    w[n] = acc / rayleigh_phase(modes, n, h);
  }
  return w;
}

/// Lambda sum_{n in B} beta_n (|w+_n|^2 + |w-_n|^2).
inline double propagating_flux(const RayleighCoefficients& upper, const RayleighCoefficients& lower,
                               const ModeSet& modes) {
  double acc = 0.0;
  for (long n = modes.first_propagating(); n <= modes.last_propagating(); ++n)
    acc += modes.beta_n(n).real() * (std::norm(upper[n]) + std::norm(lower[n]));
  return modes.period() * acc;
}

}  // namespace qprtm
