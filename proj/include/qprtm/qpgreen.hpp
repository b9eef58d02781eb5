#pragma once

// Quasi-periodic Green's function G(x, y) = (i/4) sum_m e^{i m Lambda alpha} H0(k |x - y - m Lambda e1|)
// and its gradient, by three routes:
//   lattice  : smoothly windowed image sum (slow; reference only)
//   spectral : Rayleigh mode series, requires x2 != y2
//   ewald    : Gaussian-screened split into spatial and spectral sums
// plus the smooth remainder G - (i/4) H0(k|x - y|) used for singular quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/specfun.hpp"

namespace qprtm {

enum class GreenRoute { lattice, spectral, ewald, automatic };

struct GreenEvalPlan {
  GreenRoute route = GreenRoute::automatic;
  double spectral_tolerance = 1e-14;
  /// Ewald screening parameter; 0 selects max(sqrt(pi)/Lambda, k/4).
  double ewald_split = 0.0;
  long lattice_terms = 10000;
  /// |x2 - y2| below d_switch_fraction * Lambda never uses the spectral route.
  double d_switch_fraction = 0.05;
};

/// Value and Cartesian gradient with respect to the first argument x.
struct GreenValue {
  cplx value;
  cplx d1;
  cplx d2;
};

inline double default_ewald_split(double period, double k) {
  return std::max(std::sqrt(std::numbers::pi) / period, 0.25 * k);
}

namespace detail {

inline constexpr double kSpatialCutoff = 6.2;   // drop images with rho*E beyond this
inline constexpr double kSpectralCutoff = 12.0; // keep modes with |gamma_n| <= this * E
inline constexpr int kEwaldOrders = 48;
inline constexpr double kCoincidenceTol = 1e-12;
inline constexpr double kRemainderOrigin = 1e-9;

// Smooth cutoff: 1 on [0, c], 0 on [1, inf), C-infinity in between.
inline double lattice_window(double t, double c = 0.5) {
  if (t <= c) return 1.0;
  if (t >= 1.0) return 0.0;
  const double u = (t - c) / (1.0 - c);
  return std::exp(2.0 * std::exp(-1.0 / u) / (u - 1.0));
}

}  // namespace detail

/// Evaluator bound to one (Lambda, k, alpha). Immutable and safe to share across threads.
class QpGreen {
 public:
  QpGreen(const ModeSet& modes, GreenEvalPlan plan = {})
      : modes_(modes), plan_(plan), period_(modes.period()), k_(modes.wavenumber()),
        alpha_(modes.alpha()) {
    split_ = plan_.ewald_split > 0.0 ? plan_.ewald_split : default_ewald_split(period_, k_);
    const double ratio = k_ * k_ / (4.0 * split_ * split_);
    coef_[0] = 1.0;
    for (int q = 1; q < detail::kEwaldOrders; ++q) coef_[q] = coef_[q - 1] * ratio / q;
    double tail = 0.0;
    for (int q = 1; q < detail::kEwaldOrders; ++q) tail += coef_[q] / q;
    origin_limit_ = (std::numbers::egamma + 2.0 * std::log(k_ / (2.0 * split_)) + tail) /
                    (4.0 * std::numbers::pi);

    const double gmax = detail::kSpectralCutoff * split_;
    const double amax = std::sqrt(gmax * gmax + k_ * k_);
    const double step = 2.0 * std::numbers::pi / period_;
    const long nlo = static_cast<long>(std::floor((-amax - alpha_) / step));
    const long nhi = static_cast<long>(std::ceil((amax - alpha_) / step));
    for (long n = nlo; n <= nhi; ++n) {
      const double an = modes.alpha_any(n);
      const double g2 = an * an - k_ * k_;
      SpectralTerm t;
      t.alpha = an;
      // gamma = sqrt(alpha^2 - k^2), equal to -i beta on the propagating branch
      t.gamma = g2 >= 0.0 ? cplx(std::sqrt(g2), 0.0) : cplx(0.0, -std::sqrt(-g2));
      t.screen = -g2 / (4.0 * split_ * split_);
      spectral_.push_back(t);
    }
  }

  const ModeSet& modes() const { return modes_; }
  const GreenEvalPlan& plan() const { return plan_; }
  double ewald_split() const { return split_; }

  /// G(x, y) with gradient in x, dispatched per the plan.
  GreenValue eval(Point x, Point y) const {
    const double X = x.x1 - y.x1, Y = x.x2 - y.x2;
    check_collision(X, Y);
    switch (plan_.route) {
      case GreenRoute::lattice: return lattice(X, Y);
      case GreenRoute::spectral: return spectral(X, Y);
      case GreenRoute::ewald: return ewald(X, Y);
      case GreenRoute::automatic:
      default:
        return std::abs(Y) >= plan_.d_switch_fraction * period_ ? spectral(X, Y) : ewald(X, Y);
    }
  }

  /// Spectral mode series; throws PreconditionError at Y = 0.
  GreenValue spectral(double X, double Y) const {
    if (!(std::abs(Y) > 0.0)) throw PreconditionError("spectral route requires x2 != y2");
    const double ay = std::abs(Y);
    const double sg = Y > 0.0 ? 1.0 : -1.0;
    const cplx I(0.0, 1.0);
    cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
    double scale = 0.0;
    auto add = [&](long n) {
      const double an = modes_.alpha_any(n);
      const cplx bn = modes_.beta_any(n);
      const cplx e = std::exp(I * (an * X) + I * bn * ay);
      s0 += e / bn;
      s1 += an * e / bn;
      s2 += e;
      const double mag = std::abs(e);
      scale += mag;
      return mag;
    };
    add(0);
    const long cap = 10L * std::max(modes_.truncation(), 1);
    const double tol = plan_.spectral_tolerance;
    for (int dir : {-1, 1}) {
      for (long m = 1; m <= cap; ++m) {
        const long n = dir * m;
        const double mag = add(n);
        if (!modes_.is_propagating(n) && std::abs(modes_.alpha_any(n)) > k_ &&
            mag < tol * scale)
          break;
      }
    }
    const double c = 1.0 / (2.0 * period_);
    return {I * c * s0, -c * s1, -c * sg * s2};
  }

  /// Ewald split sum.
  GreenValue ewald(double X, double Y) const {
    GreenValue s = ewald_spectral(X, Y);
    const GreenValue p = ewald_spatial(X, Y, false);
    return {s.value + p.value, s.d1 + p.d1, s.d2 + p.d2};
  }

  /// Smoothly windowed image sum with the plan's lattice_terms.
  GreenValue lattice(double X, double Y) const {
    const long M = std::max(plan_.lattice_terms, 1L);
    const cplx I(0.0, 1.0);
    cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (long m = -M; m <= M; ++m) {
      const double w = detail::lattice_window(std::abs(static_cast<double>(m)) / M);
      if (w == 0.0) continue;
      const double dx = X - m * period_;
      const double r = std::hypot(dx, Y);
      const auto h = specfun::hankel1(k_ * r);
      const cplx ph = w * std::polar(1.0, m * period_ * alpha_);
      s0 += ph * h.order0;
      const cplx g = -ph * k_ * h.order1 / r;
      s1 += g * dx;
      s2 += g * Y;
    }
    return {0.25 * I * s0, 0.25 * I * s1, 0.25 * I * s2};
  }

  /// Smooth remainder R = G - (i/4) H0(k|(X,Y)|) with gradient, finite at the origin.
  GreenValue remainder(double X, double Y) const {
    GreenValue s = ewald_spectral(X, Y);
    const GreenValue p = ewald_spatial(X, Y, true);
    s.value += p.value;
    s.d1 += p.d1;
    s.d2 += p.d2;
    const double r = std::hypot(X, Y);
    if (r < detail::kRemainderOrigin * period_) {
      s.value += cplx(origin_limit_, -0.25);
      return s;
    }
    const double x = r * r * split_ * split_;
    std::array<double, detail::kEwaldOrders + 1> en{};
    specfun::expint_table(x, en);
    double v = 0.0, dv = 0.0;
    for (int q = 0; q < detail::kEwaldOrders; ++q) {
      v += coef_[q] * en[q + 1];
      dv += coef_[q] * en[q];
    }
    const auto h = specfun::hankel1(k_ * r);
    const cplx I(0.0, 1.0);
    s.value += v / (4.0 * std::numbers::pi) - 0.25 * I * h.order0;
    // d/dr of the radial part, divided by r
    const cplx g = -dv * 2.0 * split_ * split_ / (4.0 * std::numbers::pi) + 0.25 * I * k_ * h.order1 / r;
    s.d1 += g * X;
    s.d2 += g * Y;
    return s;
  }

  /// G(y, z) - conj(G(z, y)), finite on the whole plane.
  cplx minus_conj_swapped(Point y, Point z) const {
    double X = y.x1 - z.x1;
    const double Y = y.x2 - z.x2;
    const double m0 = std::round(X / period_);
    X -= m0 * period_;
    const cplx phase = std::polar(1.0, m0 * period_ * alpha_);
    const double r = std::hypot(X, Y);
    const double j0 = specfun::bessel_j(k_ * r).order0;
    const cplx d = cplx(0.0, 0.5 * j0) + remainder(X, Y).value - std::conj(remainder(-X, -Y).value);
    return phase * d;
  }

 private:
  struct SpectralTerm {
    double alpha;
    cplx gamma;
    double screen;  // -gamma^2 / (4 E^2)
  };

  void check_collision(double X, double Y) const {
    const double tol = detail::kCoincidenceTol * period_;
    if (std::abs(Y) > tol) return;
    const double rx = X - std::round(X / period_) * period_;
    if (std::abs(rx) <= tol) throw SingularityError("Green's function evaluated at a source image");
  }

  GreenValue ewald_spectral(double X, double Y) const {
    const double E = split_;
    const cplx I(0.0, 1.0);
    cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (const auto& t : spectral_) {
      const cplx a = t.gamma / (2.0 * E) + Y * E;
      const cplx b = t.gamma / (2.0 * E) - Y * E;
      const double g = std::exp(t.screen - Y * Y * E * E);
      cplx P, Q;
      if (a.real() >= 0.0) {
        P = specfun::erfc_scaled(a) * g;
      } else {
        P = 2.0 * std::exp(t.gamma * Y) - specfun::erfc_scaled(-a) * g;
      }
      if (b.real() >= 0.0) {
        Q = specfun::erfc_scaled(b) * g;
      } else {
        Q = 2.0 * std::exp(-t.gamma * Y) - specfun::erfc_scaled(-b) * g;
      }
      const cplx ph = std::polar(1.0, t.alpha * X);
      const cplx v = ph * (P + Q) / t.gamma;
      s0 += v;
      s1 += I * t.alpha * v;
      s2 += ph * (P - Q);
    }
    const double c = 1.0 / (4.0 * period_);
    return {c * s0, c * s1, c * s2};
  }

  GreenValue ewald_spatial(double X, double Y, bool skip_central) const {
    const double E = split_;
    const double reach = detail::kSpatialCutoff / E;
    if (std::abs(Y) > reach) return {0.0, 0.0, 0.0};
    const long mlo = static_cast<long>(std::ceil((X - reach) / period_));
    const long mhi = static_cast<long>(std::floor((X + reach) / period_));
    std::array<double, detail::kEwaldOrders + 1> en{};
    cplx s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (long m = mlo; m <= mhi; ++m) {
      if (skip_central && m == 0) continue;
      const double dx = X - m * period_;
      const double x = (dx * dx + Y * Y) * E * E;
      if (x > detail::kSpatialCutoff * detail::kSpatialCutoff) continue;
      specfun::expint_table(x, en);
      double v = 0.0, dv = 0.0;
      for (int q = 0; q < detail::kEwaldOrders; ++q) {
        v += coef_[q] * en[q + 1];
        dv += coef_[q] * en[q];
      }
      const cplx ph = std::polar(1.0, m * period_ * alpha_);
      s0 += ph * v;
      const cplx g = -ph * dv * 2.0 * E * E;
      s1 += g * dx;
      s2 += g * Y;
    }
    const double c = 1.0 / (4.0 * std::numbers::pi);
    return {c * s0, c * s1, c * s2};
  }

  ModeSet modes_;
  GreenEvalPlan plan_;
  double period_, k_, alpha_;
  double split_ = 0.0;
  double origin_limit_ = 0.0;
  std::array<double, detail::kEwaldOrders> coef_{};
  std::vector<SpectralTerm> spectral_;
};

/// G(x, y).
inline cplx green(Point x, Point y, const ModeSet& modes, const GreenEvalPlan& plan = {}) {
  return QpGreen(modes, plan).eval(x, y).value;
}

/// dG(x, y)/dx2.
inline cplx green_grad_x2(Point x, Point y, const ModeSet& modes, const GreenEvalPlan& plan = {}) {
  return QpGreen(modes, plan).eval(x, y).d2;
}

/// G(y, z) - conj(G(z, y)).
inline cplx green_minus_conj_swapped(Point y, Point z, const ModeSet& modes) {
  return QpGreen(modes).minus_conj_swapped(y, z);
}

}  // namespace qprtm
