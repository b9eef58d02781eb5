#pragma once

// Point spread functions F^L, F^U, F^1, F^2 (finite propagating-mode sums) and
// numerical checks of the Helmholtz-Kirchhoff identities built on them.

#include <cmath>
#include <complex>
#include <string>

#include "qprtm/errors.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/qpgreen.hpp"

namespace qprtm {

enum class PsfKind { lower, upper, cosine, sine };

inline cplx psf_eval(PsfKind kind, Point y, Point z, const ModeSet& modes) {
  const double X = y.x1 - z.x1, Y = y.x2 - z.x2;
  cplx acc = 0.0;
  for (long n = modes.first_propagating(); n <= modes.last_propagating(); ++n) {
    const double b = modes.beta_n(n).real();
    const cplx ph = std::polar(1.0, modes.alpha_n(n) * X) / b;
    switch (kind) {
      case PsfKind::lower: acc += ph * std::polar(1.0, -b * Y); break;
      case PsfKind::upper: acc += ph * std::polar(1.0, b * Y); break;
      case PsfKind::cosine: acc += ph * std::cos(b * Y); break;
      case PsfKind::sine: acc += ph * std::sin(b * Y); break;
    }
  }
  return cplx(0.0, 1.0 / (2.0 * modes.period())) * acc;
}

struct HkResult {
  cplx lhs;
  cplx rhs;
  double residual;
};

namespace detail {

inline void check_hk_side(Point y, Point z, double h, Side side) {
  const bool ok = side == Side::lower ? (y.x2 > -h && z.x2 > -h) : (y.x2 < h && z.x2 < h);
  if (!(h > 0.0) || !ok)
    throw PreconditionError(std::string("points must lie strictly on the scene side of the ") +
                            to_string(side) + " measurement line");
}

// Periodic trapezoid over Gamma_{-h} (lower) or Gamma_{+h} (upper) of
// d2 conj(G(x, y)) G(x, z) (first) and d2 G(x, z) conj(G(x, y)) (second).
inline std::pair<cplx, cplx> hk_integrals(Point y, Point z, double h, Side side, const QpGreen& g,
                                          int nq) {
  const double period = g.modes().period();
  const double x2 = side == Side::lower ? -h : h;
  cplx a = 0.0, b = 0.0;
  for (int j = 0; j < nq; ++j) {
    const Point x{-0.5 * period + period * j / nq, x2};
    const GreenValue gy = g.eval(x, y);
    const GreenValue gz = g.eval(x, z);
    a += std::conj(gy.d2) * gz.value;
    b += gz.d2 * std::conj(gy.value);
  }
  const double w = period / nq;
  return {a * w, b * w};
}

}  // namespace detail

inline int default_hk_points(const ModeSet& modes) { return 4 * modes.truncation() + 1; }

/// Trapezoid check of the Helmholtz-Kirchhoff identity on Gamma_{-h} (lower,
/// rhs = F^L) or Gamma_{+h} (upper, rhs = -F^U). quadrature_points <= 0 selects 4 N_t + 1.
inline HkResult hk_verify(Point y, Point z, double h, Side side, const ModeSet& modes,
                          int quadrature_points = 0) {
  detail::check_hk_side(y, z, h, side);
  const int nq = quadrature_points > 0 ? quadrature_points : default_hk_points(modes);
  const QpGreen g(modes);
  const auto [a, b] = detail::hk_integrals(y, z, h, side, g, nq);
  const cplx lhs = a - b;
  const cplx rhs = side == Side::lower ? psf_eval(PsfKind::lower, y, z, modes)
                                       : -psf_eval(PsfKind::upper, y, z, modes);
  return {lhs, rhs, std::abs(lhs - rhs)};
}

struct HalfHkResult {
  cplx measured;
  double bound;
};

/// Half identity remainder: int d2 conj(G(.,y)) G(.,z) minus F^L/2 (lower) or
/// plus F^U/2 (upper), with its a-priori bound.
inline HalfHkResult half_hk_remainder(Point y, Point z, double h, Side side, const ModeSet& modes,
                                      int quadrature_points = 0) {
  detail::check_hk_side(y, z, h, side);
  const int nq = quadrature_points > 0 ? quadrature_points : default_hk_points(modes);
  const QpGreen g(modes);
  const cplx a = detail::hk_integrals(y, z, h, side, g, nq).first;
  const cplx measured = side == Side::lower ? a - 0.5 * psf_eval(PsfKind::lower, y, z, modes)
                                            : a + 0.5 * psf_eval(PsfKind::upper, y, z, modes);
  const double depth = side == Side::lower ? 2.0 * h + y.x2 + z.x2 : 2.0 * h - y.x2 - z.x2;
  const double bd = modes.evanescent_gap();
  const double bound = 2.0 * (std::exp(-bd * depth) / bd + 1.0 / (modes.wavenumber() * depth)) /
                       (4.0 * modes.period());
  return {measured, bound};
}

/// Closed-form evanescent part of the half identity over the retained modes U.
inline cplx half_hk_evanescent_sum(Point y, Point z, double h, Side side, const ModeSet& modes) {
  const double depth = side == Side::lower ? 2.0 * h + y.x2 + z.x2 : 2.0 * h - y.x2 - z.x2;
  cplx acc = 0.0;
  for (long n : modes.evanescent()) {
    const cplx b = modes.beta_n(n);
    acc += cplx(0.0, 1.0) / b * std::polar(1.0, modes.alpha_n(n) * (y.x1 - z.x1)) *
           std::exp(-std::abs(b) * depth);
  }
  const cplx sum = acc / (4.0 * modes.period());
  // upper side: the conjugated factor flips the sign of the collected term
  return side == Side::lower ? sum : -sum;
}

/// |2 F^1(y, z) - (G(y, z) - conj(G(z, y)))|; rejects |y - z| = m Lambda.
inline double bessel_identity_check(Point y, Point z, const ModeSet& modes) {
  const double r = norm(y - z);
  const double period = modes.period();
  const double m = std::round(r / period);
  if (std::abs(r - m * period) <= detail::kCoincidenceTol * period)
    throw PreconditionError("separation |y - z| is an integer multiple of the period");
  const cplx lhs = 2.0 * psf_eval(PsfKind::cosine, y, z, modes);
  return std::abs(lhs - green_minus_conj_swapped(y, z, modes));
}

}  // namespace qprtm
