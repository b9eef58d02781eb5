#pragma once

// Bessel/Hankel functions of orders 0 and 1 for positive real argument, the
// complex scaled complementary error function, and generalized exponential
// integrals. These are the only special functions the periodic Green's
// function machinery needs.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "qprtm/errors.hpp"

namespace qprtm::specfun {

using cplx = std::complex<double>;

struct BesselPair {
  double order0;
  double order1;
};

struct CylKernelPair {
  cplx order0;
  cplx order1;
};

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;

struct BesselJY {
  double j0, j1, y0, y1;
};

// Ascending series, used for x <= 2 where there is no cancellation.
inline BesselJY bessel_series(double x) {
  const double q = 0.25 * x * x;
  double j0 = 0.0, j1 = 0.0, y0s = 0.0, y1s = 0.0;
  double t0 = 1.0;  // (-q)^k / (k!)^2
  double t1 = 1.0;  // (-q)^k / (k!(k+1)!)
  double harmonic = 0.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) {
      t0 *= -q / (double(k) * double(k));
      t1 *= -q / (double(k) * double(k + 1));
      harmonic += 1.0 / k;
    }
    j0 += t0;
    j1 += t1;
    // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
    y1s += t1 * (-2.0 * kEulerGamma + 2.0 * harmonic + 1.0 / (k + 1));
    if (k > 0) y0s -= harmonic * t0;
    if (std::abs(t0) < 1e-18 * std::abs(j0) && std::abs(t1) < 1e-18 * std::abs(j1) && k > 2) break;
  }
  j1 *= 0.5 * x;
  const double lg = std::log(0.5 * x);
  const double y0 = (2.0 / std::numbers::pi) * ((lg + kEulerGamma) * j0 + y0s);
  const double y1 = -2.0 / (std::numbers::pi * x) + (2.0 / std::numbers::pi) * lg * j1 -
                    (1.0 / std::numbers::pi) * 0.5 * x * y1s;
  return {j0, j1, y0, y1};
}

// Miller backward recurrence normalised by J0 + 2 sum J_2k = 1, with the
// Neumann expansions of Y0 and Y1 in even-order J's.
inline BesselJY bessel_miller(double x) {
  int top = static_cast<int>(1.2 * x + 40.0);
  if (top % 2) ++top;
  std::vector<double> j(static_cast<std::size_t>(top) + 2, 0.0);
  j[static_cast<std::size_t>(top)] = 1e-30;
  for (int n = top; n >= 1; --n) {
    j[n - 1] = (2.0 * n / x) * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > 1e200) {
      for (int m = n - 1; m <= top; ++m) j[m] *= 1e-200;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= top; k += 2) norm += 2.0 * j[k];
  for (auto& v : j) v /= norm;

  double s0 = 0.0, s1 = 0.0;
  for (int k = 1; 2 * k + 1 <= top + 1; ++k) {
    const double sgn = (k % 2) ? -1.0 : 1.0;
    s0 += sgn * j[2 * k] / k;
    s1 += sgn * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  const double lg = std::log(0.5 * x) + kEulerGamma;
  const double y0 = (2.0 / std::numbers::pi) * lg * j[0] - (4.0 / std::numbers::pi) * s0;
  const double y1 = (2.0 / std::numbers::pi) * lg * j[1] - 2.0 / (std::numbers::pi * x) * j[0] +
                    (2.0 / std::numbers::pi) * s1;
  return {j[0], j[1], y0, y1};
}

// Hankel asymptotic expansion, accurate to rounding for x >= 25.
inline BesselJY bessel_asymptotic(double x) {
  auto pq = [x](double nu, double& p, double& q) {
    const double mu = 4.0 * nu * nu;
    p = 1.0;
    q = 0.0;
    double t = 1.0;
    double prev = 1.0;
    for (int k = 1; k < 80; ++k) {
      t *= (mu - double(2 * k - 1) * double(2 * k - 1)) / (k * 8.0 * x);
      if (std::abs(t) > prev) break;
      prev = std::abs(t);
      switch (k % 4) {
        case 1: q += t; break;
        case 2: p -= t; break;
        case 3: q -= t; break;
        default: p += t; break;
      }
      if (prev < 1e-18) break;
    }
  };
  double p0, q0, p1, q1;
  pq(0.0, p0, q0);
  pq(1.0, p1, q1);
  const double c = std::cos(x), s = std::sin(x);
  const double r = std::sqrt(2.0 / (std::numbers::pi * x)) / std::numbers::sqrt2;
  // chi0 = x - pi/4, chi1 = x - 3pi/4
  const double cos0 = c + s, sin0 = s - c;
  const double cos1 = s - c, sin1 = -s - c;
  return {r * (p0 * cos0 - q0 * sin0), r * (p1 * cos1 - q1 * sin1), r * (p0 * sin0 + q0 * cos0),
          r * (p1 * sin1 + q1 * cos1)};
}

inline BesselJY bessel_jy(double x) {
  if (x <= 2.0) return bessel_series(x);
  if (x < 25.0) return bessel_miller(x);
  return bessel_asymptotic(x);
}

}  // namespace detail

/// J0(x), J1(x) for x >= 0.
inline BesselPair bessel_j(double x) {
  if (!std::isfinite(x) || x < 0.0) throw DomainError("bessel_j: argument must be finite and >= 0");
  if (x == 0.0) return {1.0, 0.0};
  const auto r = detail::bessel_jy(x);
  return {r.j0, r.j1};
}

/// Y0(x), Y1(x) for x > 0.
inline BesselPair bessel_y(double x) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError("bessel_y: argument must be finite and > 0");
  const auto r = detail::bessel_jy(x);
  return {r.y0, r.y1};
}

/// H0^(1)(x), H1^(1)(x) for x > 0.
inline CylKernelPair hankel1(double x) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError("hankel1: argument must be finite and > 0");
  const auto r = detail::bessel_jy(x);
  return {{r.j0, r.y0}, {r.j1, r.y1}};
}

namespace detail {

// Weideman's rational expansion of the Faddeeva function in the upper half
// plane; the coefficients come from a cosine transform of exp(-t^2)(L^2+t^2).
inline constexpr int kWeidemanTerms = 40;

struct WeidemanTable {
  double L;
  std::array<double, kWeidemanTerms> a;  // a[m-1] multiplies Z^(m-1)
};

inline const WeidemanTable& weideman_table() {
  static const WeidemanTable table = [] {
    WeidemanTable t{};
    const int n = kWeidemanTerms;
    const int m = 2 * n;
    t.L = std::sqrt(n / std::numbers::sqrt2);
    std::vector<double> f(2 * m, 0.0);  // index k+M for k = -M..M-1, f(-M) = 0
    for (int k = -m + 1; k <= m - 1; ++k) {
      const double tk = t.L * std::tan(0.5 * k * std::numbers::pi / m);
      f[k + m] = std::exp(-tk * tk) * (t.L * t.L + tk * tk);
    }
    for (int j = 1; j <= n; ++j) {
      long double acc = 0.0L;
      for (int k = -m + 1; k <= m - 1; ++k) {
        acc += static_cast<long double>(f[k + m]) *
               std::cos(static_cast<long double>(std::numbers::pi) * k * j / m);
      }
      t.a[j - 1] = static_cast<double>(acc / (2.0L * m));
    }
    return t;
  }();
  return table;
}

// w(z) for Im z >= 0.
inline cplx faddeeva_upper(cplx z) {
  const auto& t = weideman_table();
  const cplx iz(-z.imag(), z.real());
  const cplx den = t.L - iz;
  const cplx zz = (t.L + iz) / den;
  cplx p = t.a[kWeidemanTerms - 1];
  for (int j = kWeidemanTerms - 2; j >= 0; --j) p = p * zz + t.a[j];
  return 2.0 * p / (den * den) + (1.0 / std::sqrt(std::numbers::pi)) / den;
}

}  // namespace detail

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
inline cplx faddeeva_w(cplx z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("faddeeva_w: non-finite argument");
  if (z.imag() >= 0.0) return detail::faddeeva_upper(z);
  // w(z) = 2 exp(-z^2) - w(-z)
  return 2.0 * std::exp(-z * z) - detail::faddeeva_upper(-z);
}

/// Scaled complementary error function erfcx(z) = exp(z^2) erfc(z) = w(iz).
inline cplx erfc_scaled(cplx z) {
  return faddeeva_w(cplx(-z.imag(), z.real()));
}

/// Fills out[n] = E_n(x) for n = 0 .. out.size()-1, x > 0 (E_0(x) = exp(-x)/x).
inline void expint_table(double x, std::span<double> out) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("expint_table: argument must be > 0");
  if (out.empty()) return;
  const double ex = std::exp(-x);
  out[0] = ex / x;
  const int nmax = static_cast<int>(out.size()) - 1;
  if (nmax == 0) return;
  if (x <= 1.0) {
    double e1 = -detail::kEulerGamma - std::log(x);
    double term = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= -x / k;
      const double d = -term / k;
      e1 += d;
      if (std::abs(d) < 1e-17 * std::abs(e1)) break;
    }
    out[1] = e1;
    for (int n = 1; n < nmax; ++n) out[n + 1] = (ex - x * out[n]) / n;
    return;
  }
  // Continued fraction at the pivot order, then recur away from it in the
  // stable direction on each side.
  const int pivot = std::max(1, std::min(nmax, static_cast<int>(x)));
  {
    const int n = pivot;
    constexpr double tiny = 1e-300;
    double b = x + n;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
      const double an = -double(i) * (n - 1 + i);
      b += 2.0;
      d = 1.0 / (an * d + b);
      c = b + an / c;
      const double del = c * d;
      h *= del;
      if (std::abs(del - 1.0) < 1e-16) break;
    }
    out[n] = h * ex;
  }
  for (int n = pivot; n < nmax; ++n) out[n + 1] = (ex - x * out[n]) / n;
  for (int n = pivot - 1; n >= 1; --n) out[n] = (ex - n * out[n + 1]) / x;
}

}  // namespace qprtm::specfun
