#pragma once

// Restarted GMRES for complex systems given as a matvec callable, a 2-D
// complex FFT wrapper, and a dense LU fallback.

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <vector>

#include "qprtm/errors.hpp"

namespace qprtm {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

struct GmresSettings {
  double tolerance = 1e-10;
  int restart = 120;
  int max_iterations = 4000;
};

struct GmresResult {
  CVector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

namespace detail {

inline double norm2(const CVector& v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

inline cplx dot(const CVector& a, const CVector& b) {  // conj(a) . b
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

}  // namespace detail

/// Solves A x = b from x = 0; apply(in, out) writes A*in into out.
template <class Apply>
GmresResult gmres(Apply&& apply, const CVector& b, const GmresSettings& settings = {}) {
  const std::size_t n = b.size();
  GmresResult res;
  res.x.assign(n, 0.0);
  const double bnorm = detail::norm2(b);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  const int m = std::max(1, settings.restart);
  CVector r = b, w(n);
  std::vector<CVector> V(static_cast<std::size_t>(m) + 1, CVector(n));
  std::vector<std::vector<cplx>> H(static_cast<std::size_t>(m) + 1, std::vector<cplx>(m));
  std::vector<cplx> cs(m), sn(m), g(static_cast<std::size_t>(m) + 1);
  double rnorm = bnorm;
  while (res.iterations < settings.max_iterations) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / rnorm;
    std::fill(g.begin(), g.end(), cplx(0.0));
    g[0] = rnorm;
    int j = 0;
    for (; j < m && res.iterations < settings.max_iterations; ++j) {
      apply(V[j], w);
      ++res.iterations;
      for (int i = 0; i <= j; ++i) {
        H[i][j] = detail::dot(V[i], w);
        for (std::size_t k = 0; k < n; ++k) w[k] -= H[i][j] * V[i][k];
      }
      const double hn = detail::norm2(w);
      H[j + 1][j] = hn;
      if (hn > 0.0)
        for (std::size_t k = 0; k < n; ++k) V[j + 1][k] = w[k] / hn;
      for (int i = 0; i < j; ++i) {
        const cplx t = std::conj(cs[i]) * H[i][j] + std::conj(sn[i]) * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t;
      }
      const double den = std::hypot(std::abs(H[j][j]), hn);
      if (den == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else {
        cs[j] = H[j][j] / den;
        sn[j] = hn / den;
      }
      H[j][j] = std::conj(cs[j]) * H[j][j] + std::conj(sn[j]) * H[j + 1][j];
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      if (std::abs(g[j + 1]) <= settings.tolerance * bnorm || hn == 0.0) {
        ++j;
        break;
      }
    }
    std::vector<cplx> y(j);
    for (int i = j - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H[i][k] * y[k];
      y[i] = s / H[i][i];
    }
    for (int i = 0; i < j; ++i)
      for (std::size_t k = 0; k < n; ++k) res.x[k] += y[i] * V[i][k];
    apply(res.x, w);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - w[k];
    rnorm = detail::norm2(r);
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= settings.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// In-place 2-D complex FFT of fixed shape (row-major, n0 rows of n1).
class Fft2d {
 public:
  Fft2d(int n0, int n1) : n0_(n0), n1_(n1) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size()));
    if (!buf_) throw Error("fftw_malloc failed");
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_2d(n0, n1, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(n0, n1, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;
  ~Fft2d() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buf_);
  }

  std::size_t size() const { return static_cast<std::size_t>(n0_) * n1_; }
  cplx* data() { return reinterpret_cast<cplx*>(buf_); }
  void forward() { fftw_execute(forward_); }
  /// Unnormalized inverse.
  void backward() { fftw_execute(backward_); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  int n0_, n1_;
  fftw_complex* buf_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CColumn = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

/// LU factorization with a conditioning guard.
class DenseLu {
 public:
  explicit DenseLu(const CMatrix& a) : lu_(a) {
    const auto piv = lu_.matrixLU().diagonal().cwiseAbs();
    const double rc = piv.size() == 0 ? 1.0 : std::min(piv.minCoeff() / piv.maxCoeff(), lu_.rcond());
    if (!(rc > 1e-14)) throw SolverError("dense system numerically singular", rc);
  }
  CColumn solve(const CColumn& b) const { return lu_.solve(b); }

 private:
  Eigen::PartialPivLU<CMatrix> lu_;
};

}  // namespace qprtm
