#pragma once

// Forward scattering solvers for one quasi-momentum alpha:
//   PenetrableSolver: Lippmann-Schwinger collocation on a uniform cell grid,
//     Toeplitz matvec by FFT, GMRES (dense LU for small systems).
//   SoundSoftSolver: combined-field Nystrom method with Kress log quadrature
//     for the free-space part and the trapezoid rule for the Ewald remainder.
// Both report the scattered field through its Rayleigh coefficients.

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/linalg.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/qpgreen.hpp"
#include "qprtm/quadrature.hpp"
#include "qprtm/scene.hpp"
#include "qprtm/specfun.hpp"

namespace qprtm {

struct SolverSettings {
  double gmres_tolerance = 1e-10;
  int gmres_restart = 120;
  int gmres_max_iterations = 4000;
  /// Systems with fewer unknowns are factorized densely.
  std::size_t dense_threshold = 1024;
  /// Combined-field coupling eta; 0 selects eta = k.
  double coupling = 0.0;
  /// Worker threads for per-mode solves (0 = hardware concurrency).
  unsigned threads = 1;

  /// Settings that influence results (threads excluded).
  std::string canonical() const {
    char buf[160];
    std::snprintf(buf, sizeof buf, "tol=%.17g;restart=%d;maxit=%d;dense=%zu;eta=%.17g",
                  gmres_tolerance, gmres_restart, gmres_max_iterations, dense_threshold, coupling);
    return buf;
  }
};

/// Scattered-field Rayleigh data for one incident mode.
struct ModeResponse {
  long mode = 0;
  RayleighCoefficients upper;
  RayleighCoefficients lower;
  double residual = 0.0;
};

struct VolumeGrid {
  double x1_origin = 0.0;  // lower-left corner of cell (0, 0)
  double x2_origin = 0.0;
  double h = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<int> cell_of_unknown;  // i1 * ny + i2
  std::vector<double> contrast;      // gamma - 1 per unknown

  Point center(int i1, int i2) const {
    return {x1_origin + (i1 + 0.5) * h, x2_origin + (i2 + 0.5) * h};
  }
  Point unknown_center(std::size_t u) const {
    const int c = cell_of_unknown[u];
    return center(c / ny, c % ny);
  }
  std::size_t unknowns() const { return cell_of_unknown.size(); }
};

struct VolumeFieldSolution {
  long mode = 0;
  std::shared_ptr<const VolumeGrid> grid;
  CVector total;  // total field at unknown cell centers
  RayleighCoefficients upper;
  RayleighCoefficients lower;
  double residual = 0.0;
  int iterations = 0;

  ModeResponse response() const { return {mode, upper, lower, residual}; }
};

struct BoundaryDensitySolution {
  long mode = 0;
  CVector density;
  RayleighCoefficients upper;
  RayleighCoefficients lower;
  /// max |u^s - data| over off-node boundary check points.
  double residual = 0.0;

  ModeResponse response() const { return {mode, upper, lower, residual}; }
};

/// sum_n w_n e^{i alpha_n x1 +- i beta_n x2} on Gamma_{+-h} at N_r receivers.
inline std::vector<cplx> radiate_trace(const ModeResponse& r, const ModeSet& modes, Side side,
                                       double h, std::size_t receivers, double extent) {
  if (!(h > extent))
    throw PreconditionError("measurement line must lie above the scene's vertical extent");
  return synthesize_trace(side == Side::upper ? r.upper : r.lower, h, receivers, modes);
}

inline std::vector<cplx> radiate_trace(const VolumeFieldSolution& s, const PenetrableScene& scene,
                                       const ModeSet& modes, Side side, double h,
                                       std::size_t receivers) {
  return radiate_trace(s.response(), modes, side, h, receivers, scene.vertical_extent());
}

inline std::vector<cplx> radiate_trace(const BoundaryDensitySolution& s, const SoundSoftScene& scene,
                                       const ModeSet& modes, Side side, double h,
                                       std::size_t receivers) {
  return radiate_trace(s.response(), modes, side, h, receivers, scene.vertical_extent());
}

/// Flux-balance relative defect |sum beta (|u+|^2 + |u- + delta|^2) - beta_n| / beta_n.
inline double flux_defect(const ModeResponse& r, const ModeSet& modes) {
  double acc = 0.0;
  for (long m = modes.first_propagating(); m <= modes.last_propagating(); ++m) {
    const double b = modes.beta_n(m).real();
    const cplx t = r.lower[m] + (m == r.mode ? 1.0 : 0.0);
    acc += b * (std::norm(r.upper[m]) + std::norm(t));
  }
  const double bn = modes.beta_n(r.mode).real();
  return std::abs(acc - bn) / bn;
}

namespace detail {

inline cplx sinc(cplx z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
  return std::sin(z) / z;
}

// Integral of H0(k|x - y|) over the square |y1|, |y2| <= h/2 for x = (px, py),
// by polar decomposition about x into one triangle per edge; the radial
// integral is exact and the angular one Gauss-Legendre.
inline cplx hankel_square_integral(double px, double py, double h, double k) {
  static const auto gl = gauss_legendre(64);
  const double a = 0.5 * h;
  const Point verts[4] = {{-a, -a}, {a, -a}, {a, a}, {-a, a}};
  const cplx c0(0.0, 2.0 / (std::numbers::pi * k * k));
  cplx total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const Point va{verts[e].x1 - px, verts[e].x2 - py};
    const Point vb{verts[(e + 1) % 4].x1 - px, verts[(e + 1) % 4].x2 - py};
    const double cross = va.x1 * vb.x2 - va.x2 * vb.x1;
    const double len = norm(vb - va);
    const double d = std::abs(cross) / len;
    if (d < 1e-15 * h) continue;
    const Point dir{(vb.x1 - va.x1) / len, (vb.x2 - va.x2) / len};
    const double s = va.x1 * dir.x1 + va.x2 * dir.x2;
    const Point foot{va.x1 - s * dir.x1, va.x2 - s * dir.x2};
    const double phi = std::atan2(foot.x2, foot.x1);
    const double ta = std::atan2(va.x2, va.x1);
    const double sweep = std::atan2(cross, va.x1 * vb.x1 + va.x2 * vb.x2);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < gl.first.size(); ++i) {
      const double th = ta + 0.5 * sweep * (gl.first[i] + 1.0);
      const double R = d / std::cos(th - phi);
      const auto hk = specfun::hankel1(k * R);
      acc += gl.second[i] * (R * hk.order1 / k + c0);
    }
    total += 0.5 * sweep * acc;
  }
  return total;
}

// Tensor Gauss-Legendre integral of H0(k|x - y|) over the same square.
inline cplx hankel_square_gauss(double px, double py, double h, double k, int n) {
  const auto gl = gauss_legendre(n);
  cplx acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double y1 = 0.5 * h * gl.first[i], y2 = 0.5 * h * gl.first[j];
      acc += gl.second[i] * gl.second[j] * specfun::hankel1(k * std::hypot(px - y1, py - y2)).order0;
    }
  return 0.25 * h * h * acc;
}

}  // namespace detail

/// Uniform square-cell grid over the bounding box of the support of gamma - 1.
inline VolumeGrid build_volume_grid(const PenetrableScene& scene) {
  scene.validate();
  VolumeGrid g;
  const auto box = bounding_box(scene.curve);
  const double w1 = box.x1_max - box.x1_min, w2 = box.x2_max - box.x2_min;
  g.h = std::max(w1, w2) / scene.grid;
  g.nx = std::max(1, static_cast<int>(std::ceil(w1 / g.h - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil(w2 / g.h - 1e-9)));
  g.x1_origin = 0.5 * (box.x1_min + box.x1_max) - 0.5 * g.nx * g.h;
  g.x2_origin = 0.5 * (box.x2_min + box.x2_max) - 0.5 * g.ny * g.h;
  const ContrastSampler gamma(scene);
  auto cell_contrast = [&](int i1, int i2) {
    const Point c = g.center(i1, i2);
    const double mid = gamma(c) - 1.0;
    if (scene.sampling == ContrastSampling::midpoint) return mid;
    bool uniform = true;
    for (int a : {-1, 1})
      for (int b : {-1, 1})
        uniform = uniform && gamma({c.x1 + 0.5 * a * g.h, c.x2 + 0.5 * b * g.h}) - 1.0 == mid;
    if (uniform) return mid;
    constexpr int sub = 16;
    double acc = 0.0;
    for (int a = 0; a < sub; ++a)
      for (int b = 0; b < sub; ++b)
        acc += gamma({c.x1 + ((a + 0.5) / sub - 0.5) * g.h, c.x2 + ((b + 0.5) / sub - 0.5) * g.h}) - 1.0;
    return acc / (sub * sub);
  };
  for (int i1 = 0; i1 < g.nx; ++i1)
    for (int i2 = 0; i2 < g.ny; ++i2) {
      const double c = cell_contrast(i1, i2);
      if (c != 0.0) {
        g.cell_of_unknown.push_back(i1 * g.ny + i2);
        g.contrast.push_back(c);
      }
    }
  return g;
}

class PenetrableSolver {
 public:
  PenetrableSolver(const PenetrableScene& scene, const ModeSet& modes, SolverSettings settings = {})
      : scene_(scene), modes_(modes), settings_(settings),
        grid_(std::make_shared<VolumeGrid>(build_volume_grid(scene))) {
    build_kernel();
    build_phase_tables();
    if (grid_->unknowns() > 0 && grid_->unknowns() < settings_.dense_threshold) build_dense();
  }

  const VolumeGrid& grid() const { return *grid_; }
  const ModeSet& modes() const { return modes_; }
  std::size_t unknowns() const { return grid_->unknowns(); }

  /// Total field for incident plane wave n.
  VolumeFieldSolution solve(long n) const {
    CVector rhs(unknowns());
    for (std::size_t u = 0; u < rhs.size(); ++u) rhs[u] = incident_wave(modes_, n, grid_->unknown_center(u));
    return solve_incident(rhs, n);
  }

  /// Total field for an arbitrary incident field sampled at the unknown centers.
  VolumeFieldSolution solve_incident(const CVector& incident, long label) const {
    VolumeFieldSolution s;
    s.mode = label;
    s.grid = grid_;
    if (unknowns() == 0) {
      s.upper = RayleighCoefficients::zeros(Side::upper, modes_.truncation());
      s.lower = RayleighCoefficients::zeros(Side::lower, modes_.truncation());
      return s;
    }
    Workspace ws(*this);
    if (dense_) {
      CColumn b(static_cast<Eigen::Index>(incident.size()));
      for (std::size_t i = 0; i < incident.size(); ++i) b[static_cast<Eigen::Index>(i)] = incident[i];
      const CColumn x = dense_->solve(b);
      s.total.assign(x.data(), x.data() + x.size());
      CVector ax(incident.size());
      ws.apply(s.total, ax);
      double rn = 0.0, bn = 0.0;
      for (std::size_t i = 0; i < ax.size(); ++i) {
        rn += std::norm(ax[i] - incident[i]);
        bn += std::norm(incident[i]);
      }
      s.residual = std::sqrt(rn / bn);
    } else {
      GmresSettings gs{settings_.gmres_tolerance, settings_.gmres_restart, settings_.gmres_max_iterations};
      auto r = gmres([&](const CVector& in, CVector& out) { ws.apply(in, out); }, incident, gs);
      if (!r.converged)
        throw SolverError("GMRES did not converge for mode " + std::to_string(label) +
                              " (relative residual " + std::to_string(r.relative_residual) + ")",
                          r.relative_residual);
      s.total = std::move(r.x);
      s.residual = r.relative_residual;
      s.iterations = r.iterations;
    }
    rayleigh(s.total, s.upper, s.lower);
    return s;
  }

  /// (I - k^2 T diag(gamma - 1)) x on the unknowns.
  void apply(const CVector& x, CVector& y) const {
    Workspace ws(*this);
    ws.apply(x, y);
  }

  /// Rayleigh coefficients of k^2 int (gamma - 1) G u for piecewise-constant u.
  void rayleigh(const CVector& total, RayleighCoefficients& upper, RayleighCoefficients& lower) const {
    const int nt = modes_.truncation();
    upper = RayleighCoefficients::zeros(Side::upper, nt);
    lower = RayleighCoefficients::zeros(Side::lower, nt);
    const auto& g = *grid_;
    const double k2 = modes_.wavenumber() * modes_.wavenumber();
    std::vector<cplx> s(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
    for (std::size_t u = 0; u < total.size(); ++u) s[g.cell_of_unknown[u]] = g.contrast[u] * total[u];
    for (long m = -nt; m <= nt; ++m) {
      const auto& ex = phase_x_[modes_.slot(m)];
      const auto& eu = phase_up_[modes_.slot(m)];
      const auto& el = phase_lo_[modes_.slot(m)];
      cplx up = 0.0, lo = 0.0;
      for (int i1 = 0; i1 < g.nx; ++i1) {
        cplx cu = 0.0, cl = 0.0;
        const cplx* row = &s[static_cast<std::size_t>(i1) * g.ny];
        for (int i2 = 0; i2 < g.ny; ++i2) {
          cu += row[i2] * eu[i2];
          cl += row[i2] * el[i2];
        }
        up += ex[i1] * cu;
        lo += ex[i1] * cl;
      }
      const cplx b = modes_.beta_n(m);
      const double an = modes_.alpha_n(m);
      const cplx f = cplx(0.0, 1.0) * k2 / (2.0 * modes_.period() * b) * g.h * g.h *
                     detail::sinc(0.5 * an * g.h) * detail::sinc(0.5 * b * g.h);
      upper[m] = f * up;
      lower[m] = f * lo;
    }
  }

 private:
  struct Workspace {
    explicit Workspace(const PenetrableSolver& s)
        : solver(s), fft(2 * s.grid_->nx, 2 * s.grid_->ny) {}
    void apply(const CVector& x, CVector& y) {
      const auto& g = *solver.grid_;
      const int p2 = 2 * g.ny;
      cplx* d = fft.data();
      std::fill(d, d + fft.size(), cplx(0.0));
      for (std::size_t u = 0; u < x.size(); ++u) {
        const int c = g.cell_of_unknown[u];
        d[static_cast<std::size_t>(c / g.ny) * p2 + c % g.ny] = g.contrast[u] * x[u];
      }
      fft.forward();
      for (std::size_t i = 0; i < fft.size(); ++i) d[i] *= solver.kernel_hat_[i];
      fft.backward();
      y.resize(x.size());
      for (std::size_t u = 0; u < x.size(); ++u) {
        const int c = g.cell_of_unknown[u];
        y[u] = x[u] - d[static_cast<std::size_t>(c / g.ny) * p2 + c % g.ny];
      }
    }
    const PenetrableSolver& solver;
    Fft2d fft;
  };

  // T(p, q) = int_cell G((p h, q h) - y) dy, stored with the k^2 and inverse-FFT
  // normalization folded in, as the transform of its circulant embedding.
  void build_kernel() {
    const auto& g = *grid_;
    if (g.unknowns() == 0) return;
    const double k = modes_.wavenumber();
    const double h = g.h;
    const int nx = g.nx, ny = g.ny;
    std::vector<cplx> hank(static_cast<std::size_t>(nx) * ny);
    for (int p = 0; p < nx; ++p)
      for (int q = 0; q < ny; ++q) {
        const int far = std::max(p, q);
        cplx v;
        if (far <= 2) {
          v = detail::hankel_square_integral(p * h, q * h, h, k);
        } else if (far <= 6) {
          v = detail::hankel_square_gauss(p * h, q * h, h, k, 6);
        } else {
          v = detail::hankel_square_gauss(p * h, q * h, h, k, 3);
        }
        hank[static_cast<std::size_t>(p) * ny + q] = 0.25 * cplx(0.0, 1.0) * v;
      }
    const QpGreen green(modes_);
    const int p1 = 2 * nx, p2 = 2 * ny;
    Fft2d fft(p1, p2);
    cplx* d = fft.data();
    std::fill(d, d + fft.size(), cplx(0.0));
    const double scale = k * k / (static_cast<double>(p1) * p2);
    for (int p = -(nx - 1); p <= nx - 1; ++p)
      for (int q = 0; q <= ny - 1; ++q) {
        const cplx rem = green.remainder(p * h, q * h).value * h * h;
        const cplx t = (hank[static_cast<std::size_t>(std::abs(p)) * ny + q] + rem) * scale;
        const int a = (p + p1) % p1;
        d[static_cast<std::size_t>(a) * p2 + q] = t;
        if (q > 0) d[static_cast<std::size_t>(a) * p2 + (p2 - q)] = t;
      }
    fft.forward();
    kernel_hat_.assign(d, d + fft.size());
  }

  // e^{-i alpha_m c1}, e^{-i beta_m c2} (upper) and e^{+i beta_m c2} (lower) per cell row/column.
  void build_phase_tables() {
    const auto& g = *grid_;
    const int nt = modes_.truncation();
    const cplx I(0.0, 1.0);
    phase_x_.assign(modes_.size(), {});
    phase_up_.assign(modes_.size(), {});
    phase_lo_.assign(modes_.size(), {});
    for (long m = -nt; m <= nt; ++m) {
      auto& ex = phase_x_[modes_.slot(m)];
      auto& eu = phase_up_[modes_.slot(m)];
      auto& el = phase_lo_[modes_.slot(m)];
      ex.resize(g.nx);
      eu.resize(g.ny);
      el.resize(g.ny);
      for (int i1 = 0; i1 < g.nx; ++i1) ex[i1] = std::polar(1.0, -modes_.alpha_n(m) * g.center(i1, 0).x1);
      const cplx b = modes_.beta_n(m);
      for (int i2 = 0; i2 < g.ny; ++i2) {
        const double c2 = g.center(0, i2).x2;
        eu[i2] = std::exp(-I * b * c2);
        el[i2] = std::exp(I * b * c2);
      }
    }
  }

  void build_dense() {
    const std::size_t n = unknowns();
    CMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Workspace ws(*this);
    CVector e(n, 0.0), col(n);
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = 1.0;
      ws.apply(e, col);
      e[j] = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    dense_ = std::make_shared<DenseLu>(a);
  }

  PenetrableScene scene_;
  ModeSet modes_;
  SolverSettings settings_;
  std::shared_ptr<VolumeGrid> grid_;
  std::vector<cplx> kernel_hat_;
  std::vector<std::vector<cplx>> phase_x_, phase_up_, phase_lo_;
  std::shared_ptr<DenseLu> dense_;
};

inline VolumeFieldSolution solve_penetrable(const PenetrableScene& scene, const ModeSet& modes, long n,
                                            const SolverSettings& settings = {}) {
  return PenetrableSolver(scene, modes, settings).solve(n);
}

class SoundSoftSolver {
 public:
  SoundSoftSolver(const SoundSoftScene& scene, const ModeSet& modes, SolverSettings settings = {})
      : scene_(scene), modes_(modes), settings_(settings), green_(modes) {
    scene_.validate();
    rule_ = boundary_rule(scene_);
    eta_ = settings_.coupling > 0.0 ? settings_.coupling : modes_.wavenumber();
    const std::size_t n = rule_.size();
    CMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = operator_row(rule_.t[i], rule_.position[i], static_cast<long>(i));
      for (std::size_t j = 0; j < n; ++j)
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j] + (i == j ? 1.0 : 0.0);
    }
    lu_ = std::make_shared<DenseLu>(a);
    for (int c = 0; c < kResidualChecks; ++c) {
      const double t = 2.0 * std::numbers::pi * (c + 0.37) / kResidualChecks;
      const Point x = scene_.curve.position(t);
      check_t_.push_back(t);
      check_x_.push_back(x);
      check_rows_.push_back(operator_row(t, x, -1));
    }
  }

  const BoundaryRule& rule() const { return rule_; }
  double coupling() const { return eta_; }

  /// Scattered field for incident plane wave n (u^s = -u^inc on the boundary).
  BoundaryDensitySolution solve(long n) const {
    if (!modes_.retained(n) || !modes_.is_propagating(n))
      throw PreconditionError("incident mode " + std::to_string(n) + " is not propagating");
    return solve_dirichlet([&](Point x) { return -incident_wave(modes_, n, x); }, n);
  }

  /// Scattered field with Dirichlet data u^s = data on the boundary.
  BoundaryDensitySolution solve_dirichlet(const std::function<cplx(Point)>& data, long label) const {
    const std::size_t n = rule_.size();
    CColumn b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) b[static_cast<Eigen::Index>(i)] = 2.0 * data(rule_.position[i]);
    const CColumn x = lu_->solve(b);
    BoundaryDensitySolution s;
    s.mode = label;
    s.density.assign(x.data(), x.data() + x.size());
    rayleigh(s.density, s.upper, s.lower);
    s.residual = boundary_residual(s.density, data);
    return s;
  }

  /// max |u^s - data| over 64 off-node boundary points, with the density trig-interpolated.
  double boundary_residual(const CVector& density, const std::function<cplx(Point)>& data) const {
    double worst = 0.0;
    for (std::size_t c = 0; c < check_t_.size(); ++c) {
      cplx v = interpolate(density, check_t_[c]);
      for (std::size_t j = 0; j < density.size(); ++j) v += check_rows_[c][j] * density[j];
      worst = std::max(worst, std::abs(0.5 * v - data(check_x_[c])));
    }
    return worst;
  }

  /// Trigonometric interpolant of nodal values at parameter t.
  cplx interpolate(const CVector& values, double t) const {
    const std::size_t n = values.size();
    const int half = static_cast<int>(n / 2);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = t - rule_.t[j];
      double d = 1.0 + std::cos(half * s);
      for (int m = 1; m < half; ++m) d += 2.0 * std::cos(m * s);
      acc += values[j] * (d / static_cast<double>(n));
    }
    return acc;
  }

  void rayleigh(const CVector& density, RayleighCoefficients& upper, RayleighCoefficients& lower) const {
    const int nt = modes_.truncation();
    upper = RayleighCoefficients::zeros(Side::upper, nt);
    lower = RayleighCoefficients::zeros(Side::lower, nt);
    const cplx I(0.0, 1.0);
    for (long m = -nt; m <= nt; ++m) {
      const double a = modes_.alpha_n(m);
      const cplx b = modes_.beta_n(m);
      cplx up = 0.0, lo = 0.0;
      for (std::size_t j = 0; j < rule_.size(); ++j) {
        const Point y = rule_.position[j];
        const Point nu = rule_.normal[j];
        const cplx w = rule_.weight[j] * density[j];
        up += w * ((-I * a * nu.x1 - I * b * nu.x2) - I * eta_) * std::exp(-I * a * y.x1 - I * b * y.x2);
        lo += w * ((-I * a * nu.x1 + I * b * nu.x2) - I * eta_) * std::exp(-I * a * y.x1 + I * b * y.x2);
      }
      const cplx f = I / (2.0 * modes_.period() * b);
      upper[m] = f * up;
      lower[m] = f * lo;
    }
  }

 private:
  // Row of the discretized operator int (L - i eta M)(t, tau) phi(tau) dtau at
  // parameter t (node index `node`, or -1 off the grid); the identity is not included.
  std::vector<cplx> operator_row(double t, Point x, long node) const {
    const std::size_t n = rule_.size();
    const int half = static_cast<int>(n / 2);
    const double k = modes_.wavenumber();
    const double pi = std::numbers::pi;
    const double wt = pi / half;
    const cplx I(0.0, 1.0);
    std::vector<cplx> row(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double s = t - rule_.t[j];
      double rw = -pi / (double(half) * half) * std::cos(half * s);
      for (int m = 1; m < half; ++m) rw -= 2.0 * pi / half * std::cos(m * s) / m;
      const Point y = rule_.position[j];
      const Point d1 = rule_.tangent[j];
      const double jac = rule_.jacobian[j];
      cplx l1, l2, m1, m2;
      if (static_cast<long>(j) == node) {
        l1 = 0.0;
        m1 = -jac / (2.0 * pi);
        l2 = -(d1.x1 * rule_.second[j].x2 - d1.x2 * rule_.second[j].x1) / (2.0 * pi * jac * jac);
        m2 = (0.5 * I - std::numbers::egamma / pi - std::log(0.5 * k * jac) / pi) * jac;
      } else {
        const double dx = x.x1 - y.x1, dy = x.x2 - y.x2;
        const double r = std::hypot(dx, dy);
        const double bracket = d1.x2 * dx - d1.x1 * dy;
        const auto hk = specfun::hankel1(k * r);
        const auto jk = specfun::bessel_j(k * r);
        const double lg = std::log(4.0 * std::sin(0.5 * s) * std::sin(0.5 * s));
        const cplx l = 0.5 * I * k * bracket * hk.order1 / r;
        const cplx mm = 0.5 * I * hk.order0 * jac;
        l1 = -k / (2.0 * pi) * bracket * jk.order1 / r;
        m1 = -jac * jk.order0 / (2.0 * pi);
        l2 = l - l1 * lg;
        m2 = mm - m1 * lg;
      }
      const GreenValue rem = green_.remainder(x.x1 - y.x1, x.x2 - y.x2);
      const Point nu = rule_.normal[j];
      // gradient in y is minus the gradient in x - y
      const cplx lr = -2.0 * (rem.d1 * nu.x1 + rem.d2 * nu.x2) * jac;
      const cplx mr = 2.0 * rem.value * jac;
      row[j] = rw * (l1 - I * eta_ * m1) + wt * (l2 - I * eta_ * m2) + wt * (lr - I * eta_ * mr);
    }
    return row;
  }

  static constexpr int kResidualChecks = 64;

  SoundSoftScene scene_;
  ModeSet modes_;
  SolverSettings settings_;
  QpGreen green_;
  BoundaryRule rule_;
  double eta_ = 0.0;
  std::shared_ptr<DenseLu> lu_;
  std::vector<double> check_t_;
  std::vector<Point> check_x_;
  std::vector<std::vector<cplx>> check_rows_;
};

inline BoundaryDensitySolution solve_soundsoft(const SoundSoftScene& scene, const ModeSet& modes, long n,
                                               const SolverSettings& settings = {}) {
  return SoundSoftSolver(scene, modes, settings).solve(n);
}

}  // namespace qprtm
