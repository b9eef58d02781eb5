#pragma once

// Lower/upper RTM imaging functionals, multi-alpha averaging, and the
// resolution checks comparing I(z) with adjoint scattering solutions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/forward.hpp"
#include "qprtm/measurement.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/parallel.hpp"
#include "qprtm/psf.hpp"
#include "qprtm/qpgreen.hpp"

namespace qprtm {

/// Uniform grid; point index j * n1 + i with i along z1 and j along z2, from the bottom-left.
struct ProbeGrid {
  double z1_min = -std::numbers::pi;
  double z1_max = std::numbers::pi;
  double z2_min = -std::numbers::pi;
  double z2_max = std::numbers::pi;
  int n1 = 101;
  int n2 = 101;

  static ProbeGrid centered(double period, int n1 = 101, int n2 = 101) {
    return {-0.5 * period, 0.5 * period, -0.5 * period, 0.5 * period, n1, n2};
  }

  std::size_t size() const { return static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2); }
  double z1(int i) const { return z1_min + (z1_max - z1_min) * i / (n1 - 1); }
  double z2(int j) const { return z2_min + (z2_max - z2_min) * j / (n2 - 1); }
  Point point(std::size_t idx) const {
    return {z1(static_cast<int>(idx % static_cast<std::size_t>(n1))),
            z2(static_cast<int>(idx / static_cast<std::size_t>(n1)))};
  }

  void validate(double period, double h) const {
    if (n1 < 2 || n2 < 2) throw PreconditionError("probe grid needs at least 2 points per axis");
    if (!(z1_max > z1_min) || !(z2_max > z2_min)) throw PreconditionError("probe grid ranges are empty");
    if (z1_max - z1_min > period * (1.0 + 1e-12)) throw PreconditionError("probe grid spans more than one period");
    if (!(z2_min > -h && z2_max < h))
      throw PreconditionError("probe grid must lie strictly between the measurement lines");
  }

  bool operator==(const ProbeGrid&) const = default;
};

struct ImagingResult {
  ProbeGrid grid;
  std::vector<double> values;
  Side kind = Side::lower;
  std::vector<double> alphas;
  std::string provenance;

  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n1 + i]; }
};

namespace detail {

/// Receiver sums collapsed onto the retained modes:
/// D(m, c) = (1/N_r) sum_r e^{i alpha_m x_r} conj(u_c(x_r)).
class ImagingKernel {
 public:
  ImagingKernel(const MeasurementSet& meas, const ModeSet& modes) : meas_(meas), modes_(modes) {
    const int nt = modes.truncation();
    rows_ = static_cast<std::size_t>(2 * nt + 1);
    cols_ = meas.columns();
    for (long n : meas.modes)
      if (!modes.retained(n) || !modes.is_propagating(n))
        throw PreconditionError("measurement column " + std::to_string(n) + " is not a propagating mode");
    const auto xs = meas.abscissas();
    d_.assign(rows_ * cols_, 0.0);
    for (long m = -nt; m <= nt; ++m) {
      std::vector<cplx> ph(meas.receivers);
      for (std::size_t r = 0; r < meas.receivers; ++r) ph[r] = std::polar(1.0, modes.alpha_n(m) * xs[r]);
      for (std::size_t c = 0; c < cols_; ++c) {
        cplx acc = 0.0;
        for (std::size_t r = 0; r < meas.receivers; ++r) acc += ph[r] * std::conj(meas(r, c));
        d_[modes.slot(m) * cols_ + c] = acc / static_cast<double>(meas.receivers);
      }
    }
  }

  /// Signed functional value at z.
  double value(Point z) const {
    const int nt = modes_.truncation();
    const cplx I(0.0, 1.0);
    const bool lower = meas_.side == Side::lower;
    const double h = meas_.h;
    std::vector<cplx> w(rows_);
    for (long m = -nt; m <= nt; ++m) {
      const cplx b = modes_.beta_n(m);
      const double depth = lower ? z.x2 + h : h - z.x2;
      w[modes_.slot(m)] = std::polar(1.0, -modes_.alpha_n(m) * z.x1) * std::exp(I * b * depth);
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) {
      cplx v = 0.0;
      for (std::size_t s = 0; s < rows_; ++s) v += w[s] * d_[s * cols_ + c];
      v *= lower ? 0.5 : -0.5;
      const long n = meas_.modes[c];
      acc += std::imag(I / modes_.beta_n(n).real() * incident_wave(modes_, n, z) * v);
    }
    return lower ? -acc : acc;
  }

 private:
  const MeasurementSet& meas_;
  const ModeSet& modes_;
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cplx> d_;
};

inline ModeSet modes_for(const MeasurementSet& meas) {
  return build_mode_set(meas.params(), meas.truncation);
}

}  // namespace detail

/// v_n(z) = (Lambda / N_r) sum_r d2 G(x_r, z) conj(u^s_n(x_r)), spectral Green's route.
inline cplx back_propagate(const MeasurementSet& meas, const ModeSet& modes, Point z, long n) {
  const std::size_t c = meas.column_of(n);
  const double x2 = meas.side == Side::lower ? -meas.h : meas.h;
  if (!(std::abs(z.x2) < meas.h)) throw PreconditionError("back_propagate: z must lie between the measurement lines");
  const QpGreen g(modes, GreenEvalPlan{GreenRoute::spectral});
  const auto xs = meas.abscissas();
  cplx acc = 0.0;
  for (std::size_t r = 0; r < meas.receivers; ++r)
    acc += g.eval({xs[r], x2}, z).d2 * std::conj(meas(r, c));
  return acc * (meas.period / static_cast<double>(meas.receivers));
}

/// Functional values at arbitrary points.
inline std::vector<double> image_points(const MeasurementSet& meas, const ModeSet& modes,
                                        const std::vector<Point>& points, unsigned threads = 1) {
  const detail::ImagingKernel kernel(meas, modes);
  std::vector<double> out(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) { out[i] = kernel.value(points[i]); });
  return out;
}

/// I_L (lower data) or I_U (upper data) on the probe grid.
inline ImagingResult image(const MeasurementSet& meas, const ModeSet& modes, const ProbeGrid& grid,
                           unsigned threads = 1) {
  grid.validate(meas.period, meas.h);
  const detail::ImagingKernel kernel(meas, modes);
  ImagingResult res;
  res.grid = grid;
  res.kind = meas.side;
  res.alphas = {meas.alpha};
  res.provenance = meas.provenance;
  res.values.resize(grid.size());
  parallel_for(static_cast<std::size_t>(grid.n2), threads, [&](std::size_t j) {
    for (int i = 0; i < grid.n1; ++i) {
      const std::size_t idx = j * static_cast<std::size_t>(grid.n1) + static_cast<std::size_t>(i);
      res.values[idx] = kernel.value(grid.point(idx));
    }
  });
  return res;
}

inline ImagingResult image(const MeasurementSet& meas, const ProbeGrid& grid, unsigned threads = 1) {
  return image(meas, detail::modes_for(meas), grid, threads);
}

/// Arithmetic mean per node. Inputs are summed in a canonical order so the
/// result does not depend on the order of the list.
inline ImagingResult combine_alphas(const std::vector<ImagingResult>& results) {
  if (results.empty()) throw PreconditionError("combine_alphas: no inputs");
  for (const auto& r : results)
    if (!(r.grid == results[0].grid) || r.kind != results[0].kind || r.values.size() != results[0].values.size())
      throw PreconditionError("combine_alphas: mismatched grids or functional kinds");
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = results[a];
    const auto& rb = results[b];
    if (ra.alphas != rb.alphas) return ra.alphas < rb.alphas;
    return ra.values < rb.values;
  });
  ImagingResult out;
  out.grid = results[0].grid;
  out.kind = results[0].kind;
  out.values.assign(out.grid.size(), 0.0);
  for (std::size_t o : order) {
    const auto& r = results[o];
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += r.values[i];
    out.alphas.insert(out.alphas.end(), r.alphas.begin(), r.alphas.end());
    out.provenance += (out.provenance.empty() ? "" : "+") + r.provenance;
  }
  const double inv = static_cast<double>(results.size());
  for (double& v : out.values) v /= inv;
  return out;
}

// ---------------------------------------------------------------- resolution checks

struct ResolutionReport {
  Side side = Side::lower;
  Point z{};
  double h = 0.0;
  /// I_L(z) or I_U(z) from synthesized measurements at height h.
  double i_value = 0.0;
  /// Lower side: the Rayleigh-coefficient form of the adjoint solution.
  /// Upper side: the volume (penetrable) or Rayleigh (sound-soft) form driven by F^L.
  double adjoint_value = 0.0;
  /// Upper penetrable only: the same form with F^U driving the adjoint problem.
  double adjoint_value_fu = std::numeric_limits<double>::quiet_NaN();
  /// Residual of the adjoint solve (boundary residual for sound-soft scenes).
  double adjoint_residual = 0.0;
};

/// Solves every propagating mode once, then checks I(z) against adjoint solves
/// at any point and measurement height.
class ResolutionChecker {
 public:
  ResolutionChecker(const Scene& scene, const ModeSet& modes, const SolverSettings& settings = {},
                    std::size_t receivers = 101)
      : scene_(scene), modes_(modes), receivers_(receivers) {
    if (const auto* p = std::get_if<PenetrableScene>(&scene_)) {
      pen_ = std::make_shared<PenetrableSolver>(*p, modes_, settings);
      response_ = detail::solve_modes(*pen_, modes_, settings.threads);
    } else {
      soft_ = std::make_shared<SoundSoftSolver>(std::get<SoundSoftScene>(scene_), modes_, settings);
      response_ = detail::solve_modes(*soft_, modes_, settings.threads);
    }
  }

  const ScatteringResponse& response() const { return response_; }
  const ModeSet& modes() const { return modes_; }

  double i_value(Point z, double h, Side side) const {
    const auto meas = measurements_from_response(response_, vertical_extent(scene_), side, h, receivers_);
    if (!(std::abs(z.x2) < h)) throw PreconditionError("probe point must lie between the measurement lines");
    return image_points(meas, modes_, {z})[0];
  }

  ResolutionReport check(Point z, double h, Side side) const {
    ResolutionReport rep;
    rep.side = side;
    rep.z = z;
    rep.h = h;
    rep.i_value = i_value(z, h, side);
    const double L = modes_.period();
    auto fl = [&](Point y) { return psf_eval(PsfKind::lower, y, z, modes_); };
    auto fu = [&](Point y) { return psf_eval(PsfKind::upper, y, z, modes_); };
    if (pen_) {
      const auto& g = pen_->grid();
      auto sample = [&](auto&& f) {
        CVector v(g.unknowns());
        for (std::size_t u = 0; u < v.size(); ++u) v[u] = f(g.unknown_center(u));
        return v;
      };
      const auto sol_l = pen_->solve_incident(sample(fl), 0);
      rep.adjoint_residual = sol_l.residual;
      if (side == Side::lower) {
        rep.adjoint_value = L * L * rayleigh_energy(sol_l.upper, sol_l.lower);
      } else {
        // Lambda Im int k^2 (1 - gamma) conj(F + v^s) F^U, with F + v^s the total adjoint field
        const double k2 = modes_.wavenumber() * modes_.wavenumber();
        const auto fu_s = sample(fu);
        auto volume = [&](const CVector& total) {
          cplx acc = 0.0;
          for (std::size_t u = 0; u < total.size(); ++u) acc += -g.contrast[u] * std::conj(total[u]) * fu_s[u];
          return L * std::imag(acc * (k2 * g.h * g.h));
        };
        rep.adjoint_value = volume(sol_l.total);
        const auto sol_u = pen_->solve_incident(fu_s, 0);
        rep.adjoint_value_fu = volume(sol_u.total);
      }
    } else {
      const std::function<cplx(Point)> data = [&](Point y) { return -fl(y); };
      const auto psi = soft_->solve_dirichlet(data, 0);
      rep.adjoint_residual = psi.residual;
      if (side == Side::lower) {
        rep.adjoint_value = 2.0 * L * L * rayleigh_energy(psi.upper, psi.lower);
      } else {
        // -Lambda Im int_{dD} (conj(psi) dF^U/dnu - F^U d conj(psi)/dnu), moved onto Gamma_{+H}
        const cplx I(0.0, 1.0);
        cplx acc = 0.0;
        for (long m = modes_.first_propagating(); m <= modes_.last_propagating(); ++m) {
          const double b = modes_.beta_n(m).real();
          const cplx f = I / (2.0 * L * b) * std::polar(1.0, -modes_.alpha_n(m) * z.x1 - b * z.x2);
          acc += b * std::conj(psi.upper[m]) * f;
        }
        rep.adjoint_value = -L * std::imag(2.0 * I * L * acc);
      }
    }
    return rep;
  }

 private:
  double rayleigh_energy(const RayleighCoefficients& up, const RayleighCoefficients& lo) const {
    double acc = 0.0;
    for (long n = modes_.first_propagating(); n <= modes_.last_propagating(); ++n)
      acc += modes_.beta_n(n).real() * (std::norm(up[n]) + std::norm(lo[n]));
    return acc;
  }

  Scene scene_;
  ModeSet modes_;
  std::size_t receivers_;
  std::shared_ptr<PenetrableSolver> pen_;
  std::shared_ptr<SoundSoftSolver> soft_;
  ScatteringResponse response_{modes_, {}};
};

inline ResolutionReport resolution_check_penetrable(const PenetrableScene& scene, const GratingParams& params,
                                                    Point z, double h, Side side = Side::lower,
                                                    const SolverSettings& settings = {}) {
  const Scene s = scene;
  const auto modes = build_mode_set(params, measurement_truncation(s, params, h));
  return ResolutionChecker(s, modes, settings).check(z, h, side);
}

inline ResolutionReport resolution_check_soundsoft(const SoundSoftScene& scene, const GratingParams& params,
                                                   Point z, double h, Side side = Side::lower,
                                                   const SolverSettings& settings = {}) {
  const Scene s = scene;
  const auto modes = build_mode_set(params, measurement_truncation(s, params, h));
  return ResolutionChecker(s, modes, settings).check(z, h, side);
}

}  // namespace qprtm
