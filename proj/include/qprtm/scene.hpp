#pragma once

// Obstacle geometry: parametric circle/kite/peanut curves, periodic contrast
// sampling for penetrable scenes, and boundary quadrature for sound-soft scenes.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/modes.hpp"

namespace qprtm {

enum class CurveFamily { circle, kite, peanut };

inline const char* to_string(CurveFamily f) {
  switch (f) {
    case CurveFamily::circle: return "circle";
    case CurveFamily::kite: return "kite";
    case CurveFamily::peanut: return "peanut";
  }
  return "?";
}

inline CurveFamily parse_curve_family(const std::string& s) {
  if (s == "circle") return CurveFamily::circle;
  if (s == "kite") return CurveFamily::kite;
  if (s == "peanut") return CurveFamily::peanut;
  throw ConfigError("unknown curve family '" + s + "'");
}

/// Position, first and second t-derivatives, and outward unit normal.
struct CurveSample {
  Point position;
  Point tangent;
  Point second;
  Point normal;
};

struct ParametricCurve {
  CurveFamily family = CurveFamily::circle;
  double scale = 1.0;
  Point center{};

  CurveSample at(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    const double r = scale;
    Point p, d1, d2;
    switch (family) {
      case CurveFamily::circle:
        p = {r * c, r * s};
        d1 = {-r * s, r * c};
        d2 = {-r * c, -r * s};
        break;
      case CurveFamily::kite: {
        const double c2 = std::cos(2 * t), s2 = std::sin(2 * t);
        p = {r * (1.1 * c + 0.625 * c2 - 0.625), r * 1.5 * s};
        d1 = {r * (-1.1 * s - 1.25 * s2), r * 1.5 * c};
        d2 = {r * (-1.1 * c - 2.5 * c2), -r * 1.5 * s};
        break;
      }
      case CurveFamily::peanut: {
        const double c3 = std::cos(3 * t), s3 = std::sin(3 * t);
        p = {c + r * c3, s + r * s3};
        d1 = {-s - 3 * r * s3, c + 3 * r * c3};
        d2 = {-c - 9 * r * c3, -s - 9 * r * s3};
        break;
      }
    }
    const double j = norm(d1);
    if (!(j > 1e-14)) throw GeometryError("degenerate tangent on curve");
    // all three families are traversed counterclockwise
    return {p + center, d1, d2, {d1.x2 / j, -d1.x1 / j}};
  }

  Point position(double t) const { return at(t).position; }

  /// Dense counterclockwise polygon with n vertices.
  std::vector<Point> polygon(int n = 4096) const {
    std::vector<Point> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = position(2.0 * std::numbers::pi * i / n);
    return v;
  }
};

struct BoundingBox {
  double x1_min, x1_max, x2_min, x2_max;
};

inline BoundingBox bounding_box(const ParametricCurve& curve, int n = 4096) {
  BoundingBox b{INFINITY, -INFINITY, INFINITY, -INFINITY};
  for (const auto& p : curve.polygon(n)) {
    b.x1_min = std::min(b.x1_min, p.x1);
    b.x1_max = std::max(b.x1_max, p.x1);
    b.x2_min = std::min(b.x2_min, p.x2);
    b.x2_max = std::max(b.x2_max, p.x2);
  }
  return b;
}

/// Winding number of a closed polygon around x.
inline int winding_number(const std::vector<Point>& poly, Point x) {
  int w = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i], b = poly[(i + 1) % n];
    const double cross = (b.x1 - a.x1) * (x.x2 - a.x2) - (x.x1 - a.x1) * (b.x2 - a.x2);
    if (a.x2 <= x.x2) {
      if (b.x2 > x.x2 && cross > 0) ++w;
    } else if (b.x2 <= x.x2 && cross < 0) {
      --w;
    }
  }
  return w;
}

/// Distance from x to the curve: dense sampling then golden-section refinement.
inline double distance_to_curve(const ParametricCurve& curve, Point x, int samples = 2048) {
  const double dt = 2.0 * std::numbers::pi / samples;
  double best = INFINITY;
  double tbest = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = i * dt;
    const double d = norm(curve.position(t) - x);
    if (d < best) {
      best = d;
      tbest = t;
    }
  }
  double a = tbest - dt, b = tbest + dt;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double t) { return norm(curve.position(t) - x); };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::min(best, std::min(fc, fd));
}

namespace detail {

inline void check_fits_cell(const ParametricCurve& curve, double period) {
  const auto b = bounding_box(curve);
  if (!(b.x1_min > -0.5 * period && b.x1_max < 0.5 * period))
    throw GeometryError("curve does not fit strictly inside the periodic cell");
}

}  // namespace detail

/// Cell contrast rule: midpoint classification, or the covered area fraction
/// on cells cut by the interface.
enum class ContrastSampling { midpoint, area_fraction };

struct PenetrableScene {
  ParametricCurve curve;
  ContrastSampling sampling = ContrastSampling::midpoint;
  double gamma_in = 1.5;
  double period = 2.0 * std::numbers::pi;
  /// Volume grid cells per axis over the bounding box.
  int grid = 96;

  void validate() const {
    if (!(gamma_in > 0.0)) throw PreconditionError("interior contrast must be > 0");
    if (grid < 4) throw PreconditionError("volume grid must have at least 4 cells per axis");
    detail::check_fits_cell(curve, period);
  }

  /// max |x2| over the support.
  double vertical_extent() const {
    const auto b = bounding_box(curve);
    return std::max(std::abs(b.x2_min), std::abs(b.x2_max));
  }
};

/// Cell reduction x1 -> [-Lambda/2, Lambda/2).
inline double reduce_to_cell(double x1, double period) {
  return x1 - period * std::floor(x1 / period + 0.5);
}

/// Contrast at x with periodic extension in x1. Polygon edges are bucketed
/// into horizontal bands so each inside test only visits nearby edges.
class ContrastSampler {
 public:
  explicit ContrastSampler(const PenetrableScene& scene, int bands = 512)
      : scene_(scene), poly_(scene.curve.polygon()), box_(bounding_box(scene.curve)),
        bands_(static_cast<std::size_t>(bands)) {
    band_height_ = (box_.x2_max - box_.x2_min) / bands;
    const std::size_t n = poly_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = poly_[i], b = poly_[(i + 1) % n];
      const int lo = band_of(std::min(a.x2, b.x2)), hi = band_of(std::max(a.x2, b.x2));
      for (int k = lo; k <= hi; ++k) bands_[static_cast<std::size_t>(k)].push_back(i);
    }
  }

  double operator()(Point x) const {
    const Point r{reduce_to_cell(x.x1, scene_.period), x.x2};
    if (r.x1 < box_.x1_min || r.x1 > box_.x1_max || r.x2 < box_.x2_min || r.x2 > box_.x2_max)
      return 1.0;
    int w = 0;
    const std::size_t n = poly_.size();
    for (std::size_t i : bands_[static_cast<std::size_t>(band_of(r.x2))]) {
      const Point a = poly_[i], b = poly_[(i + 1) % n];
      const double cross = (b.x1 - a.x1) * (r.x2 - a.x2) - (r.x1 - a.x1) * (b.x2 - a.x2);
      if (a.x2 <= r.x2) {
        if (b.x2 > r.x2 && cross > 0) ++w;
      } else if (b.x2 <= r.x2 && cross < 0) {
        --w;
      }
    }
    return w != 0 ? scene_.gamma_in : 1.0;
  }

 private:
  int band_of(double x2) const {
    const int k = static_cast<int>((x2 - box_.x2_min) / band_height_);
    return std::clamp(k, 0, static_cast<int>(bands_.size()) - 1);
  }

  PenetrableScene scene_;
  std::vector<Point> poly_;
  BoundingBox box_;
  std::vector<std::vector<std::size_t>> bands_;
  double band_height_ = 1.0;
};

inline double gamma_at(const PenetrableScene& scene, Point x) { return ContrastSampler(scene)(x); }

struct SoundSoftScene {
  ParametricCurve curve;
  double period = 2.0 * std::numbers::pi;
  int nodes = 256;

  void validate() const {
    if (nodes < 32 || nodes % 2) throw PreconditionError("boundary node count must be even and >= 32");
    detail::check_fits_cell(curve, period);
  }

  double vertical_extent() const {
    const auto b = bounding_box(curve);
    return std::max(std::abs(b.x2_min), std::abs(b.x2_max));
  }
};

/// Uniform-t periodic trapezoid rule on the boundary.
struct BoundaryRule {
  std::vector<double> t;
  std::vector<Point> position;
  std::vector<Point> tangent;
  std::vector<Point> second;
  std::vector<Point> normal;
  std::vector<double> jacobian;  // |z'(t)|
  std::vector<double> weight;    // (2 pi / n) |z'(t)|
  std::vector<double> curvature;

  std::size_t size() const { return t.size(); }
  double length() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }
};

inline BoundaryRule boundary_rule(const SoundSoftScene& scene) {
  if (scene.nodes < 32) throw PreconditionError("boundary rule needs at least 32 nodes");
  const int n = scene.nodes;
  BoundaryRule r;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    const auto s = scene.curve.at(t);
    const double j = norm(s.tangent);
    r.t.push_back(t);
    r.position.push_back(s.position);
    r.tangent.push_back(s.tangent);
    r.second.push_back(s.second);
    r.normal.push_back(s.normal);
    r.jacobian.push_back(j);
    r.weight.push_back(2.0 * std::numbers::pi / n * j);
    r.curvature.push_back((s.tangent.x1 * s.second.x2 - s.tangent.x2 * s.second.x1) / (j * j * j));
  }
  return r;
}

}  // namespace qprtm
