#pragma once

// Experiment configuration (line-based key=value with [section] headers),
// end-to-end runners, image output (CSV + 8-bit PGM), and localization metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/measurement.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/noise.hpp"
#include "qprtm/psf.hpp"
#include "qprtm/rtm.hpp"
#include "qprtm/scene.hpp"

namespace qprtm {

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  // [grating]
  double period = 2.0 * std::numbers::pi;
  double wavenumber = 5.2 * std::numbers::pi;
  std::vector<double> thetas{0.5 * std::numbers::pi};
  // [scene]
  bool sound_soft = false;
  ParametricCurve curve{CurveFamily::circle, 0.8, {0.0, 0.0}};
  double gamma_in = 1.5;
  int grid = 96;
  ContrastSampling sampling = ContrastSampling::midpoint;
  int nodes = 256;
  // [measurement]
  Side side = Side::lower;
  double h = 7.0;
  std::size_t receivers = 101;
  // [probe]
  std::optional<ProbeGrid> probe;  // default: centered one-period square, 101 x 101
  // [noise]
  std::vector<double> mu{0.0};
  std::uint64_t seed = 1;
  // [solver]
  SolverSettings solver;
  // [output]
  std::string output = "qprtm-out";
  double quantile = 0.9;
  // [psf]
  PsfKind psf_kind = PsfKind::cosine;
  Point psf_source{0.0, 0.0};
  // [forward]
  long forward_mode = 0;

  /// theta = pi/2 + m pi/16.
  static double theta_of(long m) { return 0.5 * std::numbers::pi + m * std::numbers::pi / 16.0; }

  ProbeGrid probe_grid() const { return probe ? *probe : ProbeGrid::centered(period); }

  GratingParams params(std::size_t i) const { return {period, wavenumber, thetas.at(i)}; }

  Scene scene() const {
    if (sound_soft) return SoundSoftScene{curve, period, nodes};
    PenetrableScene p;
    p.curve = curve;
    p.sampling = sampling;
    p.gamma_in = gamma_in;
    p.period = period;
    p.grid = grid;
    return p;
  }
};

inline const char* to_string(PsfKind k) {
  switch (k) {
    case PsfKind::lower: return "lower";
    case PsfKind::upper: return "upper";
    case PsfKind::cosine: return "cosine";
    case PsfKind::sine: return "sine";
  }
  return "?";
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_plain(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return *end == '\0' && std::isfinite(out);
}

}  // namespace detail

/// Numbers may carry a pi factor and a divisor: "5.2pi", "-pi", "2*pi", "pi/16".
inline std::optional<double> parse_number(const std::string& text) {
  std::string s = detail::trim(text);
  double div = 1.0;
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    if (!detail::parse_plain(detail::trim(s.substr(slash + 1)), div) || div == 0.0) return std::nullopt;
    s = detail::trim(s.substr(0, slash));
  }
  double v = 0.0;
  if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
    std::string c = detail::trim(s.substr(0, s.size() - 2));
    if (!c.empty() && c.back() == '*') c = detail::trim(c.substr(0, c.size() - 1));
    double coef = 1.0;
    if (c.empty() || c == "+") coef = 1.0;
    else if (c == "-") coef = -1.0;
    else if (!detail::parse_plain(c, coef)) return std::nullopt;
    v = coef * std::numbers::pi;
  } else if (!detail::parse_plain(s, v)) {
    return std::nullopt;
  }
  return v / div;
}

/// Parses and validates a config. All problems found are reported together,
/// one per line, prefixed with their line number.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string> errors;
  std::istringstream is(text);
  std::string raw, section;
  int lineno = 0;
  std::optional<std::vector<double>> theta_m, theta_list;
  ProbeGrid probe = ProbeGrid::centered(cfg.period);
  bool probe_set[6] = {false, false, false, false, false, false};
  std::map<std::string, int> seen;

  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto err = [&](const std::string& msg) { errors.push_back("line " + std::to_string(lineno) + ": " + msg); };
    if (line.front() == '[') {
      if (line.back() != ']') {
        err("malformed section header '" + line + "'");
        continue;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"grating", "scene", "measurement", "probe", "noise",
                                    "solver",  "output", "psf",        "forward"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) err("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      err("expected key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    if (seen.count(full)) err("duplicate key '" + full + "' (first on line " + std::to_string(seen[full]) + ")");
    seen[full] = lineno;

    auto num = [&](double& out) {
      if (auto v = parse_number(val)) out = *v;
      else err("key '" + key + "': malformed number '" + val + "'");
    };
    auto integer = [&](auto& out) {
      double v = 0.0;
      using T = std::remove_reference_t<decltype(out)>;
      if (auto p = parse_number(val); p && std::floor(*p) == *p && std::abs(*p) < 1e15 &&
                                      (std::is_signed_v<T> || *p >= 0.0)) {
        v = *p;
        out = static_cast<T>(v);
      } else {
        err("key '" + key + "': malformed integer '" + val + "'");
      }
    };
    auto list = [&]() {
      std::vector<double> out;
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (auto v = parse_number(item)) out.push_back(*v);
        else err("key '" + key + "': malformed number '" + detail::trim(item) + "'");
      }
      if (out.empty()) err("key '" + key + "': empty list");
      return out;
    };
    auto choice = [&](std::initializer_list<const char*> opts) -> bool {
      for (const char* o : opts)
        if (val == o) return true;
      std::string all;
      for (const char* o : opts) all += (all.empty() ? "" : "|") + std::string(o);
      err("key '" + key + "': expected one of " + all + ", got '" + val + "'");
      return false;
    };

    if (section == "grating") {
      if (key == "period") num(cfg.period);
      else if (key == "wavenumber") num(cfg.wavenumber);
      else if (key == "theta_m") theta_m = list();
      else if (key == "theta") theta_list = list();
      else err("unknown key '" + full + "'");
    } else if (section == "scene") {
      if (key == "kind") {
        if (choice({"penetrable", "soundsoft"})) cfg.sound_soft = val == "soundsoft";
      } else if (key == "family") {
        if (choice({"circle", "kite", "peanut"})) cfg.curve.family = parse_curve_family(val);
      } else if (key == "scale") num(cfg.curve.scale);
      else if (key == "center_x1") num(cfg.curve.center.x1);
      else if (key == "center_x2") num(cfg.curve.center.x2);
      else if (key == "gamma") num(cfg.gamma_in);
      else if (key == "grid") integer(cfg.grid);
      else if (key == "nodes") integer(cfg.nodes);
      else if (key == "sampling") {
        if (choice({"midpoint", "area_fraction"}))
          cfg.sampling = val == "midpoint" ? ContrastSampling::midpoint : ContrastSampling::area_fraction;
      } else err("unknown key '" + full + "'");
    } else if (section == "measurement") {
      if (key == "side") {
        if (choice({"lower", "upper"})) cfg.side = parse_side(val);
      } else if (key == "h") num(cfg.h);
      else if (key == "receivers") integer(cfg.receivers);
      else err("unknown key '" + full + "'");
    } else if (section == "probe") {
      static const char* keys[] = {"z1_min", "z1_max", "z2_min", "z2_max", "n1", "n2"};
      const auto it = std::find(std::begin(keys), std::end(keys), key);
      if (it == std::end(keys)) {
        err("unknown key '" + full + "'");
        continue;
      }
      const auto idx = static_cast<std::size_t>(it - std::begin(keys));
      probe_set[idx] = true;
      switch (idx) {
        case 0: num(probe.z1_min); break;
        case 1: num(probe.z1_max); break;
        case 2: num(probe.z2_min); break;
        case 3: num(probe.z2_max); break;
        case 4: integer(probe.n1); break;
        default: integer(probe.n2); break;
      }
    } else if (section == "noise") {
      if (key == "mu") cfg.mu = list();
      else if (key == "seed") integer(cfg.seed);
      else err("unknown key '" + full + "'");
    } else if (section == "solver") {
      if (key == "tolerance") num(cfg.solver.gmres_tolerance);
      else if (key == "restart") integer(cfg.solver.gmres_restart);
      else if (key == "max_iterations") integer(cfg.solver.gmres_max_iterations);
      else if (key == "dense_threshold") integer(cfg.solver.dense_threshold);
      else if (key == "coupling") num(cfg.solver.coupling);
      else if (key == "threads") integer(cfg.solver.threads);
      else err("unknown key '" + full + "'");
    } else if (section == "output") {
      if (key == "directory") cfg.output = val;
      else if (key == "quantile") num(cfg.quantile);
      else err("unknown key '" + full + "'");
    } else if (section == "psf") {
      if (key == "kind") {
        if (choice({"lower", "upper", "cosine", "sine"}))
          cfg.psf_kind = val == "lower" ? PsfKind::lower : val == "upper" ? PsfKind::upper
                         : val == "cosine" ? PsfKind::cosine : PsfKind::sine;
      } else if (key == "y1") num(cfg.psf_source.x1);
      else if (key == "y2") num(cfg.psf_source.x2);
      else err("unknown key '" + full + "'");
    } else if (section == "forward") {
      if (key == "mode") integer(cfg.forward_mode);
      else err("unknown key '" + full + "'");
    } else {
      err("key '" + key + "' outside any known section");
    }
  }

  auto range = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back("range: " + msg);
  };
  if (theta_m && theta_list) errors.push_back("range: give either grating.theta_m or grating.theta, not both");
  if (theta_m) {
    cfg.thetas.clear();
    for (double m : *theta_m) {
      if (std::floor(m) != m) errors.push_back("range: grating.theta_m entries must be integers");
      cfg.thetas.push_back(ExperimentConfig::theta_of(static_cast<long>(m)));
    }
  } else if (theta_list) {
    cfg.thetas = *theta_list;
  }
  range(cfg.period > 0.0, "grating.period must be > 0");
  range(cfg.wavenumber > 0.0, "grating.wavenumber must be > 0");
  for (double t : cfg.thetas) range(t > 0.0 && t < std::numbers::pi, "incident angles must lie in (0, pi)");
  range(cfg.curve.scale > 0.0, "scene.scale must be > 0");
  range(cfg.gamma_in > 0.0, "scene.gamma must be > 0");
  range(cfg.grid >= 4, "scene.grid must be >= 4");
  range(cfg.nodes >= 32 && cfg.nodes % 2 == 0, "scene.nodes must be even and >= 32");
  range(cfg.h > 0.0, "measurement.h must be > 0");
  range(cfg.receivers >= 2, "measurement.receivers must be >= 2");
  for (double m : cfg.mu) range(m >= 0.0, "noise.mu entries must be >= 0");
  range(cfg.quantile > 0.0 && cfg.quantile < 1.0, "output.quantile must lie in (0, 1)");
  range(cfg.solver.gmres_tolerance > 0.0, "solver.tolerance must be > 0");
  range(cfg.solver.gmres_restart >= 1, "solver.restart must be >= 1");
  range(cfg.solver.gmres_max_iterations >= 1, "solver.max_iterations must be >= 1");
  range(cfg.solver.coupling >= 0.0, "solver.coupling must be >= 0");

  if (errors.empty()) {
    const ProbeGrid def = ProbeGrid::centered(cfg.period);
    if (!probe_set[0]) probe.z1_min = def.z1_min;
    if (!probe_set[1]) probe.z1_max = def.z1_max;
    if (!probe_set[2]) probe.z2_min = def.z2_min;
    if (!probe_set[3]) probe.z2_max = def.z2_max;
    if (std::any_of(std::begin(probe_set), std::end(probe_set), [](bool b) { return b; })) cfg.probe = probe;
    try {
      const Scene sc = cfg.scene();
      std::visit([](const auto& s) { s.validate(); }, sc);
      range(cfg.h > vertical_extent(sc), "measurement.h must exceed the scene's vertical extent");
      cfg.probe_grid().validate(cfg.period, cfg.h);
    } catch (const Error& e) {
      errors.push_back(std::string("range: ") + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  // Wood's anomaly rejection propagates as WoodAnomalyError
  for (std::size_t i = 0; i < cfg.thetas.size(); ++i) {
    const auto p = cfg.params(i);
    build_mode_set(p, measurement_truncation(cfg.scene(), p, cfg.h));
  }
  return cfg;
}

/// Canonical config text; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[grating]\nperiod = " << fmt17(c.period) << "\nwavenumber = " << fmt17(c.wavenumber) << "\ntheta = ";
  for (std::size_t i = 0; i < c.thetas.size(); ++i) os << (i ? ", " : "") << fmt17(c.thetas[i]);
  os << "\n\n[scene]\nkind = " << (c.sound_soft ? "soundsoft" : "penetrable") << "\nfamily = " << to_string(c.curve.family)
     << "\nscale = " << fmt17(c.curve.scale) << "\ncenter_x1 = " << fmt17(c.curve.center.x1)
     << "\ncenter_x2 = " << fmt17(c.curve.center.x2) << "\ngamma = " << fmt17(c.gamma_in) << "\ngrid = " << c.grid
     << "\nsampling = " << (c.sampling == ContrastSampling::midpoint ? "midpoint" : "area_fraction")
     << "\nnodes = " << c.nodes;
  os << "\n\n[measurement]\nside = " << to_string(c.side) << "\nh = " << fmt17(c.h) << "\nreceivers = " << c.receivers;
  const auto g = c.probe_grid();
  os << "\n\n[probe]\nz1_min = " << fmt17(g.z1_min) << "\nz1_max = " << fmt17(g.z1_max) << "\nz2_min = " << fmt17(g.z2_min)
     << "\nz2_max = " << fmt17(g.z2_max) << "\nn1 = " << g.n1 << "\nn2 = " << g.n2;
  os << "\n\n[noise]\nmu = ";
  for (std::size_t i = 0; i < c.mu.size(); ++i) os << (i ? ", " : "") << fmt17(c.mu[i]);
  os << "\nseed = " << c.seed;
  os << "\n\n[solver]\ntolerance = " << fmt17(c.solver.gmres_tolerance) << "\nrestart = " << c.solver.gmres_restart
     << "\nmax_iterations = " << c.solver.gmres_max_iterations << "\ndense_threshold = " << c.solver.dense_threshold
     << "\ncoupling = " << fmt17(c.solver.coupling) << "\nthreads = " << c.solver.threads;
  os << "\n\n[output]\ndirectory = " << c.output << "\nquantile = " << fmt17(c.quantile);
  os << "\n\n[psf]\nkind = " << to_string(c.psf_kind) << "\ny1 = " << fmt17(c.psf_source.x1)
     << "\ny2 = " << fmt17(c.psf_source.x2);
  os << "\n\n[forward]\nmode = " << c.forward_mode << "\n";
  return os.str();
}

/// Hash of the canonical text with the output directory and thread count cleared.
inline std::string config_hash(ExperimentConfig c) {
  c.output.clear();
  c.solver.threads = 0;
  return hex64(fnv1a64(to_text(c)));
}

// ---------------------------------------------------------------- output

inline std::string image_csv(const ImagingResult& r) {
  std::string out = "z1,z2,value\n";
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const Point z = r.grid.point(i);
    out += fmt17(z.x1) + "," + fmt17(z.x2) + "," + fmt17(r.values[i]) + "\n";
  }
  return out;
}

/// Binary 8-bit PGM, rows from the largest z2 down; [min, max] maps linearly to [0, 255].
inline std::string render_heatmap(const ImagingResult& r) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : r.values) {
    if (!std::isfinite(v)) throw PreconditionError("render_heatmap: non-finite image value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const int n1 = r.grid.n1, n2 = r.grid.n2;
  std::string out = "P5\n" + std::to_string(n1) + " " + std::to_string(n2) + "\n255\n";
  const std::size_t head = out.size();
  out.resize(head + static_cast<std::size_t>(n1) * n2);
  for (int row = 0; row < n2; ++row) {
    const int j = n2 - 1 - row;
    for (int i = 0; i < n1; ++i) {
      const double v = r.at(i, j);
      const int px = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 128;
      out[head + static_cast<std::size_t>(row) * n1 + i] = static_cast<char>(static_cast<unsigned char>(px));
    }
  }
  return out;
}

inline std::string image_sidecar(const ImagingResult& r) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : r.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::ostringstream os;
  os << "kind=" << to_string(r.kind) << "\nz1_min=" << fmt17(r.grid.z1_min) << "\nz1_max=" << fmt17(r.grid.z1_max)
     << "\nz2_min=" << fmt17(r.grid.z2_min) << "\nz2_max=" << fmt17(r.grid.z2_max) << "\nn1=" << r.grid.n1
     << "\nn2=" << r.grid.n2 << "\nmin=" << fmt17(lo) << "\nmax=" << fmt17(hi) << "\nalphas=";
  for (std::size_t i = 0; i < r.alphas.size(); ++i) os << (i ? "," : "") << fmt17(r.alphas[i]);
  os << "\nprovenance=" << r.provenance << "\n";
  return os.str();
}

// ---------------------------------------------------------------- localization

struct LocalizationMetric {
  double quantile = 0.9;
  double mean_distance = 0.0;
  double max_distance = 0.0;
  std::size_t points = 0;
};

/// Distance to the nearest periodic copy of the curve.
inline double distance_to_array(const ParametricCurve& curve, double period, Point z) {
  double d = INFINITY;
  for (int s = -1; s <= 1; ++s) d = std::min(d, distance_to_curve(curve, {z.x1 - s * period, z.x2}));
  return d;
}

/// Distances to the curve array of the super-level set {(I - min)/(max - min) >= q}.
inline LocalizationMetric localization(const ImagingResult& r, const ParametricCurve& curve, double period, double q) {
  if (!(q > 0.0 && q < 1.0)) throw PreconditionError("localization quantile must lie in (0, 1)");
  double lo = INFINITY, hi = -INFINITY;
  for (double v : r.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  LocalizationMetric m;
  m.quantile = q;
  if (!(hi > lo)) throw PreconditionError("localization: constant image has an empty level set");
  double sum = 0.0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    if ((r.values[i] - lo) / (hi - lo) < q) continue;
    const double d = distance_to_array(curve, period, r.grid.point(i));
    sum += d;
    m.max_distance = std::max(m.max_distance, d);
    ++m.points;
  }
  if (m.points == 0) throw PreconditionError("localization: empty level set");
  m.mean_distance = sum / static_cast<double>(m.points);
  return m;
}

// ---------------------------------------------------------------- runners

struct RunOptions {
  std::filesystem::path output;  // empty: config value
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::filesystem::path> cache_dir;  // empty optional: default directory
  bool use_cache = true;
};

struct ExperimentOutcome {
  std::filesystem::path directory;
  std::vector<double> mu;
  std::vector<LocalizationMetric> localization;  // per mu
  std::vector<NoiseReport> noise;                // per mu, averaged over alphas
  std::vector<ImagingResult> images;             // per mu
};

inline std::string mu_tag(double mu) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "mu%g", mu);
  return buf;
}

namespace detail {

inline ExperimentConfig apply_options(ExperimentConfig cfg, const RunOptions& opt) {
  if (!opt.output.empty()) cfg.output = opt.output.string();
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.solver.threads = *opt.threads;
  return cfg;
}

inline std::optional<MeasurementCache> make_cache(const RunOptions& opt) {
  if (!opt.use_cache) return std::nullopt;
  return MeasurementCache(opt.cache_dir ? *opt.cache_dir : MeasurementCache::default_dir());
}

inline std::uint64_t noise_seed(std::uint64_t seed, std::size_t alpha_index, std::size_t mu_index) {
  return seed + 7919ull * alpha_index + 104729ull * mu_index;
}

}  // namespace detail

/// Measurement matrices for every configured incident angle, in config order.
inline std::vector<MeasurementSet> measure_all(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto cache = detail::make_cache(opt);
  const Scene scene = cfg.scene();
  std::vector<MeasurementSet> out;
  for (std::size_t i = 0; i < cfg.thetas.size(); ++i)
    out.push_back(synthesize_measurements(scene, cfg.params(i), cfg.side, cfg.h, cfg.receivers, cfg.solver,
                                          cache ? &*cache : nullptr));
  return out;
}

/// Measure (or load), add noise per mu, image, average over alphas, write artifacts.
inline ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& opt = {}) {
  const auto cfg = detail::apply_options(config, opt);
  ExperimentOutcome out;
  out.directory = cfg.output;
  std::filesystem::create_directories(out.directory);
  std::ostringstream manifest;
  manifest << "config_hash=" << config_hash(cfg) << "\n";
  manifest << "kind=" << to_string(cfg.side) << "\nalphas=" << cfg.thetas.size() << "\nseed=" << cfg.seed << "\n";
  try {
    write_file_atomic(out.directory / "config.cfg", to_text(cfg));
    const auto meas = measure_all(cfg, opt);
    for (std::size_t i = 0; i < meas.size(); ++i) {
      const std::string name = "measurements/alpha_" + std::to_string(i) + ".csv";
      write_measurement(out.directory / name, meas[i]);
      manifest << "measurement." << i << "=" << name << "\n";
    }
    const auto grid = cfg.probe_grid();
    std::vector<ModeSet> modes;
    for (const auto& m : meas) modes.push_back(build_mode_set(m.params(), m.truncation));
    std::string table = "mu,sigma,signal_l2,noise_l2\n";
    for (std::size_t k = 0; k < cfg.mu.size(); ++k) {
      const double mu = cfg.mu[k];
      std::vector<ImagingResult> imgs;
      NoiseReport avg;
      avg.mu = mu;
      avg.seed = cfg.seed;
      for (std::size_t i = 0; i < meas.size(); ++i) {
        auto [noisy, rep] = add_noise(meas[i], mu, detail::noise_seed(cfg.seed, i, k));
        avg.sigma += rep.sigma / static_cast<double>(meas.size());
        avg.signal_level += rep.signal_level / static_cast<double>(meas.size());
        avg.noise_level += rep.noise_level / static_cast<double>(meas.size());
        imgs.push_back(image(noisy, modes[i], grid, cfg.solver.threads));
      }
      auto combined = combine_alphas(imgs);
      const std::string tag = mu_tag(mu);
      write_file_atomic(out.directory / ("image_" + tag + ".csv"), image_csv(combined));
      write_file_atomic(out.directory / ("image_" + tag + ".pgm"), render_heatmap(combined));
      write_file_atomic(out.directory / ("image_" + tag + ".meta"), image_sidecar(combined));
      const auto loc = localization(combined, cfg.curve, cfg.period, cfg.quantile);
      manifest << "image." << tag << "=image_" << tag << ".csv\n";
      manifest << "localization." << tag << ".mean=" << fmt17(loc.mean_distance) << "\n";
      manifest << "localization." << tag << ".max=" << fmt17(loc.max_distance) << "\n";
      table += fmt17(mu) + "," + fmt17(avg.sigma) + "," + fmt17(avg.signal_level) + "," + fmt17(avg.noise_level) + "\n";
      out.mu.push_back(mu);
      out.localization.push_back(loc);
      out.noise.push_back(avg);
      out.images.push_back(std::move(combined));
    }
    write_file_atomic(out.directory / "noise.csv", table);
    manifest << "noise=noise.csv\nstatus=ok\n";
    write_file_atomic(out.directory / "manifest.txt", manifest.str());
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    manifest << "status=error\nerror=" << what << "\n";
    write_file_atomic(out.directory / "manifest.txt", manifest.str());
    throw;
  }
  return out;
}

/// Im F(z, y0) over the probe grid for the configured point spread function.
inline ImagingResult psf_map(const ExperimentConfig& cfg) {
  const auto params = cfg.params(0);
  const auto modes = build_mode_set(params, default_truncation(params, 1.0));
  ImagingResult r;
  r.grid = cfg.probe_grid();
  r.kind = Side::lower;
  r.alphas = {params.alpha()};
  r.provenance = std::string("psf:") + to_string(cfg.psf_kind);
  r.values.resize(r.grid.size());
  for (std::size_t i = 0; i < r.values.size(); ++i)
    r.values[i] = std::imag(psf_eval(cfg.psf_kind, r.grid.point(i), cfg.psf_source, modes));
  return r;
}

}  // namespace qprtm
