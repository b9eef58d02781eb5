#pragma once

// Scattering responses over all propagating incident modes, measurement
// matrices on Gamma_{+-h}, their CSV form, and a content-addressed file cache.

#include <unistd.h>

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qprtm/errors.hpp"
#include "qprtm/forward.hpp"
#include "qprtm/modes.hpp"
#include "qprtm/parallel.hpp"
#include "qprtm/scene.hpp"

namespace qprtm {

using Scene = std::variant<PenetrableScene, SoundSoftScene>;

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string canonical(const ParametricCurve& c) {
  return std::string(to_string(c.family)) + "(" + fmt17(c.scale) + ";" + fmt17(c.center.x1) + ";" +
         fmt17(c.center.x2) + ")";
}

inline std::string canonical(const Scene& scene) {
  if (const auto* p = std::get_if<PenetrableScene>(&scene))
    return "penetrable:" + canonical(p->curve) + ";gamma=" + fmt17(p->gamma_in) +
           ";period=" + fmt17(p->period) + ";grid=" + std::to_string(p->grid) +
           ";sampling=" + (p->sampling == ContrastSampling::midpoint ? "midpoint" : "area_fraction");
  const auto& s = std::get<SoundSoftScene>(scene);
  return "soundsoft:" + canonical(s.curve) + ";period=" + fmt17(s.period) +
         ";nodes=" + std::to_string(s.nodes);
}

inline std::string canonical(const GratingParams& p) {
  return "period=" + fmt17(p.period) + ";k=" + fmt17(p.wavenumber) + ";theta=" + fmt17(p.theta);
}

inline const ParametricCurve& scene_curve(const Scene& scene) {
  return std::visit([](const auto& s) -> const ParametricCurve& { return s.curve; }, scene);
}

inline double scene_period(const Scene& scene) {
  return std::visit([](const auto& s) { return s.period; }, scene);
}

inline double vertical_extent(const Scene& scene) {
  return std::visit([](const auto& s) { return s.vertical_extent(); }, scene);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

/// Rayleigh data of every propagating incident mode, ascending in n.
struct ScatteringResponse {
  ModeSet modes;
  std::vector<ModeResponse> responses;

  const ModeResponse& at(long n) const {
    for (const auto& r : responses)
      if (r.mode == n) return r;
    throw PreconditionError("mode " + std::to_string(n) + " not in the scattering response");
  }
};

namespace detail {

template <class Solver>
ScatteringResponse solve_modes(const Solver& solver, const ModeSet& modes, unsigned threads) {
  const auto ns = modes.propagating();
  ScatteringResponse out{modes, std::vector<ModeResponse>(ns.size())};
  parallel_for(ns.size(), threads, [&](std::size_t i) {
    try {
      out.responses[i] = solver.solve(ns[i]).response();
    } catch (const SolverError& e) {
      throw SolverError("mode " + std::to_string(ns[i]) + ": " + e.what(), e.residual());
    } catch (const Error& e) {
      throw Error("mode " + std::to_string(ns[i]) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace detail

/// Solves the forward problem for every n in B.
inline ScatteringResponse solve_all_modes(const Scene& scene, const ModeSet& modes,
                                          const SolverSettings& settings = {}) {
  if (const auto* p = std::get_if<PenetrableScene>(&scene))
    return detail::solve_modes(PenetrableSolver(*p, modes, settings), modes, settings.threads);
  return detail::solve_modes(SoundSoftSolver(std::get<SoundSoftScene>(scene), modes, settings), modes,
                             settings.threads);
}

/// Truncation used for measurements at height h: evanescent modes below 1e-14 on the line.
inline int measurement_truncation(const Scene& scene, const GratingParams& params, double h) {
  return default_truncation(params, h - vertical_extent(scene));
}

struct MeasurementSet {
  Side side = Side::lower;
  double h = 7.0;
  double period = 2.0 * std::numbers::pi;
  double wavenumber = 0.0;
  double theta = 0.5 * std::numbers::pi;
  double alpha = 0.0;
  int truncation = 0;
  std::size_t receivers = 0;
  std::vector<long> modes;   // column labels, ascending
  std::vector<cplx> values;  // receivers x modes, row-major
  std::string provenance;

  GratingParams params() const { return {period, wavenumber, theta}; }
  std::size_t columns() const { return modes.size(); }
  cplx operator()(std::size_t r, std::size_t c) const { return values[r * modes.size() + c]; }
  cplx& operator()(std::size_t r, std::size_t c) { return values[r * modes.size() + c]; }

  std::size_t column_of(long n) const {
    for (std::size_t c = 0; c < modes.size(); ++c)
      if (modes[c] == n) return c;
    throw PreconditionError("mode " + std::to_string(n) + " not in the measurement set");
  }
  std::vector<cplx> column(std::size_t c) const {
    std::vector<cplx> v(receivers);
    for (std::size_t r = 0; r < receivers; ++r) v[r] = (*this)(r, c);
    return v;
  }
  std::vector<double> abscissas() const { return receiver_abscissas(period, receivers); }
};

/// Receiver traces of every response on the requested line.
inline MeasurementSet measurements_from_response(const ScatteringResponse& resp, double extent, Side side,
                                                 double h, std::size_t receivers,
                                                 const std::string& provenance = {}) {
  if (!(h > extent)) throw PreconditionError("measurement height must exceed the scene's vertical extent");
  if (receivers < 2) throw PreconditionError("need at least two receivers");
  const auto& ms = resp.modes;
  MeasurementSet m;
  m.side = side;
  m.h = h;
  m.period = ms.period();
  m.wavenumber = ms.wavenumber();
  m.theta = ms.params().theta;
  m.alpha = ms.alpha();
  m.truncation = ms.truncation();
  m.receivers = receivers;
  m.provenance = provenance;
  for (const auto& r : resp.responses) m.modes.push_back(r.mode);
  m.values.resize(receivers * m.modes.size());
  for (std::size_t c = 0; c < m.modes.size(); ++c) {
    const auto trace = radiate_trace(resp.responses[c], ms, side, h, receivers, extent);
    for (std::size_t r = 0; r < receivers; ++r) m(r, c) = trace[r];
  }
  return m;
}

inline std::string measurement_key(const Scene& scene, const GratingParams& params, const SolverSettings& settings,
                                   Side side, double h, std::size_t receivers) {
  return canonical(scene) + "|" + canonical(params) + "|" + settings.canonical() + "|side=" + to_string(side) +
         "|h=" + fmt17(h) + "|receivers=" + std::to_string(receivers);
}

// ---------------------------------------------------------------- CSV form

inline std::string to_csv(const MeasurementSet& m) {
  std::ostringstream os;
  os << "qprtm-measurement,1\n";
  os << "period," << fmt17(m.period) << "\n";
  os << "wavenumber," << fmt17(m.wavenumber) << "\n";
  os << "theta," << fmt17(m.theta) << "\n";
  os << "alpha," << fmt17(m.alpha) << "\n";
  os << "side," << to_string(m.side) << "\n";
  os << "h," << fmt17(m.h) << "\n";
  os << "receivers," << m.receivers << "\n";
  os << "truncation," << m.truncation << "\n";
  os << "provenance," << m.provenance << "\n";
  os << "modes";
  for (long n : m.modes) os << "," << n;
  os << "\n";
  for (std::size_t r = 0; r < m.receivers; ++r) {
    for (std::size_t c = 0; c < m.columns(); ++c) {
      if (c) os << ",";
      os << fmt17(m(r, c).real()) << "," << fmt17(m(r, c).imag());
    }
    os << "\n";
  }
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double_field(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw FormatError("bad number '" + s + "' in " + what);
  return v;
}

inline long parse_long_field(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw FormatError("bad integer '" + s + "' in " + what);
  return v;
}

}  // namespace detail

inline MeasurementSet measurement_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  auto next = [&](const char* key) {
    if (!std::getline(is, line)) throw FormatError(std::string("measurement CSV truncated before '") + key + "'");
    auto f = detail::split_csv(line);
    if (f.empty() || f[0] != key) throw FormatError(std::string("measurement CSV: expected '") + key + "'");
    return f;
  };
  auto single = [&](const char* key) {
    auto f = next(key);
    if (f.size() < 2) throw FormatError(std::string("measurement CSV: missing value for '") + key + "'");
    return f;
  };
  if (single("qprtm-measurement")[1] != "1") throw FormatError("unsupported measurement CSV version");
  MeasurementSet m;
  m.period = detail::parse_double_field(single("period")[1], "period");
  m.wavenumber = detail::parse_double_field(single("wavenumber")[1], "wavenumber");
  m.theta = detail::parse_double_field(single("theta")[1], "theta");
  m.alpha = detail::parse_double_field(single("alpha")[1], "alpha");
  try {
    m.side = parse_side(single("side")[1]);
  } catch (const Error& e) {
    throw FormatError(e.what());
  }
  m.h = detail::parse_double_field(single("h")[1], "h");
  m.receivers = static_cast<std::size_t>(detail::parse_long_field(single("receivers")[1], "receivers"));
  m.truncation = static_cast<int>(detail::parse_long_field(single("truncation")[1], "truncation"));
  {
    auto f = next("provenance");
    std::string p;
    for (std::size_t i = 1; i < f.size(); ++i) p += (i > 1 ? "," : "") + f[i];
    m.provenance = p;
  }
  auto mf = next("modes");
  for (std::size_t i = 1; i < mf.size(); ++i) m.modes.push_back(detail::parse_long_field(mf[i], "modes"));
  m.values.resize(m.receivers * m.modes.size());
  for (std::size_t r = 0; r < m.receivers; ++r) {
    if (!std::getline(is, line)) throw FormatError("measurement CSV: missing data row " + std::to_string(r));
    auto f = detail::split_csv(line);
    if (f.size() != 2 * m.modes.size())
      throw FormatError("measurement CSV: row " + std::to_string(r) + " has " + std::to_string(f.size()) +
                        " fields, expected " + std::to_string(2 * m.modes.size()));
    for (std::size_t c = 0; c < m.modes.size(); ++c)
      m(r, c) = {detail::parse_double_field(f[2 * c], "data"), detail::parse_double_field(f[2 * c + 1], "data")};
  }
  return m;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// Writes through a uniquely named temporary and renames it into place.
inline void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  static std::atomic<unsigned long> counter{0};
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp." + std::to_string(static_cast<unsigned long>(::getpid())) + "." + std::to_string(counter++);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline void write_measurement(const std::filesystem::path& p, const MeasurementSet& m) {
  write_file_atomic(p, to_csv(m));
}

inline MeasurementSet read_measurement(const std::filesystem::path& p) {
  return measurement_from_csv(read_file(p));
}

// ---------------------------------------------------------------- cache

/// Directory of measurement CSVs named by the FNV-1a hash of their canonical key.
class MeasurementCache {
 public:
  explicit MeasurementCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  /// QPRTM_CACHE_DIR, else ".qprtm-cache".
  static std::filesystem::path default_dir() {
    if (const char* env = std::getenv("QPRTM_CACHE_DIR"); env && *env) return env;
    return ".qprtm-cache";
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(const std::string& key) const { return dir_ / (hex64(fnv1a64(key)) + ".csv"); }

  std::optional<MeasurementSet> load(const std::string& key) const {
    const auto p = path_for(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    auto m = read_measurement(p);
    if (m.provenance != hex64(fnv1a64(key))) return std::nullopt;
    return m;
  }

  void store(const std::string& key, const MeasurementSet& m) const { write_measurement(path_for(key), m); }

 private:
  std::filesystem::path dir_;
};

/// Solves, radiates, and caches the measurement matrix of one quasi-momentum.
inline MeasurementSet synthesize_measurements(const Scene& scene, const GratingParams& params, Side side, double h,
                                              std::size_t receivers, const SolverSettings& settings = {},
                                              const MeasurementCache* cache = nullptr) {
  const std::string key = measurement_key(scene, params, settings, side, h, receivers);
  if (cache)
    if (auto hit = cache->load(key)) return *hit;
  const double extent = vertical_extent(scene);
  if (!(h > extent)) throw PreconditionError("measurement height must exceed the scene's vertical extent");
  const auto modes = build_mode_set(params, measurement_truncation(scene, params, h));
  const auto resp = solve_all_modes(scene, modes, settings);
  auto m = measurements_from_response(resp, extent, side, h, receivers, hex64(fnv1a64(key)));
  if (cache) cache->store(key, m);
  return m;
}

}  // namespace qprtm
