// qprtm command-line driver.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "qprtm/harness.hpp"

namespace fs = std::filesystem;
using namespace qprtm;

namespace {

struct Globals {
  std::string config;
  std::string output;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string cache;
  bool no_cache = false;
  bool seed_set = false;
  bool threads_set = false;
};

ExperimentConfig load_config(const Globals& g) {
  return g.config.empty() ? parse_config("") : parse_config(read_file(g.config));
}

RunOptions run_options(const Globals& g) {
  RunOptions o;
  if (!g.output.empty()) o.output = g.output;
  if (g.seed_set) o.seed = g.seed;
  if (g.threads_set) o.threads = g.threads;
  if (!g.cache.empty()) o.cache_dir = fs::path(g.cache);
  o.use_cache = !g.no_cache;
  return o;
}

void write_image(const fs::path& dir, const std::string& stem, const ImagingResult& r) {
  write_file_atomic(dir / (stem + ".csv"), image_csv(r));
  write_file_atomic(dir / (stem + ".pgm"), render_heatmap(r));
  write_file_atomic(dir / (stem + ".meta"), image_sidecar(r));
}

int cmd_selftest(const ExperimentConfig& cfg) {
  const auto params = cfg.params(0);
  const auto modes = build_mode_set(params, default_truncation(params, 1.0));
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u1(-0.5 * cfg.period, 0.5 * cfg.period), u2(-2.0, 2.0);
  int failures = 0;
  auto report = [&](const char* name, double worst, double tol) {
    const bool ok = worst < tol;
    failures += !ok;
    std::printf("%s %-34s worst=%.3e tol=%.0e\n", ok ? "PASS" : "FAIL", name, worst, tol);
  };
  double hk = 0.0, bessel = 0.0, routes = 0.0;
  const QpGreen spectral(modes, {GreenRoute::spectral}), ewald(modes, {GreenRoute::ewald});
  for (int i = 0; i < 10; ++i) {
    const Point y{u1(rng), u2(rng)}, z{u1(rng), u2(rng)};
    for (double h : {3.0, 7.0, 20.0})
      for (Side s : {Side::lower, Side::upper}) hk = std::max(hk, hk_verify(y, z, h, s, modes).residual);
    if (norm(y - z) > 0.2) bessel = std::max(bessel, bessel_identity_check(y, z, modes));
    if (std::abs(y.x2 - z.x2) >= 0.5) {
      const auto a = spectral.eval(y, z), b = ewald.eval(y, z);
      routes = std::max({routes, std::abs(a.value - b.value), std::abs(a.d1 - b.d1), std::abs(a.d2 - b.d2)});
    }
  }
  report("helmholtz-kirchhoff identity", hk, 1e-10);
  report("bessel lattice identity", bessel, 1e-9);
  report("spectral vs ewald green function", routes, 1e-10);
  return failures ? 1 : 0;
}

int cmd_psf(const ExperimentConfig& cfg, const fs::path& out) {
  const auto r = psf_map(cfg);
  write_image(out, std::string("psf_") + to_string(cfg.psf_kind), r);
  std::printf("wrote %s\n", (out / (std::string("psf_") + to_string(cfg.psf_kind) + ".csv")).c_str());
  return 0;
}

int cmd_forward(const ExperimentConfig& cfg, const fs::path& out) {
  const auto params = cfg.params(0);
  const Scene scene = cfg.scene();
  const auto modes = build_mode_set(params, measurement_truncation(scene, params, cfg.h));
  ModeResponse resp;
  if (cfg.sound_soft) resp = solve_soundsoft(std::get<SoundSoftScene>(scene), modes, cfg.forward_mode, cfg.solver).response();
  else resp = solve_penetrable(std::get<PenetrableScene>(scene), modes, cfg.forward_mode, cfg.solver).response();
  std::string coef = "n,upper_re,upper_im,lower_re,lower_im\n";
  for (long n = -modes.truncation(); n <= modes.truncation(); ++n)
    coef += std::to_string(n) + "," + fmt17(resp.upper[n].real()) + "," + fmt17(resp.upper[n].imag()) + "," +
            fmt17(resp.lower[n].real()) + "," + fmt17(resp.lower[n].imag()) + "\n";
  write_file_atomic(out / "coefficients.csv", coef);
  const auto trace = radiate_trace(resp, modes, cfg.side, cfg.h, cfg.receivers, vertical_extent(scene));
  const auto xs = receiver_abscissas(cfg.period, cfg.receivers);
  std::string tr = "x1,re,im\n";
  for (std::size_t r = 0; r < trace.size(); ++r)
    tr += fmt17(xs[r]) + "," + fmt17(trace[r].real()) + "," + fmt17(trace[r].imag()) + "\n";
  write_file_atomic(out / "trace.csv", tr);
  std::printf("mode %ld residual %.3e flux defect %.3e\n", cfg.forward_mode, resp.residual, flux_defect(resp, modes));
  return 0;
}

int cmd_measure(const ExperimentConfig& cfg, const RunOptions& opt, const fs::path& out) {
  const auto meas = measure_all(cfg, opt);
  for (std::size_t i = 0; i < meas.size(); ++i) {
    const auto p = out / "measurements" / ("alpha_" + std::to_string(i) + ".csv");
    write_measurement(p, meas[i]);
    std::printf("wrote %s (%zu x %zu)\n", p.c_str(), meas[i].receivers, meas[i].columns());
  }
  return 0;
}

int cmd_rtm(const ExperimentConfig& cfg, const std::vector<std::string>& inputs, const fs::path& out) {
  if (inputs.empty()) throw ConfigError("rtm: no measurement files given");
  std::vector<ImagingResult> imgs;
  for (const auto& f : inputs) imgs.push_back(image(read_measurement(f), cfg.probe_grid(), cfg.solver.threads));
  const auto combined = combine_alphas(imgs);
  write_image(out, "image", combined);
  const auto loc = localization(combined, cfg.curve, cfg.period, cfg.quantile);
  std::printf("image over %zu alpha(s); localization q=%.2f mean %.4f max %.4f\n", imgs.size(), loc.quantile,
              loc.mean_distance, loc.max_distance);
  return 0;
}

int cmd_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto res = run_experiment(cfg, opt);
  for (std::size_t i = 0; i < res.mu.size(); ++i)
    std::printf("mu=%g localization mean %.4f max %.4f (%zu points)\n", res.mu[i], res.localization[i].mean_distance,
                res.localization[i].max_distance, res.localization[i].points);
  std::printf("artifacts in %s\n", res.directory.c_str());
  return 0;
}

int cmd_noise_study(const ExperimentConfig& cfg, const RunOptions& opt, const fs::path& out) {
  const auto meas = measure_all(cfg, opt);
  std::string table = "mu,sigma,signal_l2,noise_l2\n";
  for (std::size_t k = 0; k < cfg.mu.size(); ++k) {
    NoiseReport avg;
    for (std::size_t i = 0; i < meas.size(); ++i) {
      const auto rep = add_noise(meas[i], cfg.mu[k], cfg.seed + 7919ull * i + 104729ull * k).second;
      avg.sigma += rep.sigma / static_cast<double>(meas.size());
      avg.signal_level += rep.signal_level / static_cast<double>(meas.size());
      avg.noise_level += rep.noise_level / static_cast<double>(meas.size());
    }
    table += fmt17(cfg.mu[k]) + "," + fmt17(avg.sigma) + "," + fmt17(avg.signal_level) + "," + fmt17(avg.noise_level) + "\n";
    std::printf("%.6f  %.6f  %.6f  %.6f\n", cfg.mu[k], avg.sigma, avg.signal_level, avg.noise_level);
  }
  write_file_atomic(out / "noise.csv", table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic-array scattering and RTM imaging toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config file")->check(CLI::ExistingFile);
  app.add_option("--output", g.output, "Output directory (overrides the config)");
  auto* seed = app.add_option("--seed", g.seed, "Noise seed");
  auto* threads = app.add_option("--threads", g.threads, "Worker threads, 0 = auto");
  app.add_option("--cache", g.cache, "Measurement cache directory (default: $QPRTM_CACHE_DIR or .qprtm-cache)");
  app.add_flag("--no-cache", g.no_cache, "Disable the measurement cache");

  std::vector<std::string> inputs;
  auto* selftest = app.add_subcommand("selftest", "Identity checks on the Green's function machinery");
  auto* psf = app.add_subcommand("psf", "Point spread function map");
  auto* forward = app.add_subcommand("forward", "Single-mode forward solve and receiver trace");
  auto* measure = app.add_subcommand("measure", "Measurement matrices for every incident angle");
  auto* rtm = app.add_subcommand("rtm", "Image from measurement files");
  rtm->add_option("inputs", inputs, "Measurement CSV files")->check(CLI::ExistingFile);
  auto* experiment = app.add_subcommand("experiment", "Full measurement, noise, imaging pipeline");
  auto* noise = app.add_subcommand("noise-study", "Signal and noise level table");
  for (auto* s : app.get_subcommands({})) s->fallthrough();

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed->count() > 0;
  g.threads_set = threads->count() > 0;

  try {
    auto cfg = load_config(g);
    const auto opt = run_options(g);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.threads) cfg.solver.threads = *opt.threads;
    const fs::path out = g.output.empty() ? fs::path(cfg.output) : fs::path(g.output);
    if (*selftest) return cmd_selftest(cfg);
    if (*psf) return cmd_psf(cfg, out);
    if (*forward) return cmd_forward(cfg, out);
    if (*measure) return cmd_measure(cfg, opt, out);
    if (*rtm) return cmd_rtm(cfg, inputs, out);
    if (*experiment) return cmd_experiment(cfg, opt);
    if (*noise) return cmd_noise_study(cfg, opt, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
