#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "qprtm/harness.hpp"

using namespace qprtm;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

ImagingResult ramp(int n1, int n2) {
  ImagingResult r;
  r.grid = ProbeGrid::centered(2 * kPi, n1, n2);
  r.values.resize(r.grid.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] = static_cast<double>(i);
  return r;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("qprtm-harness-" + name);
  fs::remove_all(d);
  return d;
}

const char* kTinyConfig = R"(# small end-to-end run
[grating]
wavenumber = 2.2
theta_m = 0, 1

[scene]
family = circle
scale = 0.8
grid = 16

[measurement]
receivers = 41

[probe]
n1 = 21
n2 = 21

[noise]
mu = 0, 0.3
seed = 11
)";

}  // namespace

TEST(Harness, DefaultsParseAndEcho) {
  const auto c = parse_config("");
  EXPECT_DOUBLE_EQ(c.period, 2 * kPi);
  EXPECT_DOUBLE_EQ(c.h, 7.0);
  EXPECT_EQ(c.receivers, 101u);
  EXPECT_EQ(c.probe_grid().n1, 101);
  EXPECT_EQ(c.probe_grid().n2, 101);
  const std::string text = to_text(c);
  EXPECT_NE(text.find("h = 7\n"), std::string::npos);
  EXPECT_NE(text.find("receivers = 101\n"), std::string::npos);
  EXPECT_NE(text.find("n1 = 101\n"), std::string::npos);
  EXPECT_EQ(to_text(parse_config(text)), text);
}

TEST(Harness, MalformedNumberNamesKeyAndLine) {
  try {
    parse_config("[grating]\nperiod = 6.28\nwavenumber = 5.2q\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("line 3"), std::string::npos) << w;
    EXPECT_NE(w.find("wavenumber"), std::string::npos) << w;
  }
}

TEST(Harness, CollectsEveryError) {
  try {
    parse_config("[scene]\ngrid = x\nbogus = 1\n[measurement]\nside = left\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    EXPECT_NE(w.find("line 2"), std::string::npos);
    EXPECT_NE(w.find("line 3"), std::string::npos);
    EXPECT_NE(w.find("line 5"), std::string::npos);
  }
}

TEST(Harness, ThetaIndexListExpands) {
  const auto c = parse_config("[grating]\ntheta_m = 0, 1, -1, 2, -2\n");
  ASSERT_EQ(c.thetas.size(), 5u);
  EXPECT_DOUBLE_EQ(c.thetas[2], kPi / 2 - kPi / 16);
  EXPECT_DOUBLE_EQ(c.thetas[3], kPi / 2 + kPi / 8);
}

TEST(Harness, NumberForms) {
  EXPECT_DOUBLE_EQ(*parse_number("5.2pi"), 5.2 * kPi);
  EXPECT_DOUBLE_EQ(*parse_number("-pi"), -kPi);
  EXPECT_DOUBLE_EQ(*parse_number("2*pi"), 2 * kPi);
  EXPECT_DOUBLE_EQ(*parse_number("pi/16"), kPi / 16);
  EXPECT_FALSE(parse_number("abc").has_value());
}

TEST(Harness, RejectsWoodsAnomalyAndBadRanges) {
  EXPECT_THROW(parse_config("[grating]\nwavenumber = 5\n"), WoodAnomalyError);
  EXPECT_THROW(parse_config("[measurement]\nh = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[output]\nquantile = 1.5\n"), ConfigError);
}

TEST(Harness, HeatmapConstantImage) {
  auto r = ramp(4, 3);
  std::fill(r.values.begin(), r.values.end(), 2.5);
  const auto pgm = render_heatmap(r);
  const std::string head = "P5\n4 3\n255\n";
  ASSERT_EQ(pgm.substr(0, head.size()), head);
  ASSERT_EQ(pgm.size(), head.size() + 12);
  for (std::size_t i = head.size(); i < pgm.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(pgm[i]), 128);
}

TEST(Harness, HeatmapRangeAndOrientation) {
  const auto r = ramp(5, 4);
  const auto pgm = render_heatmap(r);
  const std::string head = "P5\n5 4\n255\n";
  ASSERT_EQ(pgm.size(), head.size() + 20);
  const auto* px = reinterpret_cast<const unsigned char*>(pgm.data() + head.size());
  EXPECT_EQ(px[15], 0);   // bottom-left holds the minimum
  EXPECT_EQ(px[4], 255);  // top-right holds the maximum
}

TEST(Harness, ImageCsvLayout) {
  const auto csv = image_csv(ramp(3, 2));
  EXPECT_EQ(csv.substr(0, 12), "z1,z2,value\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Harness, LocalizationOfPointSpread) {
  ExperimentConfig c;
  const Point z0{0.8 * std::cos(0.7), 0.8 * std::sin(0.7)};
  c.psf_source = z0;
  c.psf_kind = PsfKind::cosine;
  const auto img = psf_map(c);
  const ParametricCurve dot{CurveFamily::circle, 1e-9, z0};
  const auto loc = localization(img, dot, c.period, 0.9);
  EXPECT_LT(loc.max_distance, 0.5 * 2 * kPi / c.wavenumber);
  const auto tight = localization(img, dot, c.period, 0.999);
  EXPECT_LE(tight.points, loc.points);
  EXPECT_LE(tight.max_distance, loc.max_distance);
}

TEST(Harness, LocalizationUsesNormalizedImage) {
  ExperimentConfig c;
  c.psf_source = {0.3, 0.2};
  auto img = psf_map(c);
  const ParametricCurve dot{CurveFamily::circle, 1e-9, c.psf_source};
  const auto a = localization(img, dot, c.period, 0.9);
  for (double& v : img.values) v += 17.0;
  const auto b = localization(img, dot, c.period, 0.9);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.max_distance, b.max_distance);
}

TEST(Harness, EndToEndRunIsDeterministic) {
  const auto cfg = parse_config(kTinyConfig);
  RunOptions o;
  o.use_cache = false;
  o.output = scratch("a");
  const auto a = run_experiment(cfg, o);
  o.output = scratch("b");
  const auto b = run_experiment(cfg, o);
  ASSERT_EQ(a.mu.size(), 2u);
  for (const char* f : {"image_mu0.csv", "image_mu0.3.csv", "noise.csv", "measurements/alpha_0.csv",
                        "measurements/alpha_1.csv", "image_mu0.3.pgm", "manifest.txt"}) {
    ASSERT_TRUE(fs::exists(a.directory / f)) << f;
    EXPECT_EQ(read_file(a.directory / f), read_file(b.directory / f)) << f;
  }
  EXPECT_NE(read_file(a.directory / "manifest.txt").find("status=ok"), std::string::npos);
  fs::remove_all(a.directory);
  fs::remove_all(b.directory);
}

TEST(Harness, CachedRunMatchesFreshRun) {
  const auto cfg = parse_config(kTinyConfig);
  RunOptions o;
  o.cache_dir = scratch("cache");
  o.output = scratch("c1");
  const auto a = run_experiment(cfg, o);
  o.output = scratch("c2");
  const auto b = run_experiment(cfg, o);
  EXPECT_EQ(read_file(a.directory / "image_mu0.csv"), read_file(b.directory / "image_mu0.csv"));
  EXPECT_EQ(read_file(a.directory / "measurements/alpha_1.csv"), read_file(b.directory / "measurements/alpha_1.csv"));
  fs::remove_all(*o.cache_dir);
  fs::remove_all(a.directory);
  fs::remove_all(b.directory);
}

TEST(Harness, FailedRunWritesErrorManifest) {
  auto cfg = parse_config(kTinyConfig);
  cfg.solver.gmres_max_iterations = 1;
  cfg.solver.dense_threshold = 0;
  RunOptions o;
  o.use_cache = false;
  o.output = scratch("fail");
  EXPECT_THROW(run_experiment(cfg, o), Error);
  EXPECT_NE(read_file(o.output / "manifest.txt").find("status=error"), std::string::npos);
  fs::remove_all(o.output);
}
