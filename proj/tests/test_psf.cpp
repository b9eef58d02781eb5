#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qprtm/psf.hpp"

using namespace qprtm;

namespace {

constexpr double kPi = std::numbers::pi;

ModeSet example1(double theta = kPi / 2) { return build_mode_set({2 * kPi, 5.2 * kPi, theta}, 30); }

}  // namespace

TEST(Psf, Decomposition) {
  const auto m = example1(kPi / 2 + kPi / 16);
  const cplx I(0.0, 1.0);
  const Point y{0.3, 0.2}, z{-0.4, -0.1};
  const cplx f1 = psf_eval(PsfKind::cosine, y, z, m), f2 = psf_eval(PsfKind::sine, y, z, m);
  EXPECT_LT(std::abs(psf_eval(PsfKind::upper, y, z, m) - (f1 + I * f2)), 1e-15);
  EXPECT_LT(std::abs(psf_eval(PsfKind::lower, y, z, m) - (f1 - I * f2)), 1e-15);
}

TEST(Psf, LowerAtCoincidence) {
  const auto m = example1();
  const Point z{0.5, -0.7};
  const cplx v = psf_eval(PsfKind::lower, z, z, m);
  EXPECT_EQ(v.real(), 0.0);
  EXPECT_GT(v.imag(), 0.0);
}

TEST(Psf, LowerConjugateSwap) {
  const auto m = example1();
  const Point y{0.3, 0.2}, z{-0.4, -0.1};
  EXPECT_LT(std::abs(std::conj(psf_eval(PsfKind::lower, z, y, m)) + psf_eval(PsfKind::lower, y, z, m)), 1e-15);
}

TEST(Psf, HelmholtzKirchhoffLowerExample) {
  const auto m = example1();
  const auto r = hk_verify({0.3, 0.2}, {-0.4, -0.1}, 7.0, Side::lower, m, 256);
  EXPECT_LT(r.residual, 1e-10);
}

TEST(Psf, HelmholtzKirchhoffAtCoincidence) {
  const auto m = example1();
  const Point z{0.1, 0.4};
  const auto r = hk_verify(z, z, 7.0, Side::lower, m);
  EXPECT_LT(std::abs(r.lhs - psf_eval(PsfKind::lower, z, z, m)), 1e-10);
}

TEST(Psf, HelmholtzKirchhoffSwapAntisymmetry) {
  const auto m = example1(kPi / 2 + 2 * kPi / 16);
  const Point y{0.3, 0.2}, z{-0.4, -0.1};
  for (Side s : {Side::lower, Side::upper}) {
    const auto a = hk_verify(y, z, 7.0, s, m), b = hk_verify(z, y, 7.0, s, m);
    EXPECT_LT(std::abs(a.lhs + std::conj(b.lhs)), 1e-12);
  }
}

TEST(Psf, HelmholtzKirchhoffRandomTriples) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u1(-kPi, kPi), u2(-2.0, 2.0), uh(3.0, 20.0);
  const auto m = example1(kPi / 2 - kPi / 16);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Point y{u1(rng), u2(rng)}, z{u1(rng), u2(rng)};
    const double h = uh(rng);
    for (Side s : {Side::lower, Side::upper}) worst = std::max(worst, hk_verify(y, z, h, s, m).residual);
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Psf, HelmholtzKirchhoffRejectsPointsBeyondTheLine) {
  const auto m = example1();
  EXPECT_THROW(hk_verify({0, -8}, {0, 0}, 7.0, Side::lower, m), PreconditionError);
  EXPECT_THROW(hk_verify({0, 0}, {0, 7.5}, 7.0, Side::upper, m), PreconditionError);
}

TEST(Psf, HalfIdentityRemainder) {
  const auto m = build_mode_set({2 * kPi, 4.9, kPi / 2}, 12);
  const Point y{0.3, 0.2}, z{-0.4, -0.1};
  const auto r7 = half_hk_remainder(y, z, 7.0, Side::lower, m);
  const auto r14 = half_hk_remainder(y, z, 14.0, Side::lower, m);
  EXPECT_LT(std::abs(r14.measured), std::abs(r7.measured));
  EXPECT_LE(std::abs(r7.measured), r7.bound);
  EXPECT_LE(std::abs(r14.measured), r14.bound);
  EXPECT_LT(half_hk_remainder(y, z, 1e8, Side::lower, m).bound, 1e-9);
  EXPECT_LT(std::abs(r7.measured - half_hk_evanescent_sum(y, z, 7.0, Side::lower, m)), 1e-12);
}

TEST(Psf, BesselIdentity) {
  const auto m = example1(kPi / 2 + kPi / 16);
  EXPECT_LT(bessel_identity_check({0.3, 0.2}, {-0.4, 0.7}, m), 1e-9);
  EXPECT_LT(bessel_identity_check({kPi / 2, 0.1}, {-kPi / 2, 0.1}, build_mode_set({2 * kPi, 5.2 * kPi, kPi / 2}, 30)),
            1e-9);
  EXPECT_THROW(bessel_identity_check({0, 0}, {2 * kPi, 0}, m), PreconditionError);
}

TEST(Psf, CosineImaginaryPartSymmetricAtNormalIncidence) {
  const auto m = example1();
  const Point y{0.3, 0.2}, z{-0.4, -0.1};
  EXPECT_NEAR(psf_eval(PsfKind::cosine, y, z, m).imag(), psf_eval(PsfKind::cosine, z, y, m).imag(), 1e-14);
}

TEST(Psf, SineVanishesLinearlyOnTheLine) {
  const auto m = example1(kPi / 2 + kPi / 16);
  const double c = static_cast<double>(m.propagating_count()) / (2 * 2 * kPi);
  for (double d : {1e-3, 1e-2, 0.1}) {
    const Point y{0.2, 0.3 + d}, z{-0.5, 0.3};
    EXPECT_LE(std::abs(psf_eval(PsfKind::sine, y, z, m)), c * d);
  }
}

TEST(Psf, CosinePeaksAtCoincidence) {
  const auto m = example1();
  const Point z{0.1, -0.2};
  const double peak = psf_eval(PsfKind::cosine, z, z, m).imag();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u1(-kPi, kPi), u2(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) EXPECT_LE(psf_eval(PsfKind::cosine, {u1(rng), u2(rng)}, z, m).imag(), peak);
}
