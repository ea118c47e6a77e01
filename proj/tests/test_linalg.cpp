#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aniso/linalg.hpp"

using namespace aniso;

namespace {

void expect_contains(const std::array<cplx, 3>& ev, cplx z, double tol) {
  const bool found = std::any_of(ev.begin(), ev.end(), [&](cplx w) { return std::abs(w - z) < tol; });
  EXPECT_TRUE(found) << "missing eigenvalue " << z.real() << " + " << z.imag() << "i";
}

}  // namespace

TEST(Eigen3, Diagonal) {
  const auto ev = eigen3({{{3.0, 0.0, 0.0}, {0.0, -1.0, 0.0}, {0.0, 0.0, 0.5}}});
  EXPECT_NEAR(ev[0].real(), -1.0, 1e-14);
  EXPECT_NEAR(ev[1].real(), 0.5, 1e-14);
  EXPECT_NEAR(ev[2].real(), 3.0, 1e-14);
  EXPECT_FALSE(has_nonreal(ev));
}

TEST(Eigen3, CircleAtInfinityMatrix) {
  const double v0 = sqrt2;
  const auto ev = eigen3({{{-v0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, -v0 / 2.0}}});
  expect_contains(ev, -sqrt2, 1e-14);
  expect_contains(ev, -sqrt2 / 2.0, 1e-14);
  expect_contains(ev, 0.0, 1e-14);
}

TEST(Eigen3, CubeRootsOfUnity) {
  // Companion matrix of lambda^3 - 1.
  const auto ev = eigen3({{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}});
  expect_contains(ev, 1.0, 1e-13);
  expect_contains(ev, std::polar(1.0, 2.0 * pi / 3.0), 1e-13);
  expect_contains(ev, std::polar(1.0, -2.0 * pi / 3.0), 1e-13);
  EXPECT_EQ(ev[1], std::conj(ev[2]));
}

TEST(Eigen3, RepeatedRoot) {
  const auto ev = eigen3({{{2.0, 1.0, 0.0}, {0.0, 2.0, 1.0}, {0.0, 0.0, 2.0}}});
  for (const auto& z : ev) EXPECT_NEAR(std::abs(z - 2.0), 0.0, 1e-4);
}

TEST(Eigen3, RandomMatricesSatisfyInvariants) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    Mat3 m;
    for (auto& row : m) {
      for (auto& x : row) x = u(rng);
    }
    const auto ev = eigen3(m);
    const cplx sum = ev[0] + ev[1] + ev[2];
    const cplx prod = ev[0] * ev[1] * ev[2];
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    EXPECT_NEAR(sum.real(), m[0][0] + m[1][1] + m[2][2], 1e-9);
    EXPECT_NEAR(sum.imag(), 0.0, 1e-9);
    EXPECT_NEAR(prod.real(), det, 1e-8);
    EXPECT_NEAR(prod.imag(), 0.0, 1e-8);
  }
}

TEST(Eigen3, RejectsNonFinite) {
  Mat3 m{};
  m[1][2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)eigen3(m), ValidationError);
}

TEST(Eigen2, RealAndComplex) {
  const auto a = eigen2({{{0.0, 1.0}, {2.0, 1.0}}});  // lambda^2 - lambda - 2
  EXPECT_NEAR(a[0].real(), 2.0, 1e-15);
  EXPECT_NEAR(a[1].real(), -1.0, 1e-15);
  const auto b = eigen2({{{0.0, 1.0}, {-1.0, 0.0}}});
  EXPECT_NEAR(b[0].imag(), 1.0, 1e-15);
  EXPECT_EQ(b[1], std::conj(b[0]));
}
