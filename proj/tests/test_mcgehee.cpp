#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aniso/mcgehee.hpp"

using namespace aniso;
using mcgehee::EquilibriumLabel;
using mcgehee::McGeheeState;
using mcgehee::Stability;

namespace {

core::CartesianState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, two_pi), rad(0.5, 2.0), mom(-1.0, 1.0);
  const double r = rad(rng), a = ang(rng);
  return {r * std::cos(a), r * std::sin(a), mom(rng), mom(rng)};
}

// Mostly tangential momentum, far enough out that short flows stay clear of collision.
core::CartesianState orbiting_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, two_pi), rad(1.2, 2.0), pr(-0.3, 0.3),
      pt(0.9, 1.3);
  const double r = rad(rng), a = ang(rng), c = std::cos(a), s = std::sin(a);
  const double radial = pr(rng), tangential = (rng() % 2 ? 1.0 : -1.0) * pt(rng);
  return {r * c, r * s, radial * c - tangential * s, radial * s + tangential * c};
}

integrate::IntegratorConfig tight() {
  integrate::IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  return cfg;
}

}  // namespace

TEST(McGehee, RoundTrip) {
  std::mt19937_64 rng(21);
  for (double beta : {2.5, 3.0, 4.0}) {
    const Params p{beta, 1.3, 0.5, 0.0};
    for (int i = 0; i < 200; ++i) {
      const auto s = random_state(rng);
      const auto back = mcgehee::from_mcgehee(mcgehee::to_mcgehee(s, p), p);
      EXPECT_NEAR(back.x, s.x, 1e-13);
      EXPECT_NEAR(back.y, s.y, 1e-13);
      EXPECT_NEAR(back.px, s.px, 1e-12);
      EXPECT_NEAR(back.py, s.py, 1e-12);
    }
  }
}

TEST(McGehee, ReferenceConversions) {
  const Params p{3.0, 1.0, 1.0, 0.0};
  const auto a = mcgehee::to_mcgehee({1.0, 0.0, 0.0, 1.0}, p);
  EXPECT_EQ(a.r, 1.0);
  EXPECT_EQ(a.theta, 0.0);
  EXPECT_EQ(a.v, 0.0);
  EXPECT_EQ(a.u, 1.0);
  const auto b = mcgehee::to_mcgehee({0.0, 1.0, -1.0, 0.0}, p);
  EXPECT_DOUBLE_EQ(b.theta, pi / 2.0);
  EXPECT_DOUBLE_EQ(b.u, 1.0);
  // r = |q|, not |q|^2.
  EXPECT_DOUBLE_EQ(mcgehee::to_mcgehee({3.0, 4.0, 0.0, 0.0}, p).r, 5.0);
  EXPECT_THROW((void)mcgehee::from_mcgehee({0.0, 1.0, 0.0, 0.0}, p), DomainError);
}

TEST(McGehee, ReferenceFieldAndResidual) {
  const Params p{3.0, 2.0, 0.5, 0.0};
  const auto f = mcgehee::mcgehee_field({0.0, 0.0, 0.0, 0.0}, p);
  EXPECT_DOUBLE_EQ(f.v, -p.b * (p.beta - 2.0) / std::pow(p.mu, 0.5 * p.beta));
  EXPECT_EQ(f.theta, 0.0);
  EXPECT_EQ(f.u, 0.0);
  // With v on the level the v-equation balances: that point is an equilibrium.
  const double v0 = std::sqrt(2.0 * p.b / std::pow(p.mu, 0.5 * p.beta));
  EXPECT_NEAR(mcgehee::mcgehee_field({0.0, v0, 0.0, 0.0}, p).v, 0.0, 1e-15);
  for (double h : {-0.5, 0.0, 0.3}) {
    EXPECT_DOUBLE_EQ(mcgehee::energy_residual({1.0, 0.0, pi / 2.0, 2.0}, Params{3.0, 1.7, 1.0, h}),
                     -2.0 * h);
  }
  const Params iso{3.0, 1.0, 0.5, 0.0};
  const double u = 0.3, v = std::sqrt(1.0 - u * u);
  const auto g = mcgehee::collision_flow({0.0, v, pi / 4.0, u}, iso);
  EXPECT_DOUBLE_EQ(g.u, 0.5 * u * v);
}

TEST(McGehee, GradientLikeOnCollisionManifold) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> ang(-pi, pi);
  const Params p{3.0, 1.6, 0.5, 0.0};
  for (int i = 0; i < 20; ++i) {
    const double th = ang(rng), psi = ang(rng);
    const double a = std::sqrt(2.0 * p.b / std::pow(delta(th, p.mu), 0.5 * p.beta));
    const auto arc = mcgehee::collision_arc({0.0, a * std::cos(psi), th, a * std::sin(psi)}, p,
                                            20.0);
    for (std::size_t k = 1; k < arc.states.size(); ++k) {
      EXPECT_LE(arc.states[k][0], arc.states[k - 1][0] + 1e-12);
    }
  }
}

TEST(McGehee, EnergyOfMatchesHamiltonian) {
  std::mt19937_64 rng(22);
  const Params p{3.0, 1.5, 0.5, 0.0};
  for (int i = 0; i < 200; ++i) {
    const auto s = random_state(rng);
    const double h = core::hamiltonian(s, p);
    EXPECT_NEAR(mcgehee::energy_of(mcgehee::to_mcgehee(s, p), p), h, 1e-12 * (1.0 + std::abs(h)));
    Params q = p;
    q.h = h;
    EXPECT_NEAR(mcgehee::energy_residual(mcgehee::to_mcgehee(s, q), q), 0.0, 1e-11);
  }
}

TEST(McGehee, ConjugateToCartesianFlow) {
  std::mt19937_64 rng(23);
  for (double beta : {3.0, 4.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto s0 = orbiting_state(rng);
      Params p{beta, 1.25, 0.5, 0.0};
      p.h = core::hamiltonian(s0, p);
      const double T = 0.5;
      const auto cart = core::CartesianState::from(core::flow(s0, p, T, tight()).final_state());
      const auto tr = mcgehee::flow_to_physical_time(mcgehee::to_mcgehee(s0, p), p, T, 1e3, tight());
      const auto& y = tr.final_state();
      const auto img = mcgehee::from_mcgehee({y[0], y[1], y[2], y[3]}, p);
      EXPECT_NEAR(y[4], T, 1e-10);
      EXPECT_NEAR(img.x, cart.x, 1e-8);
      EXPECT_NEAR(img.y, cart.y, 1e-8);
      EXPECT_NEAR(img.px, cart.px, 1e-7);
      EXPECT_NEAR(img.py, cart.py, 1e-7);
    }
  }
}

TEST(McGehee, ResidualConservedAlongFlow) {
  const Params p{3.0, 1.2, 0.5, -0.25};
  const auto v = mcgehee::v_on_level(0.4, 1.0, 0.1, +1, p);
  ASSERT_TRUE(v.has_value());
  const auto traj = mcgehee::flow({0.4, *v, 1.0, 0.1}, p, 30.0);
  EXPECT_LT(traj.drift("residual"), 1e-8);
}

TEST(McGehee, CollisionManifoldIsInvariant) {
  const Params p{3.0, 1.2, 0.5, 0.0};
  const double th = 0.3, u = 0.2;
  const auto v = mcgehee::v_on_level(0.0, th, u, +1, p);
  ASSERT_TRUE(v.has_value());
  const auto traj = mcgehee::flow({0.0, *v, th, u}, p, 10.0);
  for (const auto& y : traj.states) EXPECT_EQ(y[0], 0.0);
  EXPECT_LT(traj.drift("residual"), 1e-9);

  const auto arc = mcgehee::collision_arc({0.0, *v, th, u}, p, 10.0);
  EXPECT_LT(arc.drift("residual"), 1e-9);
  const auto& a = arc.final_state();
  const auto& b = traj.final_state();
  EXPECT_NEAR(a[0], b[1], 1e-8);
  EXPECT_NEAR(a[1], b[2], 1e-8);
  EXPECT_NEAR(a[2], b[3], 1e-8);
}

TEST(McGehee, CollisionFlowOnEnergyLevel) {
  const Params p{3.5, 1.4, 0.5, 0.0};
  const double th = 2.0, u = -0.3;
  const auto v = mcgehee::v_on_level(0.0, th, u, -1, p);
  ASSERT_TRUE(v.has_value());
  const McGeheeState m{0.0, *v, th, u};
  const auto t = mcgehee::collision_flow(m, p);
  const auto f = mcgehee::mcgehee_field(m, p);
  // On C the energy relation turns v' into -(beta-2)/2 u^2.
  EXPECT_NEAR(t.v, f.v, 1e-13);
  EXPECT_NEAR(t.v, -0.75 * u * u, 1e-13);
  EXPECT_EQ(t.theta, f.theta);
  EXPECT_EQ(t.u, f.u);
  EXPECT_THROW((void)mcgehee::collision_flow({0.1, *v, th, u}, p), ValidationError);
  EXPECT_THROW((void)mcgehee::collision_flow({0.0, *v + 0.1, th, u}, p), ValidationError);
}

TEST(McGehee, RejectsBetaAtMostTwo) {
  EXPECT_THROW((void)mcgehee::mcgehee_field({0.1, 0.0, 0.0, 0.0}, Params{2.0, 1.0, 0.5, 0.0}),
               ValidationError);
  EXPECT_THROW((void)mcgehee::equilibria(Params{1.5, 1.0, 0.5, 0.0}), ValidationError);
}

TEST(Equilibria, AllEightAreZerosOfTheField) {
  const Params p{3.0, 1.3, 0.5, 0.0};
  const auto reps = mcgehee::equilibria(p);
  ASSERT_EQ(reps.size(), 8u);
  for (const auto& r : reps) {
    const auto f = mcgehee::mcgehee_field(r.location, p);
    EXPECT_NEAR(std::abs(f.r) + std::abs(f.v) + std::abs(f.theta) + std::abs(f.u), 0.0, 1e-14)
        << r.label.name();
    EXPECT_NEAR(mcgehee::energy_residual(r.location, p), 0.0, 1e-14);
  }
}

TEST(Equilibria, ReferenceLocations) {
  for (const auto& r : mcgehee::equilibria(Params{3.7, 1.0, 0.5, 0.0})) {
    EXPECT_NEAR(std::abs(r.location.v), 1.0, 1e-15);
  }
  const auto reps = mcgehee::equilibria(Params{4.0, 4.0, 0.5, 0.0});
  EXPECT_EQ(reps[0].label.name(), "A+_0");
  EXPECT_NEAR(reps[0].location.v, 0.25, 1e-15);
}

TEST(Equilibria, JacobianMatchesFiniteDifferences) {
  for (double beta : {2.5, 3.0, 4.0, 6.0}) {
    for (double mu : {1.1, 1.5, 3.0}) {
      const Params p{beta, mu, 0.5, -0.2};
      for (int sign : {+1, -1}) {
        for (int q = 0; q < 4; ++q) {
          const EquilibriumLabel l{q, sign};
          const Mat3 a = mcgehee::linearize_at(l, p);
          const Mat3 n = mcgehee::restricted_jacobian_fd(l, p);
          for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
              EXPECT_NEAR(a[i][j], n[i][j], 1e-6) << l.name() << " beta " << beta << " mu " << mu;
            }
          }
        }
      }
    }
  }
}

TEST(Equilibria, ClosedFormEigenvaluesAgreeWithSolver) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> ub(2.1, 8.0), um(1.0, 4.0), ubb(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Params p{ub(rng), um(rng), ubb(rng), 0.0};
    for (const auto& r : mcgehee::equilibria(p)) {
      const auto cf = mcgehee::closed_form_eigenvalues(r.label, p);
      for (const auto& z : cf) {
        double best = 1e300;
        for (const auto& w : r.eigenvalues) best = std::min(best, std::abs(w - z));
        EXPECT_LT(best, 1e-9 * (1.0 + std::abs(z)));
      }
    }
  }
}

TEST(Equilibria, ClassificationPattern) {
  for (double beta : {2.5, 3.0, 4.0, 7.0}) {
    for (double mu : {1.01, 1.2, 2.0, 5.0}) {
      const auto reps = mcgehee::classify(Params{beta, mu, 0.5, 0.0});
      for (const auto& r : reps) {
        ASSERT_TRUE(r.stability.has_value());
        const Stability s = *r.stability;
        if (r.label.quarter % 2 == 0) {
          EXPECT_EQ(s, Stability::Saddle) << r.label.name();
        } else if (r.label.sign > 0) {
          EXPECT_TRUE(s == Stability::Source || s == Stability::SpiralSource) << r.label.name();
        } else {
          EXPECT_TRUE(s == Stability::Sink || s == Stability::SpiralSink) << r.label.name();
        }
      }
    }
  }
}

TEST(Equilibria, ClassificationIndependentOfB) {
  for (double mu : {1.02, 1.1, 2.0}) {
    const auto a = mcgehee::classify(Params{3.0, mu, 0.1, 0.0});
    const auto b = mcgehee::classify(Params{3.0, mu, 10.0, 0.0});
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_EQ(*a[i].stability, *b[i].stability);
      EXPECT_EQ(a[i].spiraling, b[i].spiraling);
    }
  }
}

TEST(Equilibria, RealSourceBelowThreshold) {
  const auto reps = mcgehee::classify(Params{3.0, 1.01, 0.5, 0.0});
  const auto& a = reps[1];
  ASSERT_EQ(a.label.name(), "A+_pi/2");
  for (const auto& z : a.eigenvalues) {
    EXPECT_EQ(z.imag(), 0.0);
    EXPECT_GT(z.real(), 0.0);
  }
  EXPECT_EQ(*a.stability, Stability::Source);
}

TEST(Equilibria, SpiralThreshold) {
  for (double beta : {3.0, 4.0, 6.0}) {
    const double mu_c = mcgehee::spiral_threshold(beta);
    EXPECT_NEAR(mu_c, (beta + 2.0) * (beta + 2.0) / (8.0 * beta), 0.0);
    const auto below = mcgehee::classify(Params{beta, mu_c - 1e-3, 0.5, 0.0});
    const auto above = mcgehee::classify(Params{beta, mu_c + 1e-3, 0.5, 0.0});
    for (std::size_t i = 0; i < 8; ++i) {
      const bool side = below[i].label.quarter % 2 == 1;
      EXPECT_FALSE(below[i].spiraling) << below[i].label.name();
      EXPECT_EQ(above[i].spiraling, side) << above[i].label.name();
    }
    EXPECT_EQ(*above[1].stability, Stability::SpiralSource);
    EXPECT_EQ(*above[5].stability, Stability::SpiralSink);
  }
  EXPECT_NEAR(mcgehee::spiral_threshold(3.0), 25.0 / 24.0, 1e-15);
}

TEST(Equilibria, IsotropicLimitIsDegenerate) {
  const Params p{3.0, 1.0, 0.5, 0.0};
  for (const auto& r : mcgehee::equilibria(p)) {
    const double s = r.label.sign;
    // v0 = +-1 here; the spectrum is {v0, v0/2, 0}.
    const auto cf = mcgehee::closed_form_eigenvalues(r.label, p);
    EXPECT_NEAR(cf[0].real(), s, 1e-15);
    EXPECT_NEAR(std::max(cf[1].real(), cf[2].real()), s > 0 ? 0.5 : 0.0, 1e-15);
    EXPECT_NEAR(std::min(cf[1].real(), cf[2].real()), s > 0 ? 0.0 : -0.5, 1e-15);
    EXPECT_FALSE(r.stability.has_value());
  }
  EXPECT_THROW((void)mcgehee::classify(p), ValidationError);
}

TEST(Equilibria, NoneOffCollision) {
  // 10^4 states with r in (0, 5]; beta = 4 included, it has no off-C zeros either.
  for (double beta : {2.5, 3.0, 4.0, 5.0}) {
    for (double h : {-0.25, 0.0, 0.5}) {
      EXPECT_GT(mcgehee::off_collision_min_field_norm(Params{beta, 1.3, 0.5, h}, 5.0), 1e-3)
          << "beta " << beta << " h " << h;
    }
  }
}

TEST(Basin, DeterministicForFixedSeed) {
  const Params p{3.0, 1.2, 0.5, -0.25};
  const auto a = mcgehee::basin_fraction(p, 24, 20.0, {}, 99);
  const auto b = mcgehee::basin_fraction(p, 24, 20.0, {}, 99);
  const auto c = mcgehee::basin_fraction(p, 24, 20.0, {}, 100);
  ASSERT_EQ(a.starts.size(), 24u);
  for (std::size_t i = 0; i < a.starts.size(); ++i) {
    EXPECT_EQ(a.starts[i].r, b.starts[i].r);
    EXPECT_EQ(a.starts[i].u, b.starts[i].u);
  }
  EXPECT_EQ(a.collided, b.collided);
  EXPECT_EQ(a.fraction, b.fraction);
  EXPECT_NE(a.starts[0].r, c.starts[0].r);
  EXPECT_GE(a.fraction, 0.0);
  EXPECT_LE(a.fraction, 1.0);
  EXPECT_LT(a.max_residual_drift, 1e-8);
  for (const auto& s : a.starts) EXPECT_NEAR(mcgehee::energy_residual(s, p), 0.0, 1e-12);
}

TEST(Basin, SinkNeighbourhoodCollides) {
  const Params p{3.0, 1.2, 0.5, -2.0};
  double previous = 0.0;
  for (double w : {0.05, 0.01}) {
    mcgehee::BasinBox box;
    box.r_min = 0.2 * w;
    box.r_max = w;
    box.theta_min = pi / 2.0 - w;
    box.theta_max = pi / 2.0 + w;
    box.u_min = -w;
    box.u_max = w;
    const auto res = mcgehee::basin_fraction(p, 40, 60.0, box, 7);
    EXPECT_GE(res.fraction, previous);
    previous = res.fraction;
  }
  EXPECT_EQ(previous, 1.0);
}

TEST(Basin, RejectsBadInput) {
  const Params p{3.0, 1.2, 0.5, -0.25};
  EXPECT_THROW((void)mcgehee::basin_fraction(p, 0, 20.0), ValidationError);
  EXPECT_THROW((void)mcgehee::basin_fraction(p, 5, -1.0), ValidationError);
  mcgehee::BasinBox box;
  box.r_min = 0.0;
  EXPECT_THROW((void)mcgehee::basin_fraction(p, 5, 1.0, box), ValidationError);
}
