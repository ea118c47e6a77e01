#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "aniso/integrate.hpp"
#include "aniso/mcgehee.hpp"

using namespace aniso;
using integrate::IntegratorConfig;

namespace {

Vec2 harmonic(double, const Vec2& y) { return {y[1], -y[0]}; }

double harmonic_error(double rel_tol) {
  IntegratorConfig cfg;
  cfg.rel_tol = rel_tol;
  cfg.abs_tol = rel_tol * 1e-2;
  const auto traj = integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 2.0 * pi}, cfg);
  const auto& y = traj.final_state();
  return std::hypot(y[0] - 1.0, y[1]);
}

}  // namespace

TEST(Integrate, HarmonicPeriod) { EXPECT_LT(harmonic_error(1e-10), 1e-9); }

TEST(Integrate, Exponential) {
  auto f = [](double, const Vec<1>& y) { return Vec<1>{y[0]}; };
  const auto traj = integrate::integrate<1>(f, Vec<1>{1.0}, {0.0, 1.0});
  EXPECT_NEAR(traj.final_state()[0], std::exp(1.0), 1e-10 * std::exp(1.0));
  EXPECT_EQ(traj.final_time(), 1.0);
}

TEST(Integrate, BackwardInTime) {
  auto f = [](double, const Vec<1>& y) { return Vec<1>{y[0]}; };
  const auto traj = integrate::integrate<1>(f, Vec<1>{1.0}, {0.0, -1.0});
  EXPECT_NEAR(traj.final_state()[0], std::exp(-1.0), 1e-11);
  for (std::size_t i = 1; i < traj.times.size(); ++i) EXPECT_LT(traj.times[i], traj.times[i - 1]);
}

TEST(Integrate, TighterToleranceShrinksError) {
  // Global error of a 5(4) pair scales roughly linearly with the tolerance.
  for (double tol : {1e-5, 1e-6, 1e-7, 1e-8}) {
    EXPECT_GE(harmonic_error(tol) / harmonic_error(tol / 2.0), 1.5) << "tol " << tol;
    EXPECT_GE(harmonic_error(tol) / harmonic_error(tol / 4.0), 2.0) << "tol " << tol;
  }
}

TEST(Integrate, TimesStrictlyIncreasing) {
  const auto traj = integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 10.0});
  ASSERT_EQ(traj.times.size(), traj.states.size());
  for (std::size_t i = 1; i < traj.times.size(); ++i) EXPECT_GT(traj.times[i], traj.times[i - 1]);
}

TEST(Integrate, EventLocatedOnDenseOutput) {
  auto f = [](double, const Vec2& y) { return Vec2{y[1], -y[0]}; };
  const std::vector<integrate::EventSpec<2>> ev{
      {"zero", [](double, const Vec2& y) { return y[0]; }, -1, false}};
  const auto traj = integrate::integrate<2>(f, Vec2{1.0, 0.0}, {0.0, 10.0}, {}, ev);
  // x = cos t crosses zero downward at pi/2 and 5 pi/2.
  ASSERT_EQ(traj.events.size(), 2u);
  EXPECT_NEAR(traj.events[0].time, pi / 2.0, 1e-10);
  EXPECT_NEAR(traj.events[1].time, 2.5 * pi, 1e-10);
  EXPECT_LT(traj.events[0].time, traj.events[1].time);
  EXPECT_FALSE(traj.stopped_by_event);
}

TEST(Integrate, TerminalEventTruncates) {
  auto f = [](double, const Vec<1>&) { return Vec<1>{1.0}; };
  const std::vector<integrate::EventSpec<1>> ev{
      {"half", [](double, const Vec<1>& y) { return y[0] - 0.5; }, 0, true}};
  const auto traj = integrate::integrate<1>(f, Vec<1>{0.0}, {0.0, 3.0}, {}, ev);
  EXPECT_TRUE(traj.stopped_by_event);
  EXPECT_NEAR(traj.final_time(), 0.5, 1e-12);
  EXPECT_NEAR(traj.final_state()[0], 0.5, 1e-12);
}

TEST(Integrate, CollisionEventFiresOnceOnRadialInfall) {
  const Params p{3.0, 1.2, 0.5, -0.25};
  const double th = pi / 2.0;
  const auto v = mcgehee::v_on_level(0.5, th, 0.0, -1, p);
  ASSERT_TRUE(v.has_value());
  auto field = [&p](double, const Vec4& y) { return mcgehee::detail::raw_field(y, p); };
  const std::vector<integrate::EventSpec<4>> ev{
      {"collision", [](double, const Vec4& y) { return y[0] - 1e-6; }, 0, false}};
  const auto traj = integrate::integrate<4>(field, Vec4{0.5, *v, th, 0.0}, {0.0, 40.0}, {}, ev);
  ASSERT_EQ(traj.events.size(), 1u);
  const auto& s = traj.events[0].state;
  EXPECT_NEAR(s[0], 1e-6, 1e-15);
  EXPECT_LT(s[1], 0.0);  // r' = r v < 0
}

TEST(Integrate, EventTimesAreDeterministic) {
  const std::vector<integrate::EventSpec<2>> ev{
      {"zero", [](double, const Vec2& y) { return y[0]; }, 0, false}};
  const auto a = integrate::integrate<2>(harmonic, Vec2{0.3, 0.7}, {0.0, 20.0}, {}, ev);
  const auto b = integrate::integrate<2>(harmonic, Vec2{0.3, 0.7}, {0.0, 20.0}, {}, ev);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].time, b.events[i].time);
    EXPECT_EQ(a.events[i].state, b.events[i].state);
  }
}

TEST(Integrate, EveryMonitorReported) {
  const std::vector<integrate::Monitor<2>> mon{
      {"energy", [](const Vec2& y) { return y[0] * y[0] + y[1] * y[1]; }},
      {"x", [](const Vec2& y) { return y[0]; }}};
  const auto traj = integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 5.0}, {}, {}, mon);
  ASSERT_EQ(traj.invariant_drift.size(), 2u);
  EXPECT_LT(traj.drift("energy"), 1e-9);
  EXPECT_GT(traj.drift("x"), 1.0);
  EXPECT_THROW((void)traj.drift("missing"), ValidationError);
}

TEST(Integrate, StoreStatesOffKeepsEndpoints) {
  IntegratorConfig cfg;
  cfg.store_states = false;
  const auto traj = integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 5.0}, cfg);
  ASSERT_EQ(traj.states.size(), 2u);
  EXPECT_EQ(traj.times.front(), 0.0);
  EXPECT_EQ(traj.times.back(), 5.0);
}

TEST(Integrate, MaxStepsExceeded) {
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  try {
    (void)integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 100.0}, cfg);
    FAIL() << "expected IntegrationError";
  } catch (const integrate::IntegrationError& e) {
    EXPECT_EQ(e.kind(), integrate::IntegrationFailure::MaxSteps);
  }
}

TEST(Integrate, BlowUpUnderflows) {
  auto f = [](double, const Vec<1>& y) { return Vec<1>{y[0] * y[0]}; };
  try {
    (void)integrate::integrate<1>(f, Vec<1>{1.0}, {0.0, 2.0});
    FAIL() << "expected IntegrationError";
  } catch (const integrate::IntegrationError& e) {
    EXPECT_EQ(e.kind(), integrate::IntegrationFailure::StepUnderflow);
  }
}

TEST(Integrate, ForbiddenRegionIsNeverEntered) {
  auto f = [](double, const Vec<1>&) { return Vec<1>{-1.0}; };
  const integrate::ForbiddenRegion<1> below_zero = [](const Vec<1>& y) { return y[0] < 0.0; };
  const std::vector<integrate::EventSpec<1>> none;
  EXPECT_THROW((void)integrate::integrate<1>(f, Vec<1>{1.0}, {0.0, 2.0}, {}, none, {}, below_zero),
               integrate::IntegrationError);
}

TEST(Integrate, NonFiniteFieldIsRejected) {
  auto f = [](double, const Vec<1>& y) {
    return Vec<1>{y[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : -1.0};
  };
  EXPECT_THROW((void)integrate::integrate<1>(f, Vec<1>{1.0}, {0.0, 2.0}),
               integrate::IntegrationError);
}

TEST(Integrate, InputValidation) {
  EXPECT_THROW((void)integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {1.0, 1.0}),
               ValidationError);
  IntegratorConfig bad;
  bad.rel_tol = 0.0;
  EXPECT_THROW((void)integrate::integrate<2>(harmonic, Vec2{1.0, 0.0}, {0.0, 1.0}, bad),
               ValidationError);
  EXPECT_THROW((void)integrate::integrate<2>(harmonic, Vec2{std::nan(""), 0.0}, {0.0, 1.0}),
               DomainError);
}
