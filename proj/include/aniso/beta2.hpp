#pragma once

// beta = 2: H2 = pr^2/2 + ptheta^2/(2 r^2) - 1/r - b/(r^2 Delta) admits the
// second integral G = ptheta^2/2 - b/Delta. McGehee variables reduce to
// v = r pr, u = ptheta with dt/dtau = r^2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/infinity_manifold.hpp"
#include "aniso/integrate.hpp"
#include "aniso/mcgehee.hpp"

namespace aniso::beta2 {

using infinity::InfinityState;
using mcgehee::McGeheeState;

struct PolarState {
  double r = 1.0;
  double theta = 0.0;
  double pr = 0.0;
  double ptheta = 0.0;

  [[nodiscard]] constexpr Vec4 vec() const noexcept { return {r, theta, pr, ptheta}; }
  [[nodiscard]] static constexpr PolarState from(const Vec4& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }
};

namespace detail {
inline void require_beta2(const Params& p, const char* where) { require_beta_equal(p, 2.0, where); }
inline void require_positive_r(double r, const char* where) {
  if (!(r > 0.0)) throw DomainError(std::string(where) + ": r must be > 0");
}
}  // namespace detail

[[nodiscard]] inline double H2(const PolarState& s, const Params& p) {
  detail::require_beta2(p, "H2");
  detail::require_positive_r(s.r, "H2");
  const double r2 = s.r * s.r;
  return 0.5 * s.pr * s.pr + 0.5 * s.ptheta * s.ptheta / r2 - 1.0 / s.r -
         p.b / (r2 * delta(s.theta, p.mu));
}

[[nodiscard]] inline double integral_G(const PolarState& s, const Params& p) {
  detail::require_beta2(p, "integral_G");
  return 0.5 * s.ptheta * s.ptheta - p.b / delta(s.theta, p.mu);
}

/// Partial derivatives of H2 and G entering {H2, G}.
struct BracketPartials {
  double dH_dtheta = 0.0;
  double dH_dptheta = 0.0;
  double dG_dtheta = 0.0;
  double dG_dptheta = 0.0;
};

[[nodiscard]] inline BracketPartials bracket_partials(const PolarState& s, const Params& p) {
  detail::require_beta2(p, "bracket_partials");
  detail::require_positive_r(s.r, "bracket_partials");
  const double d = delta(s.theta, p.mu);
  const double dG = -p.b * p.epsilon() * std::sin(2.0 * s.theta) / (d * d);
  const double r2 = s.r * s.r;
  return {dG / r2, s.ptheta / r2, dG, s.ptheta};
}

/// {H2, G}; G does not depend on (r, pr), so only the theta pair contributes.
[[nodiscard]] inline double poisson_bracket_H2_G(const PolarState& s, const Params& p) {
  const BracketPartials d = bracket_partials(s, p);
  return d.dH_dtheta * d.dG_dptheta - d.dH_dptheta * d.dG_dtheta;
}

/// Hamilton's equations of H2 in physical time.
[[nodiscard]] inline PolarState polar_field(const PolarState& s, const Params& p) {
  detail::require_beta2(p, "polar_field");
  detail::require_positive_r(s.r, "polar_field");
  const double d = delta(s.theta, p.mu);
  const double r2 = s.r * s.r, r3 = r2 * s.r;
  return {s.pr, s.ptheta / r2,
          s.ptheta * s.ptheta / r3 - 1.0 / r2 - 2.0 * p.b / (r3 * d),
          p.b * p.epsilon() * std::sin(2.0 * s.theta) / (r2 * d * d)};
}

[[nodiscard]] inline McGeheeState to_mcgehee(const PolarState& s) {
  detail::require_positive_r(s.r, "beta2::to_mcgehee");
  return {s.r, s.r * s.pr, s.theta, s.ptheta};
}

[[nodiscard]] inline PolarState from_mcgehee(const McGeheeState& m) {
  detail::require_positive_r(m.r, "beta2::from_mcgehee");
  return {m.r, m.theta, m.v / m.r, m.u};
}

// ---------------------------------------------------------------------------
// McGehee form.

namespace detail {
inline Vec4 mcgehee_raw(const Vec4& y, const Params& p) {
  const double r = y[0], th = y[2], u = y[3];
  const double d = delta(th, p.mu);
  return {r * y[1], 2.0 * r * r * p.h + r, u,
          p.epsilon() * p.b * std::sin(2.0 * th) / (d * d)};
}
}  // namespace detail

/// (r', v', theta', u').
[[nodiscard]] inline McGeheeState beta2_mcgehee_field(const McGeheeState& m, const Params& p) {
  detail::require_beta2(p, "beta2_mcgehee_field");
  if (!(m.r >= 0.0)) throw DomainError("beta2_mcgehee_field: r must be >= 0");
  return McGeheeState::from(detail::mcgehee_raw(m.vec(), p));
}

/// u^2 + v^2 - 2r - 2b/Delta - 2 r^2 h.
[[nodiscard]] inline double energy_residual(const McGeheeState& m, const Params& p) {
  return m.u * m.u + m.v * m.v - 2.0 * m.r - 2.0 * p.b / delta(m.theta, p.mu) -
         2.0 * m.r * m.r * p.h;
}

/// g = (u^2 - 2b/Delta)/2, equal to G.
[[nodiscard]] inline double g_integral(const McGeheeState& m, const Params& p) {
  return 0.5 * (m.u * m.u - 2.0 * p.b / delta(m.theta, p.mu));
}

/// McGehee flow in tau with monitors "residual" and "g"; optional terminal
/// event at r = collision_threshold.
[[nodiscard]] inline integrate::Trajectory<4> mcgehee_flow(
    const McGeheeState& m0, const Params& p, double tau_end,
    const integrate::IntegratorConfig& cfg = {}, bool stop_at_collision = false) {
  detail::require_beta2(p, "beta2::mcgehee_flow");
  if (!(m0.r >= 0.0)) throw DomainError("beta2::mcgehee_flow: r must be >= 0");
  auto field = [&p](double, const Vec4& y) { return detail::mcgehee_raw(y, p); };
  std::vector<integrate::EventSpec<4>> events;
  if (stop_at_collision) {
    events.push_back({"collision",
                      [](double, const Vec4& y) { return y[0] - mcgehee::collision_threshold; }, 0,
                      true});
  }
  const std::vector<integrate::Monitor<4>> monitors{
      {"residual", [&p](const Vec4& y) { return beta2::energy_residual(McGeheeState::from(y), p); }},
      {"g", [&p](const Vec4& y) { return g_integral(McGeheeState::from(y), p); }}};
  return integrate::integrate<4>(field, m0.vec(), {0.0, tau_end}, cfg, events, monitors,
                                 [](const Vec4& y) { return y[0] < 0.0; });
}

/// McGehee flow in tau monitoring H2 and G of the corresponding polar state.
/// The level h is taken from s0 (p.h is ignored). The orbit must stay off r = 0.
[[nodiscard]] inline integrate::Trajectory<4> polar_invariants_flow(
    const PolarState& s0, const Params& p, double tau_end,
    const integrate::IntegratorConfig& cfg = {}) {
  detail::require_beta2(p, "polar_invariants_flow");
  Params level = p;
  level.h = H2(s0, p);
  auto field = [level](double, const Vec4& y) { return detail::mcgehee_raw(y, level); };
  const std::vector<integrate::Monitor<4>> monitors{
      {"H2", [&p](const Vec4& y) { return H2(from_mcgehee(McGeheeState::from(y)), p); }},
      {"G", [&p](const Vec4& y) { return integral_G(from_mcgehee(McGeheeState::from(y)), p); }}};
  return integrate::integrate<4>(field, to_mcgehee(s0).vec(), {0.0, tau_end}, cfg, {}, monitors,
                                 [](const Vec4& y) { return !(y[0] > 0.0); });
}

/// Outer radius of the Hill region at angle theta for h < 0: the positive root
/// of 2 r^2 h + 2 r + 2b/Delta = 0.
[[nodiscard]] inline double zero_velocity_radius(double theta, const Params& p) {
  detail::require_beta2(p, "zero_velocity_radius");
  if (!(p.h < 0.0)) throw ValidationError("zero_velocity_radius: requires h < 0");
  const double d = delta(theta, p.mu);
  return (-1.0 - std::sqrt(1.0 - 4.0 * p.h * p.b / d)) / (2.0 * p.h);
}

// ---------------------------------------------------------------------------
// Infinity, h = 0.

namespace detail {
inline Vec4 infinity_raw(const Vec4& y, const Params& p) {
  const double rho = y[0], vb = y[1], th = y[2], ub = y[3];
  const double d = delta(th, p.mu);
  return {-rho * vb, -0.5 * vb * vb + 1.0, ub,
          -0.5 * vb * ub + p.epsilon() * p.b * rho * std::sin(2.0 * th) / (d * d)};
}
}  // namespace detail

[[nodiscard]] inline InfinityState beta2_infinity_field(const InfinityState& s, const Params& p) {
  detail::require_beta2(p, "beta2_infinity_field");
  require_zero_energy(p, "beta2_infinity_field");
  if (!(s.rho >= 0.0)) throw DomainError("beta2_infinity_field: rho must be >= 0");
  return InfinityState::from(detail::infinity_raw(s.vec(), p));
}

/// ubar^2 + vbar^2 - 2 - 2b rho/Delta.
[[nodiscard]] inline double infinity_energy_residual(const InfinityState& s, const Params& p) {
  return s.ubar * s.ubar + s.vbar * s.vbar - 2.0 - 2.0 * p.b * s.rho / delta(s.theta, p.mu);
}

/// ubar^2 - 2b rho/Delta - 2 rho g.
[[nodiscard]] inline double infinity_integral_residual(const InfinityState& s, double g,
                                                       const Params& p) {
  return s.ubar * s.ubar - 2.0 * p.b * s.rho / delta(s.theta, p.mu) - 2.0 * s.rho * g;
}

/// g of an infinity state with rho > 0.
[[nodiscard]] inline double g_of(const InfinityState& s, const Params& p) {
  if (!(s.rho > 0.0)) throw DomainError("g_of: rho must be > 0");
  return (s.ubar * s.ubar - 2.0 * p.b * s.rho / delta(s.theta, p.mu)) / (2.0 * s.rho);
}

[[nodiscard]] inline double rho_vbar_constant(double rho0, double vbar0) {
  const double den = vbar0 * vbar0 - 2.0;
  if (den == 0.0) throw DomainError("rho_vbar_constant: vbar0^2 = 2");
  return rho0 / den;
}

/// Flow of the infinity system with monitors "residual", "integral" (for the
/// g of s0, or 0 on rho = 0) and "rho_relation" (rho - k (vbar^2 - 2), only
/// when vbar0^2 != 2).
[[nodiscard]] inline integrate::Trajectory<4> infinity_flow(
    const InfinityState& s0, const Params& p, double s_end,
    const integrate::IntegratorConfig& cfg = {},
    std::vector<integrate::EventSpec<4>> events = {}) {
  detail::require_beta2(p, "beta2::infinity_flow");
  require_zero_energy(p, "beta2::infinity_flow");
  if (!(s0.rho >= 0.0)) throw DomainError("beta2::infinity_flow: rho must be >= 0");
  const double g0 = s0.rho > 0.0 ? g_of(s0, p) : 0.0;
  auto field = [&p](double, const Vec4& y) { return detail::infinity_raw(y, p); };
  std::vector<integrate::Monitor<4>> monitors{
      {"residual",
       [&p](const Vec4& y) { return infinity_energy_residual(InfinityState::from(y), p); }},
      {"integral", [&p, g0](const Vec4& y) {
         return infinity_integral_residual(InfinityState::from(y), g0, p);
       }}};
  if (s0.vbar * s0.vbar != 2.0) {
    const double k = rho_vbar_constant(s0.rho, s0.vbar);
    monitors.push_back(
        {"rho_relation", [k](const Vec4& y) { return y[0] - k * (y[1] * y[1] - 2.0); }});
  }
  return integrate::integrate<4>(field, s0.vec(), {0.0, s_end}, cfg, events, monitors,
                                 [](const Vec4& y) { return y[0] < 0.0; });
}

/// I0 for beta = 2: the circles {rho = 0, ubar = 0, vbar = +-sqrt2}.
[[nodiscard]] inline std::array<infinity::EquilibriumCircle, 2> beta2_infinity_manifold(
    const Params& p) {
  detail::require_beta2(p, "beta2_infinity_manifold");
  require_zero_energy(p, "beta2_infinity_manifold");
  return {infinity::EquilibriumCircle{+1}, infinity::EquilibriumCircle{-1}};
}

/// Membership in the beta = 2 I0 (energy relation plus ubar = 0).
[[nodiscard]] inline bool in_beta2_I0(const InfinityState& s, const Params& p, double tol = 1e-12) {
  return s.rho == 0.0 && std::abs(s.ubar) <= tol &&
         std::abs(infinity_energy_residual(s, p)) <= tol;
}

// ---------------------------------------------------------------------------
// Heteroclinic classification.

enum class HeteroclinicTarget { EquatorPeriodic, PeriodicAtV, FixedPointsA0Api, FixedPointsAHalfPi };

[[nodiscard]] inline std::string to_string(HeteroclinicTarget t) {
  switch (t) {
    case HeteroclinicTarget::EquatorPeriodic: return "equator-periodic";
    case HeteroclinicTarget::PeriodicAtV: return "periodic-at-v";
    case HeteroclinicTarget::FixedPointsA0Api: return "fixed-points-A0-Api";
    case HeteroclinicTarget::FixedPointsAHalfPi: return "fixed-points-A+-pi/2";
  }
  return "?";
}

struct HeteroclinicClass {
  /// rho0 / (vbar0^2 - 2); infinite for the equator case.
  double k = 0.0;
  HeteroclinicTarget target = HeteroclinicTarget::EquatorPeriodic;
  /// Limit of v on C: +-sqrt(1/k), or 0 for the equator case.
  double v_limit = 0.0;
  /// vbar0 > 0: the orbit lies in an unstable manifold of the collision set.
  bool unstable = true;
  /// Names of the collision-manifold equilibria involved, if any.
  std::vector<std::string> fixed_points;
};

inline constexpr double classification_tol = 1e-9;

[[nodiscard]] inline HeteroclinicClass classify_heteroclinic(double rho0, double vbar0,
                                                             const Params& p) {
  detail::require_beta2(p, "classify_heteroclinic");
  require_zero_energy(p, "classify_heteroclinic");
  if (!(rho0 > 0.0)) throw ValidationError("classify_heteroclinic: rho0 must be > 0");
  if (vbar0 == 0.0) throw ValidationError("classify_heteroclinic: vbar0 must be nonzero");
  HeteroclinicClass out;
  out.unstable = vbar0 > 0.0;
  const double sgn = out.unstable ? 1.0 : -1.0;
  if (std::abs(vbar0 * vbar0 - 2.0) <= classification_tol) {
    out.k = std::numeric_limits<double>::infinity();
    out.target = HeteroclinicTarget::EquatorPeriodic;
    return out;
  }
  out.k = rho_vbar_constant(rho0, vbar0);
  if (!(out.k > 0.0)) throw ValidationError("classify_heteroclinic: k <= 0, no heteroclinic");
  const double s = std::sqrt(1.0 / out.k);
  const double top = std::sqrt(2.0 * p.b);
  if (s > top + classification_tol) {
    throw ValidationError("classify_heteroclinic: sqrt(1/k) > sqrt(2b) violates ubar^2 >= 0");
  }
  out.v_limit = sgn * s;
  const std::string tag = out.unstable ? "+" : "-";
  if (std::abs(s - top) <= classification_tol) {
    out.target = HeteroclinicTarget::FixedPointsAHalfPi;
    out.fixed_points = {"A" + tag + "_-pi/2", "A" + tag + "_pi/2"};
  } else if (std::abs(s - std::sqrt(2.0 * p.b / p.mu)) <= classification_tol) {
    out.target = HeteroclinicTarget::FixedPointsA0Api;
    out.fixed_points = {"A" + tag + "_0", "A" + tag + "_pi"};
  } else {
    out.target = HeteroclinicTarget::PeriodicAtV;
  }
  return out;
}

/// Initial state near I0 with vbar > 0 for a prescribed 1/k (0 gives the
/// equator family vbar = sqrt2). Returns nullopt if ubar^2 would be negative.
[[nodiscard]] inline std::optional<InfinityState> seed_near_infinity(double inv_k, double rho0,
                                                                     double theta0,
                                                                     const Params& p) {
  const double vb = std::sqrt(2.0 + rho0 * inv_k);
  const double u2 = rho0 * (2.0 * p.b / delta(theta0, p.mu) - inv_k);
  if (u2 < -1e-15) return std::nullopt;
  return InfinityState{rho0, vb, theta0, std::sqrt(std::max(u2, 0.0))};
}

struct CollisionTrace {
  /// State at r = collision_threshold.
  McGeheeState at_collision;
  /// Infinity-system time (<= 0) at which rho reached the switch value.
  double s_switch = 0.0;
  /// McGehee time (<= 0) from the switch to the collision threshold.
  double tau_collision = 0.0;
  double max_residual_drift = 0.0;
  double max_g_drift = 0.0;
};

/// Follows an orbit backward from near I0: in the infinity chart until
/// rho = rho_switch, then in McGehee variables until r = collision_threshold.
[[nodiscard]] inline CollisionTrace trace_to_collision(const InfinityState& s0, const Params& p,
                                                       const integrate::IntegratorConfig& cfg = {},
                                                       double rho_switch = 1.0,
                                                       double s_cap = 200.0,
                                                       double tau_cap = 1e5) {
  detail::require_beta2(p, "trace_to_collision");
  if (!(s0.rho > 0.0) || !(s0.rho < rho_switch)) {
    throw ValidationError("trace_to_collision: need 0 < rho0 < rho_switch");
  }
  integrate::IntegratorConfig local = cfg;
  local.store_states = false;
  std::vector<integrate::EventSpec<4>> ev{
      {"switch", [rho_switch](double, const Vec4& y) { return y[0] - rho_switch; }, 0, true}};
  const auto leg1 = infinity_flow(s0, p, -s_cap, local, ev);
  if (!leg1.stopped_by_event) {
    throw NumericalError("trace_to_collision: rho did not reach the switch value");
  }
  const InfinityState sw = InfinityState::from(leg1.final_state());
  const double scale = 1.0 / std::sqrt(sw.rho);
  const McGeheeState m0{1.0 / sw.rho, sw.vbar * scale, sw.theta, sw.ubar * scale};
  const auto leg2 = mcgehee_flow(m0, p, -tau_cap, local, true);
  if (!leg2.stopped_by_event) {
    throw NumericalError("trace_to_collision: collision threshold not reached");
  }
  CollisionTrace out;
  out.at_collision = McGeheeState::from(leg2.final_state());
  out.s_switch = leg1.final_time();
  out.tau_collision = leg2.final_time();
  out.max_residual_drift = std::max(leg1.drift("residual"), leg2.drift("residual"));
  out.max_g_drift = leg2.drift("g");
  return out;
}

}  // namespace aniso::beta2
