#pragma once

// McGehee-regularized coordinates (r, v, theta, u) for beta > 2:
//   r = |q|, theta = arg q, v = r^((beta-2)/2) (q.p), u = r^((beta-2)/2) (q x p),
// with the time rescaling dt/dtau = r^(beta/2 + 1). The field is analytic at
// r = 0 and the collision manifold C = {r = 0, u^2 + v^2 = 2b/Delta^(beta/2)}
// is invariant.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/core_dynamics.hpp"
#include "aniso/integrate.hpp"
#include "aniso/linalg.hpp"
#include "aniso/parallel.hpp"

namespace aniso::mcgehee {

struct McGeheeState {
  double r = 0.0;
  double v = 0.0;
  double theta = 0.0;
  double u = 0.0;

  [[nodiscard]] constexpr Vec4 vec() const noexcept { return {r, v, theta, u}; }
  [[nodiscard]] static constexpr McGeheeState from(const Vec4& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }
};

/// Flow on C in (v, theta, u).
struct CollisionTangent {
  double v = 0.0;
  double theta = 0.0;
  double u = 0.0;
};

/// Orbits reaching r below this value count as collisions.
inline constexpr double collision_threshold = 1e-6;
/// Largest |energy_residual| accepted for a point of C.
inline constexpr double collision_membership_tol = 1e-9;

[[nodiscard]] inline McGeheeState to_mcgehee(const core::CartesianState& s, const Params& p) {
  if (!(s.radius() >= core::collision_radius)) {
    throw DomainError("to_mcgehee: state at the collision singularity");
  }
  const double r = s.radius();
  const double vt = s.x * s.px + s.y * s.py;
  const double ut = s.x * s.py - s.y * s.px;
  const double scale = std::pow(r, 0.5 * (p.beta - 2.0));
  return {r, scale * vt, wrap_angle(std::atan2(s.y, s.x)), scale * ut};
}

[[nodiscard]] inline core::CartesianState from_mcgehee(const McGeheeState& m, const Params& p) {
  if (!(m.r > 0.0)) throw DomainError("from_mcgehee: r = 0 is a collision and has no preimage");
  const double unscale = std::pow(m.r, -0.5 * (p.beta - 2.0));
  const double vt = unscale * m.v;
  const double ut = unscale * m.u;
  const double x = m.r * std::cos(m.theta);
  const double y = m.r * std::sin(m.theta);
  const double r2 = m.r * m.r;
  return {x, y, (vt * x - ut * y) / r2, (vt * y + ut * x) / r2};
}

namespace detail {

// Field without precondition checks; r < 0 yields NaN for non-integer powers.
inline Vec4 raw_field(const Vec4& y, const Params& p) {
  const double r = y[0], v = y[1], th = y[2], u = y[3];
  const double d = delta(th, p.mu);
  const double k = 0.5 * (p.beta - 2.0);
  const double rb1 = std::pow(r, p.beta - 1.0);
  return {
      r * v,
      k * v * v + rb1 + 2.0 * p.h * rb1 * r - p.b * (p.beta - 2.0) / std::pow(d, 0.5 * p.beta),
      u,
      k * u * v + p.b * p.beta * p.epsilon() * std::sin(2.0 * th) /
                      (2.0 * std::pow(d, 0.5 * (p.beta + 2.0))),
  };
}

}  // namespace detail

/// (r', v', theta', u') of the regularized equations, for beta > 2.
[[nodiscard]] inline McGeheeState mcgehee_field(const McGeheeState& m, const Params& p) {
  require_beta_above(p, 2.0, "mcgehee_field");
  if (!(m.r >= 0.0)) throw DomainError("mcgehee_field: r must be >= 0");
  return McGeheeState::from(detail::raw_field(m.vec(), p));
}

/// u^2 + v^2 - 2 r^(beta-1) - 2b/Delta^(beta/2) - 2 h r^beta; zero on the energy level.
[[nodiscard]] inline double energy_residual(const McGeheeState& m, const Params& p) {
  const double d = delta(m.theta, p.mu);
  const double r = std::max(m.r, 0.0);
  const double rb1 = std::pow(r, p.beta - 1.0);
  return m.u * m.u + m.v * m.v - 2.0 * rb1 - 2.0 * p.b / std::pow(d, 0.5 * p.beta) -
         2.0 * p.h * rb1 * r;
}

/// Energy h of the level through m (for r > 0, or any h when r = 0).
[[nodiscard]] inline double energy_of(const McGeheeState& m, const Params& p) {
  if (!(m.r > 0.0)) throw DomainError("energy_of: the energy is undetermined on C");
  Params q = p;
  q.h = 0.0;
  return energy_residual(m, q) / (2.0 * std::pow(m.r, p.beta));
}

/// v on the energy level at (r, theta, u) with the given sign; nullopt if
/// the level does not pass over this point.
[[nodiscard]] inline std::optional<double> v_on_level(double r, double theta, double u, int sign,
                                                      const Params& p) {
  const McGeheeState probe{r, 0.0, theta, u};
  const double v2 = -energy_residual(probe, p);
  if (v2 < 0.0) return std::nullopt;
  return (sign >= 0 ? 1.0 : -1.0) * std::sqrt(v2);
}

/// Flow restricted to C.
[[nodiscard]] inline CollisionTangent collision_flow(const McGeheeState& m, const Params& p) {
  require_beta_above(p, 2.0, "collision_flow");
  if (m.r != 0.0) throw ValidationError("collision_flow: point is not on C (r != 0)");
  if (std::abs(energy_residual(m, p)) > collision_membership_tol) {
    throw ValidationError("collision_flow: point violates u^2 + v^2 = 2b/Delta^(beta/2)");
  }
  const double k = 0.5 * (p.beta - 2.0);
  const double d = delta(m.theta, p.mu);
  return {-k * m.u * m.u, m.u,
          k * m.u * m.v + p.b * p.beta * p.epsilon() * std::sin(2.0 * m.theta) /
                              (2.0 * std::pow(d, 0.5 * (p.beta + 2.0)))};
}

/// Integrates the flow on C in (v, theta, u) with a monitor "residual".
[[nodiscard]] inline integrate::Trajectory<3> collision_arc(
    const McGeheeState& m0, const Params& p, double tau_end,
    const integrate::IntegratorConfig& cfg = {}) {
  (void)collision_flow(m0, p);
  const double k = 0.5 * (p.beta - 2.0);
  auto field = [&p, k](double, const Vec3& y) {
    const double d = delta(y[1], p.mu);
    return Vec3{-k * y[2] * y[2], y[2],
                k * y[2] * y[0] + p.b * p.beta * p.epsilon() * std::sin(2.0 * y[1]) /
                                      (2.0 * std::pow(d, 0.5 * (p.beta + 2.0)))};
  };
  const std::vector<integrate::Monitor<3>> monitors{
      {"residual", [&p](const Vec3& y) {
         return energy_residual({0.0, y[0], y[1], y[2]}, p);
       }}};
  return integrate::integrate<3>(field, Vec3{m0.v, m0.theta, m0.u}, {0.0, tau_end}, cfg, {},
                                 monitors);
}

/// Integrates the regularized flow in tau with the energy residual monitored
/// under the label "residual". Optional terminal collision event at
/// r = collision_threshold.
[[nodiscard]] inline integrate::Trajectory<4> flow(const McGeheeState& m0, const Params& p,
                                                   double tau_end,
                                                   const integrate::IntegratorConfig& cfg = {},
                                                   bool stop_at_collision = false) {
  require_beta_above(p, 2.0, "mcgehee::flow");
  if (!(m0.r >= 0.0)) throw DomainError("mcgehee::flow: r must be >= 0");
  auto field = [&p](double, const Vec4& y) { return detail::raw_field(y, p); };
  std::vector<integrate::EventSpec<4>> events;
  if (stop_at_collision) {
    events.push_back({"collision", [](double, const Vec4& y) { return y[0] - collision_threshold; },
                      -1, true});
  }
  const std::vector<integrate::Monitor<4>> monitors{
      {"residual", [&p](const Vec4& y) { return energy_residual(McGeheeState::from(y), p); }}};
  return integrate::integrate<4>(field, m0.vec(), {0.0, tau_end}, cfg, events, monitors,
                                 [](const Vec4& y) { return y[0] < 0.0; });
}

/// Regularized flow augmented with physical time t, dt/dtau = r^(beta/2+1).
/// State layout (r, v, theta, u, t). Stops when t reaches t_target.
[[nodiscard]] inline integrate::Trajectory<5> flow_to_physical_time(
    const McGeheeState& m0, const Params& p, double t_target, double tau_cap,
    const integrate::IntegratorConfig& cfg = {}) {
  require_beta_above(p, 2.0, "mcgehee::flow_to_physical_time");
  if (!(m0.r > 0.0)) throw DomainError("flow_to_physical_time: needs r > 0");
  auto field = [&p](double, const Vec<5>& y) {
    const Vec4 f = detail::raw_field({y[0], y[1], y[2], y[3]}, p);
    return Vec<5>{f[0], f[1], f[2], f[3], std::pow(y[0], 0.5 * p.beta + 1.0)};
  };
  const double sgn = (t_target >= 0.0) ? 1.0 : -1.0;
  const std::vector<integrate::EventSpec<5>> events{
      {"t", [t_target](double, const Vec<5>& y) { return y[4] - t_target; }, 0, true}};
  auto traj = integrate::integrate<5>(field, Vec<5>{m0.r, m0.v, m0.theta, m0.u, 0.0},
                                      {0.0, sgn * tau_cap}, cfg, events, {},
                                      [](const Vec<5>& y) { return y[0] < 0.0; });
  if (!traj.stopped_by_event) {
    throw NumericalError("flow_to_physical_time: target time not reached within tau cap");
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Equilibria on C.

enum class Stability { Saddle, Source, Sink, SpiralSource, SpiralSink };

[[nodiscard]] inline std::string to_string(Stability s) {
  switch (s) {
    case Stability::Saddle: return "saddle";
    case Stability::Source: return "source";
    case Stability::Sink: return "sink";
    case Stability::SpiralSource: return "spiral-source";
    case Stability::SpiralSink: return "spiral-sink";
  }
  return "?";
}

/// A^sign_{quarter * pi/2}.
struct EquilibriumLabel {
  int quarter = 0;  // 0..3
  int sign = +1;    // +1 or -1

  [[nodiscard]] double theta() const noexcept { return quarter * (pi / 2.0); }
  [[nodiscard]] std::string name() const {
    static const char* angles[] = {"0", "pi/2", "pi", "3pi/2"};
    return std::string("A") + (sign > 0 ? "+" : "-") + "_" + angles[quarter & 3];
  }
  friend bool operator==(const EquilibriumLabel&, const EquilibriumLabel&) = default;
};

struct EquilibriumReport {
  EquilibriumLabel label;
  McGeheeState location;
  std::array<cplx, 3> eigenvalues{};
  /// Empty when some eigenvalue has zero real part (e.g. mu = 1).
  std::optional<Stability> stability;
  bool spiraling = false;
};

[[nodiscard]] inline double spiral_threshold(double beta) {
  return (beta + 2.0) * (beta + 2.0) / (8.0 * beta);
}

[[nodiscard]] inline McGeheeState equilibrium_point(const EquilibriumLabel& l, const Params& p) {
  const double th = l.theta();
  // Delta is exactly mu or 1 at these angles.
  const double d = (l.quarter % 2 == 0) ? p.mu : 1.0;
  return {0.0, l.sign * std::sqrt(2.0 * p.b / std::pow(d, 0.5 * p.beta)), th, 0.0};
}

/// Linear part restricted to the tangent space {dv = 0} of the energy level,
/// in the basis (r, theta, u).
[[nodiscard]] inline Mat3 linearize_at(const EquilibriumLabel& l, const Params& p) {
  require_beta_above(p, 2.0, "linearize_at");
  if (l.quarter < 0 || l.quarter > 3 || (l.sign != 1 && l.sign != -1)) {
    throw ValidationError("linearize_at: not one of the eight equilibria");
  }
  const McGeheeState e = equilibrium_point(l, p);
  const double d = (l.quarter % 2 == 0) ? p.mu : 1.0;
  const double cos2 = (l.quarter % 2 == 0) ? 1.0 : -1.0;
  const double coupling = p.b * p.beta * p.epsilon() * cos2 / std::pow(d, 0.5 * (p.beta + 2.0));
  return {{{e.v, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, coupling, 0.5 * (p.beta - 2.0) * e.v}}};
}

/// Closed-form eigenvalues of linearize_at: v0 and the roots of
/// lambda^2 - (beta-2)/2 v0 lambda - c = 0.
[[nodiscard]] inline std::array<cplx, 3> closed_form_eigenvalues(const EquilibriumLabel& l,
                                                                 const Params& p) {
  const Mat3 j = linearize_at(l, p);
  const double v0 = j[0][0];
  const double c = j[2][1];
  const double half_trace = 0.25 * (p.beta - 2.0) * v0;
  const cplx root = std::sqrt(cplx(half_trace * half_trace + c, 0.0));
  return {cplx(v0, 0.0), half_trace + root, half_trace - root};
}

/// J* from finite differences of the regularized field: forward differences
/// in r (the field needs r >= 0), central differences in theta and u.
[[nodiscard]] inline Mat3 restricted_jacobian_fd(const EquilibriumLabel& l, const Params& p,
                                                 double step = 1e-6) {
  require_beta_above(p, 2.0, "restricted_jacobian_fd");
  const Vec4 e = equilibrium_point(l, p).vec();
  constexpr std::array<int, 3> idx{0, 2, 3};
  Mat3 j{};
  const Vec4 f0 = detail::raw_field(e, p);
  for (std::size_t col = 0; col < 3; ++col) {
    Vec4 plus = e, minus = e;
    plus[idx[col]] += step;
    Vec4 fp = detail::raw_field(plus, p);
    Vec4 fd{};
    if (col == 0) {
      for (std::size_t i = 0; i < 4; ++i) fd[i] = (fp[i] - f0[i]) / step;
    } else {
      minus[idx[col]] -= step;
      const Vec4 fm = detail::raw_field(minus, p);
      for (std::size_t i = 0; i < 4; ++i) fd[i] = (fp[i] - fm[i]) / (2.0 * step);
    }
    for (std::size_t row = 0; row < 3; ++row) j[row][col] = fd[idx[row]];
  }
  return j;
}

namespace detail {
inline EquilibriumReport make_report(const EquilibriumLabel& l, const Params& p) {
  EquilibriumReport rep;
  rep.label = l;
  rep.location = equilibrium_point(l, p);
  rep.eigenvalues = eigen3(linearize_at(l, p));
  rep.spiraling = has_nonreal(rep.eigenvalues);
  int pos = 0, neg = 0;
  for (const auto& z : rep.eigenvalues) {
    if (z.real() > 0.0) ++pos;
    else if (z.real() < 0.0) ++neg;
  }
  if (pos + neg == 3) {
    if (pos == 3) rep.stability = rep.spiraling ? Stability::SpiralSource : Stability::Source;
    else if (neg == 3) rep.stability = rep.spiraling ? Stability::SpiralSink : Stability::Sink;
    else rep.stability = Stability::Saddle;
  }
  return rep;
}
}  // namespace detail

/// The eight equilibria A^{+-}_{0, pi/2, pi, 3pi/2}, all on C.
[[nodiscard]] inline std::vector<EquilibriumReport> equilibria(const Params& p) {
  require_beta_above(p, 2.0, "equilibria");
  std::vector<EquilibriumReport> out;
  for (int sign : {+1, -1}) {
    for (int q = 0; q < 4; ++q) out.push_back(detail::make_report({q, sign}, p));
  }
  return out;
}

/// Equilibria with stability class; requires mu > 1 (hyperbolic case).
[[nodiscard]] inline std::vector<EquilibriumReport> classify(const Params& p) {
  require_beta_above(p, 2.0, "classify");
  if (!(p.mu > 1.0)) throw ValidationError("classify: requires mu > 1 (mu = 1 is degenerate)");
  auto reps = equilibria(p);
  for (const auto& r : reps) {
    if (!r.stability) throw NumericalError("classify: nonhyperbolic equilibrium " + r.label.name());
  }
  return reps;
}

// ---------------------------------------------------------------------------
// Sampled basin of the collision sinks.

/// Box in (r, theta, u); v is solved from the energy relation with v_sign.
struct BasinBox {
  double r_min = 0.01, r_max = 0.05;
  double theta_min = pi / 2.0 - 0.05, theta_max = pi / 2.0 + 0.05;
  double u_min = -0.05, u_max = 0.05;
  int v_sign = -1;
};

struct BasinResult {
  double fraction = 0.0;
  std::size_t collisions = 0;
  std::size_t samples = 0;
  std::size_t rejected_draws = 0;
  double max_residual_drift = 0.0;
  std::vector<McGeheeState> starts;
  std::vector<std::uint8_t> collided;
};

/// Fraction of sampled states of the box that reach r < collision_threshold
/// before tau = horizon. Samples are drawn sequentially from a seeded
/// mt19937_64 (rejecting points off the energy level) and integrated in parallel.
[[nodiscard]] inline BasinResult basin_fraction(const Params& p, std::size_t n, double horizon,
                                                const BasinBox& box = {}, std::uint64_t seed = 1,
                                                const integrate::IntegratorConfig& cfg = {}) {
  require_beta_above(p, 2.0, "basin_fraction");
  if (n < 1) throw ValidationError("basin_fraction: n must be >= 1");
  if (!(horizon > 0.0)) throw ValidationError("basin_fraction: horizon must be > 0");
  if (!(box.r_min > 0.0) || box.r_max < box.r_min || box.theta_max < box.theta_min ||
      box.u_max < box.u_min) {
    throw ValidationError("basin_fraction: malformed sampling box");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(box.r_min, box.r_max);
  std::uniform_real_distribution<double> ut(box.theta_min, box.theta_max);
  std::uniform_real_distribution<double> uu(box.u_min, box.u_max);

  BasinResult res;
  res.samples = n;
  std::vector<McGeheeState>& starts = res.starts;
  starts.reserve(n);
  const std::size_t max_draws = 100 * n + 1000;
  std::size_t draws = 0;
  while (starts.size() < n) {
    if (++draws > max_draws) {
      throw ValidationError("basin_fraction: sampling box does not intersect the energy level");
    }
    const double r = ur(rng), th = ut(rng), u = uu(rng);
    const auto v = v_on_level(r, th, u, box.v_sign, p);
    if (!v) {
      ++res.rejected_draws;
      continue;
    }
    starts.push_back({r, *v, th, u});
  }

  std::vector<std::uint8_t>& hit = res.collided;
  hit.assign(n, 0);
  std::vector<double> drift(n, 0.0);
  integrate::IntegratorConfig local = cfg;
  local.store_states = false;
  parallel_for(n, [&](std::size_t i) {
    const auto traj = flow(starts[i], p, horizon, local, true);
    hit[i] = traj.stopped_by_event ? 1 : 0;
    drift[i] = traj.drift("residual");
  });
  for (std::size_t i = 0; i < n; ++i) {
    res.collisions += hit[i];
    res.max_residual_drift = std::max(res.max_residual_drift, drift[i]);
  }
  res.fraction = static_cast<double>(res.collisions) / static_cast<double>(n);
  return res;
}

/// Smallest field norm over a grid of energy-level states with r in (0, r_max].
/// Positive when there are no equilibria off C.
[[nodiscard]] inline double off_collision_min_field_norm(const Params& p, double r_max,
                                                         std::size_t n_r = 25,
                                                         std::size_t n_theta = 20,
                                                         std::size_t n_u = 10) {
  require_beta_above(p, 2.0, "off_collision_min_field_norm");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= n_r; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(n_r);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = two_pi * static_cast<double>(j) / static_cast<double>(n_theta);
      // u range covering the accessible part of the level at (r, theta).
      const auto vmax = v_on_level(r, th, 0.0, +1, p);
      if (!vmax) continue;
      for (std::size_t k = 0; k < n_u; ++k) {
        const double u = *vmax * (-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n_u - 1));
        for (int sign : {+1, -1}) {
          const auto v = v_on_level(r, th, u, sign, p);
          if (!v) continue;
          const Vec4 f = detail::raw_field({r, *v, th, u}, p);
          best = std::min(best, std::hypot(std::hypot(f[0], f[1]), std::hypot(f[2], f[3])));
        }
      }
    }
  }
  return best;
}

}  // namespace aniso::mcgehee
