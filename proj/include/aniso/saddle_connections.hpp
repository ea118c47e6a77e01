#pragma once

// Flow on the collision manifold in angle coordinates (theta, psi), where
// u = a(theta) sin psi, v = a(theta) cos psi, a = sqrt(2b) / Delta^(beta/4).
// psi = 0 is the v > 0 half (A+ equilibria), psi = pi the v < 0 half.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/integrate.hpp"
#include "aniso/linalg.hpp"
#include "aniso/mcgehee.hpp"
#include "aniso/quadrature.hpp"

namespace aniso::saddle {

struct TorusState {
  double theta = 0.0;
  double psi = 0.0;

  [[nodiscard]] constexpr Vec2 vec() const noexcept { return {theta, psi}; }
  [[nodiscard]] static constexpr TorusState from(const Vec2& a) noexcept { return {a[0], a[1]}; }
};

/// Radius of the collision circle over theta.
[[nodiscard]] inline double amplitude(double theta, const Params& p) {
  return std::sqrt(2.0 * p.b) / std::pow(delta(theta, p.mu), 0.25 * p.beta);
}

[[nodiscard]] inline TorusState to_torus(const mcgehee::McGeheeState& m) {
  if (m.r != 0.0) throw DomainError("to_torus: point is not on C");
  return {m.theta, std::atan2(m.u, m.v)};
}

[[nodiscard]] inline mcgehee::McGeheeState from_torus(const TorusState& t, const Params& p) {
  const double a = amplitude(t.theta, p);
  return {0.0, a * std::cos(t.psi), t.theta, a * std::sin(t.psi)};
}

/// (theta', psi').
[[nodiscard]] inline TorusState torus_field(const TorusState& t, const Params& p) {
  require_beta_above(p, 2.0, "torus_field");
  const double d = delta(t.theta, p.mu);
  const double a = std::sqrt(2.0 * p.b) / std::pow(d, 0.25 * p.beta);
  const double s = std::sin(t.psi);
  return {a * s, 0.5 * (p.beta - 2.0) * a * s +
                     0.25 * p.beta * p.epsilon() * std::sqrt(2.0 * p.b) /
                         std::pow(d, 0.25 * (p.beta + 4.0)) * std::sin(2.0 * t.theta) *
                         std::cos(t.psi)};
}

/// Analytic Jacobian of torus_field in (theta, psi).
[[nodiscard]] inline Mat2 torus_jacobian(const TorusState& t, const Params& p) {
  require_beta_above(p, 2.0, "torus_jacobian");
  const double sq = std::sqrt(2.0 * p.b);
  const double eps = p.epsilon();
  const double d = delta(t.theta, p.mu);
  const double dd = -eps * std::sin(2.0 * t.theta);  // dDelta/dtheta
  const double a = sq * std::pow(d, -0.25 * p.beta);
  const double da = -0.25 * p.beta * a / d * dd;
  const double m = 0.25 * p.beta * eps * sq * std::pow(d, -0.25 * (p.beta + 4.0));
  const double dm = -0.25 * (p.beta + 4.0) * m / d * dd;
  const double k = 0.5 * (p.beta - 2.0);
  const double s = std::sin(t.psi), c = std::cos(t.psi);
  const double s2 = std::sin(2.0 * t.theta), c2 = std::cos(2.0 * t.theta);
  return {{{da * s, a * c},
           {k * da * s + dm * s2 * c + 2.0 * m * c2 * c, k * a * c - m * s2 * s}}};
}

/// dpsi/dtheta = psi'/theta'. Singular on sin psi = 0.
[[nodiscard]] inline double slope_field_F(double theta, double psi, const Params& p) {
  require_beta_above(p, 2.0, "slope_field_F");
  const double s = std::sin(psi);
  if (std::abs(s) < 1e-12) throw DomainError("slope_field_F: singular where sin(psi) = 0");
  if (p.epsilon() == 0.0) return 0.5 * (p.beta - 2.0);
  const double d = delta(theta, p.mu);
  return 0.5 * (p.beta - 2.0) +
         0.25 * p.beta * p.epsilon() * std::sin(2.0 * theta) * std::cos(psi) / (d * s);
}

/// dF/depsilon at epsilon = 0.
[[nodiscard]] inline double slope_field_dF_deps(double theta, double psi, double beta) {
  const double s = std::sin(psi);
  if (std::abs(s) < 1e-12) throw DomainError("slope_field_dF_deps: singular where sin(psi) = 0");
  return 0.5 * beta * std::cos(theta) * std::sin(theta) * std::cos(psi) / s;
}

namespace detail {
inline void require_connection_beta(double beta, const char* where) {
  if (beta != 3.0 && beta != 4.0) {
    throw ValidationError(std::string(where) + ": only beta = 3 and beta = 4 are supported");
  }
}
}  // namespace detail

/// Unperturbed connection leaving (-pi, 0).
[[nodiscard]] inline double zeta0(double beta, double theta) {
  detail::require_connection_beta(beta, "zeta0");
  return beta == 3.0 ? 0.5 * theta + 0.5 * pi : theta + pi;
}

/// First-order correction d(psi)/d(epsilon) of the connection, closed form.
[[nodiscard]] inline double zeta1(double beta, double theta) {
  detail::require_connection_beta(beta, "zeta1");
  if (beta == 3.0) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    return -4.5 * c * s + 0.75 * theta + 3.0 * c * c * c * s + 0.75 * pi;
  }
  return std::cos(theta) * std::sin(theta) + theta + pi;
}

/// The defining integral (beta/2) int_{-pi}^{theta} cos sin cot(zeta0) by quadrature.
[[nodiscard]] inline double zeta1_quadrature(double beta, double theta) {
  detail::require_connection_beta(beta, "zeta1_quadrature");
  if (theta == -pi) return 0.0;
  // The quotient has a removable singularity at eta = -pi, which the
  // Gauss-Kronrod nodes never touch.
  auto f = [beta](double eta) {
    const double z = zeta0(beta, eta);
    return 0.5 * beta * std::cos(eta) * std::sin(eta) * std::cos(z) / std::sin(z);
  };
  return quadrature::adaptive(f, -pi, theta, 1e-12, 1e-12).value;
}

enum class Direction { Stable, Unstable };

struct ManifoldBranch {
  TorusState origin;
  Direction direction = Direction::Unstable;
  std::vector<TorusState> samples;
  double arc_length = 0.0;
  /// Crossing with the section theta = section_theta.
  TorusState section_point;
};

/// Eigen-direction of the saddle at origin for the requested direction, with
/// a positive theta-component. Throws if no such hyperbolic direction exists.
[[nodiscard]] inline Vec2 saddle_direction(const TorusState& origin, Direction dir,
                                           const Params& p) {
  const TorusState f = torus_field(origin, p);
  if (std::hypot(f.theta, f.psi) > 1e-12) {
    throw ValidationError("saddle_direction: origin is not an equilibrium of the torus flow");
  }
  const Mat2 j = torus_jacobian(origin, p);
  const auto ev = eigen2(j);
  for (const auto& z : ev) {
    if (z.imag() != 0.0) break;
    const double lam = z.real();
    const bool wanted = (dir == Direction::Unstable) ? lam > 0.0 : lam < 0.0;
    if (!wanted) continue;
    // (J - lam) x = 0 with J = [[j00, j01], [j10, j11]].
    Vec2 x = std::abs(j[0][1]) > 0.0 ? Vec2{j[0][1], lam - j[0][0]}
                                     : Vec2{lam - j[1][1], j[1][0]};
    const double n = std::hypot(x[0], x[1]);
    if (!(n > 0.0)) break;
    x = {x[0] / n, x[1] / n};
    if (x[0] < 0.0) x = {-x[0], -x[1]};
    return x;
  }
  throw ValidationError("saddle_direction: origin has no such hyperbolic direction");
}

/// Continues a branch of W^u or W^s of the saddle `origin` from a point
/// `offset` along its eigenvector (branch_sign picks the side), parametrized
/// by arc length, until theta crosses section_theta or the arc length
/// exceeds cap.
[[nodiscard]] inline ManifoldBranch trace_manifold(const TorusState& origin, Direction dir,
                                                   int branch_sign, double section_theta,
                                                   const Params& p,
                                                   const integrate::IntegratorConfig& cfg = {},
                                                   double offset = 1e-6, double cap = 100.0) {
  require_beta_above(p, 2.0, "trace_manifold");
  if (!(offset > 0.0) || !(cap > 0.0)) throw ValidationError("trace_manifold: bad offset or cap");
  const Vec2 e = saddle_direction(origin, dir, p);
  const double sg = branch_sign >= 0 ? 1.0 : -1.0;
  const Vec2 y0{origin.theta + sg * offset * e[0], origin.psi + sg * offset * e[1]};
  // Unstable branches follow the flow; stable ones follow it backwards.
  const double time_sign = dir == Direction::Unstable ? 1.0 : -1.0;
  auto field = [&p, time_sign](double, const Vec2& y) {
    const TorusState f = torus_field(TorusState::from(y), p);
    const double n = std::hypot(f.theta, f.psi);
    return Vec2{time_sign * f.theta / n, time_sign * f.psi / n};
  };
  const std::vector<integrate::EventSpec<2>> events{
      {"section", [section_theta](double, const Vec2& y) { return y[0] - section_theta; }, 0,
       true}};
  const auto traj = integrate::integrate<2>(field, y0, {0.0, cap}, cfg, events, {});
  if (!traj.stopped_by_event) {
    throw NumericalError("trace_manifold: branch did not reach the section within the arc-length cap");
  }
  ManifoldBranch br;
  br.origin = origin;
  br.direction = dir;
  br.samples.reserve(traj.states.size());
  for (const auto& s : traj.states) br.samples.push_back(TorusState::from(s));
  br.arc_length = traj.final_time();
  br.section_point = TorusState::from(traj.events.back().state);
  return br;
}

/// Reversor of the torus flow: maps solutions to solutions with time reversed.
[[nodiscard]] inline TorusState reverse(double beta, const TorusState& t) {
  detail::require_connection_beta(beta, "reverse");
  if (beta == 3.0) return {-t.theta, pi - t.psi};
  return {-t.theta - pi, pi - t.psi};
}

/// The reversor of `reverse` for beta = 3, valid for every beta > 2.
[[nodiscard]] inline TorusState reverse_theta(const TorusState& t) { return {-t.theta, pi - t.psi}; }

/// Section where the connection leaving (-pi, 0) meets its reversed image.
[[nodiscard]] inline double connection_section(double beta) {
  detail::require_connection_beta(beta, "connection_section");
  return beta == 3.0 ? 0.0 : -pi / 2.0;
}

struct SplittingResult {
  double psi_unstable = 0.0;
  double psi_stable = 0.0;
  /// psi_unstable - psi_stable at the section.
  double gap = 0.0;
  double threshold = 0.0;
  bool broken = false;
  double arc_length = 0.0;
};

/// Traces the branch of W^u(-pi, 0) heading to the section and compares it
/// with the stable branch obtained by the reversor.
[[nodiscard]] inline SplittingResult splitting(double beta, const Params& p,
                                               const integrate::IntegratorConfig& cfg = {}) {
  detail::require_connection_beta(beta, "splitting");
  if (p.beta != beta) throw ValidationError("splitting: Params.beta does not match beta");
  const double section = connection_section(beta);
  const ManifoldBranch br = trace_manifold({-pi, 0.0}, Direction::Unstable, +1, section, p, cfg);
  SplittingResult res;
  res.psi_unstable = br.section_point.psi;
  res.psi_stable = reverse(beta, br.section_point).psi;
  res.gap = res.psi_unstable - res.psi_stable;
  res.threshold = 10.0 * cfg.rel_tol;
  res.broken = std::abs(res.gap) > res.threshold;
  res.arc_length = br.arc_length;
  return res;
}

/// First-order gap per unit epsilon: the two branches move symmetrically.
[[nodiscard]] inline double predicted_gap_slope(double beta) {
  return 2.0 * zeta1(beta, connection_section(beta));
}

// ---------------------------------------------------------------------------
// mu = 1: straight-line connections of slope (beta-2)/2.

/// theta advance of an unperturbed connection from psi = 0 to psi = pi.
[[nodiscard]] inline double connection_theta_advance(double beta) {
  if (!(beta > 2.0)) throw ValidationError("connection_theta_advance: beta must be > 2");
  return 2.0 * pi / (beta - 2.0);
}

/// True when the unperturbed connection ends at one of theta = 0, pi/2, pi, 3pi/2.
[[nodiscard]] inline bool closes_on_equilibrium(double beta, double tol = 1e-12) {
  const double q = connection_theta_advance(beta) / (pi / 2.0);
  return std::abs(q - std::round(q)) <= tol * std::max(1.0, q);
}

/// beta = 2 + 2/(1+2k).
[[nodiscard]] inline double odd_family_beta(int k) { return 2.0 + 2.0 / (1.0 + 2.0 * k); }
/// beta = 2 + 1/(1+k).
[[nodiscard]] inline double even_family_beta(int k) { return 2.0 + 1.0 / (1.0 + k); }

}  // namespace aniso::saddle
