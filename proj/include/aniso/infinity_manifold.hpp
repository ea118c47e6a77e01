#pragma once

// Zero-energy flow near r = infinity in (rho, vbar, theta, ubar):
//   rho = 1/r, vbar = rho^((beta-1)/2) v, ubar = rho^((beta-1)/2) u,
// with dtau = rho^((beta-1)/2) ds. The set I0 = {rho = 0, ubar^2 + vbar^2 = 2}
// is invariant and carries the circles of equilibria C+- = {vbar = +-sqrt2, ubar = 0}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/integrate.hpp"
#include "aniso/linalg.hpp"
#include "aniso/mcgehee.hpp"

namespace aniso::infinity {

struct InfinityState {
  double rho = 0.0;
  double vbar = 0.0;
  double theta = 0.0;
  double ubar = 0.0;

  [[nodiscard]] constexpr Vec4 vec() const noexcept { return {rho, vbar, theta, ubar}; }
  [[nodiscard]] static constexpr InfinityState from(const Vec4& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }
};

[[nodiscard]] inline InfinityState to_infinity_coords(const mcgehee::McGeheeState& m,
                                                      const Params& p) {
  validate_common(p, "to_infinity_coords");
  require_zero_energy(p, "to_infinity_coords");
  if (!(m.r > 0.0)) throw DomainError("to_infinity_coords: r = 0 has no image");
  const double rho = 1.0 / m.r;
  const double s = std::pow(rho, 0.5 * (p.beta - 1.0));
  return {rho, s * m.v, m.theta, s * m.u};
}

[[nodiscard]] inline mcgehee::McGeheeState from_infinity_coords(const InfinityState& s,
                                                                const Params& p) {
  if (!(s.rho > 0.0)) throw DomainError("from_infinity_coords: rho = 0 is at infinity");
  const double k = std::pow(s.rho, -0.5 * (p.beta - 1.0));
  return {1.0 / s.rho, k * s.vbar, s.theta, k * s.ubar};
}

/// ubar^2 + vbar^2 - 2 - 2b rho^(beta-1) / Delta^(beta/2); zero for h = 0.
[[nodiscard]] inline double energy_residual(const InfinityState& s, const Params& p) {
  const double d = delta(s.theta, p.mu);
  return s.ubar * s.ubar + s.vbar * s.vbar - 2.0 -
         2.0 * p.b * std::pow(std::max(s.rho, 0.0), p.beta - 1.0) / std::pow(d, 0.5 * p.beta);
}

namespace detail {
inline Vec4 raw_field(const Vec4& y, const Params& p) {
  const double rho = y[0], vb = y[1], th = y[2], ub = y[3];
  const double d = delta(th, p.mu);
  const double rb1 = std::pow(rho, p.beta - 1.0);
  return {
      -rho * vb,
      -0.5 * vb * vb - p.b * (p.beta - 2.0) * rb1 / std::pow(d, 0.5 * p.beta) + 1.0,
      ub,
      -0.5 * ub * vb + p.b * p.beta * p.epsilon() * std::sin(2.0 * th) * rb1 /
                           (2.0 * std::pow(d, 0.5 * (p.beta + 2.0))),
  };
}
}  // namespace detail

/// (rho', vbar', theta', ubar') in the time s. Requires beta > 2 and h = 0.
[[nodiscard]] inline InfinityState infinity_field(const InfinityState& s, const Params& p) {
  require_beta_above(p, 2.0, "infinity_field");
  require_zero_energy(p, "infinity_field");
  if (!(s.rho >= 0.0)) throw DomainError("infinity_field: rho must be >= 0");
  return InfinityState::from(detail::raw_field(s.vec(), p));
}

/// dt/ds for the physical time t: rho^(-3/2).
[[nodiscard]] inline double physical_time_rate(double rho) {
  if (!(rho > 0.0)) throw DomainError("physical_time_rate: unbounded at rho = 0");
  return std::pow(rho, -1.5);
}

/// Integrates the field with the energy residual monitored as "residual".
[[nodiscard]] inline integrate::Trajectory<4> flow(const InfinityState& s0, const Params& p,
                                                   double s_end,
                                                   const integrate::IntegratorConfig& cfg = {}) {
  require_beta_above(p, 2.0, "infinity::flow");
  require_zero_energy(p, "infinity::flow");
  if (!(s0.rho >= 0.0)) throw DomainError("infinity::flow: rho must be >= 0");
  auto field = [&p](double, const Vec4& y) { return detail::raw_field(y, p); };
  const std::vector<integrate::Monitor<4>> monitors{
      {"residual", [&p](const Vec4& y) { return energy_residual(InfinityState::from(y), p); }}};
  return integrate::integrate<4>(field, s0.vec(), {0.0, s_end}, cfg, {}, monitors,
                                 [](const Vec4& y) { return y[0] < 0.0; });
}

/// ubar on the zero-energy level at (rho, vbar, theta), with the given sign.
[[nodiscard]] inline std::optional<double> ubar_on_level(double rho, double vbar, double theta,
                                                         int sign, const Params& p) {
  const double u2 = -energy_residual({rho, vbar, theta, 0.0}, p);
  if (u2 < 0.0) return std::nullopt;
  return (sign >= 0 ? 1.0 : -1.0) * std::sqrt(u2);
}

// ---------------------------------------------------------------------------
// C+ and C-.

struct EquilibriumCircle {
  int sign = +1;

  [[nodiscard]] double vbar() const noexcept { return sign * sqrt2; }
  [[nodiscard]] InfinityState at(double theta) const noexcept { return {0.0, vbar(), theta, 0.0}; }
  [[nodiscard]] std::string name() const { return sign > 0 ? "C+" : "C-"; }
};

[[nodiscard]] inline std::array<EquilibriumCircle, 2> infinity_equilibria(const Params& p) {
  require_beta_above(p, 2.0, "infinity_equilibria");
  require_zero_energy(p, "infinity_equilibria");
  return {EquilibriumCircle{+1}, EquilibriumCircle{-1}};
}

/// Linear part at a point of a circle, restricted to the energy level, in
/// the basis (rho, theta, ubar).
[[nodiscard]] inline Mat3 linearize_infinity(const EquilibriumCircle& c, double theta,
                                             const Params& p) {
  require_beta_above(p, 2.0, "linearize_infinity");
  (void)theta;  // d(ubar')/d(rho) carries rho^(beta-2), which vanishes for beta > 2
  const double v0 = c.vbar();
  return {{{-v0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, -0.5 * v0}}};
}

/// Same matrix from finite differences of the field (forward in rho).
[[nodiscard]] inline Mat3 linearize_infinity_fd(const EquilibriumCircle& c, double theta,
                                                const Params& p, double step = 1e-7) {
  require_beta_above(p, 2.0, "linearize_infinity_fd");
  const Vec4 e = c.at(theta).vec();
  constexpr std::array<int, 3> idx{0, 2, 3};
  const Vec4 f0 = detail::raw_field(e, p);
  Mat3 j{};
  for (std::size_t col = 0; col < 3; ++col) {
    Vec4 plus = e, minus = e;
    plus[idx[col]] += step;
    const Vec4 fp = detail::raw_field(plus, p);
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

struct CircleReport {
  EquilibriumCircle circle;
  std::array<cplx, 3> eigenvalues{};
  /// Two nonzero eigenvalues of the same sign and one zero along the circle.
  bool normally_hyperbolic = false;
  bool attracting = false;
};

[[nodiscard]] inline std::array<CircleReport, 2> classify_infinity(const Params& p) {
  require_zero_energy(p, "classify_infinity");
  std::array<CircleReport, 2> out;
  const auto circles = infinity_equilibria(p);
  for (std::size_t i = 0; i < 2; ++i) {
    CircleReport& r = out[i];
    r.circle = circles[i];
    r.eigenvalues = eigen3(linearize_infinity(circles[i], 0.0, p));
    int zero = 0, neg = 0, pos = 0;
    for (const auto& z : r.eigenvalues) {
      if (std::abs(z) < 1e-12) ++zero;
      else if (z.real() < 0.0) ++neg;
      else ++pos;
    }
    r.normally_hyperbolic = zero == 1 && (neg == 2 || pos == 2);
    r.attracting = r.normally_hyperbolic && neg == 2;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form flow on I0. With ubar = sqrt2 cos(psi), vbar = sqrt2 sin(psi)
// the equations reduce to psi' = cos(psi)/sqrt2, theta' = sqrt2 cos(psi), so
// psi - theta/2 is constant along orbits.

struct I0Curve {
  double theta0 = 0.0;
  double psi0 = 0.0;
  /// vbar(theta) = sqrt2 sin((theta + k)/2).
  double k = 0.0;

  [[nodiscard]] static constexpr double slope() noexcept { return 0.5; }
  [[nodiscard]] double psi(double theta) const noexcept { return psi0 + 0.5 * (theta - theta0); }
  [[nodiscard]] double vbar(double theta) const noexcept {
    return sqrt2 * std::sin(0.5 * (theta + k));
  }
  [[nodiscard]] double ubar(double theta) const noexcept { return sqrt2 * std::cos(psi(theta)); }
  /// theta advance from C- to C+: +2 pi when ubar > 0, -2 pi when ubar < 0.
  [[nodiscard]] double theta_span() const noexcept {
    return std::cos(psi0) > 0.0 ? two_pi : -two_pi;
  }
};

[[nodiscard]] inline I0Curve i0_flow_closed_form(double theta0, double psi0) {
  if (std::abs(std::cos(psi0)) < 1e-12) {
    throw ValidationError("i0_flow_closed_form: ubar = 0 is an equilibrium");
  }
  return {theta0, psi0, 2.0 * psi0 - theta0};
}

/// Angle psi of a point of I0.
[[nodiscard]] inline double i0_angle(const InfinityState& s) {
  if (s.rho != 0.0) throw DomainError("i0_angle: point is not on I0");
  if (std::abs(s.ubar * s.ubar + s.vbar * s.vbar - 2.0) > 1e-9) {
    throw ValidationError("i0_angle: point violates ubar^2 + vbar^2 = 2");
  }
  return std::atan2(s.vbar / sqrt2, s.ubar / sqrt2);
}

// ---------------------------------------------------------------------------
// Asymptotics.

inline constexpr double converged_rho_tol = 1e-8;
inline constexpr double converged_vbar_tol = 1e-6;
inline constexpr double converged_dwell = 1.0;

/// True if the trajectory ends with a stretch of length >= dwell during which
/// rho < rho_tol and |vbar - sign sqrt2| < vbar_tol.
[[nodiscard]] inline bool converged_to(const integrate::Trajectory<4>& traj, int sign,
                                       double dwell = converged_dwell) {
  if (traj.states.empty()) return false;
  const double target = (sign >= 0 ? 1.0 : -1.0) * sqrt2;
  const double t_end = traj.times.back();
  for (std::size_t i = traj.states.size(); i-- > 0;) {
    const auto& y = traj.states[i];
    if (!(std::abs(y[0]) < converged_rho_tol && std::abs(y[1] - target) < converged_vbar_tol)) {
      return false;
    }
    if (std::abs(t_end - traj.times[i]) >= dwell) return true;
  }
  return false;
}

enum class Fate { Escape, Capture, Neither };

/// Escape: forward orbit converges to C+. Capture: backward orbit converges to C-.
/// Checks forward time first. A direction whose integration breaks down (the
/// orbit runs into collision, rho -> infinity) counts as not converging.
[[nodiscard]] inline Fate asymptotic_fate(const InfinityState& s0, const Params& p, double horizon,
                                          const integrate::IntegratorConfig& cfg = {}) {
  if (!(horizon > 0.0)) throw ValidationError("asymptotic_fate: horizon must be > 0");
  auto reaches = [&](double s_end, int sign) {
    try {
      return converged_to(flow(s0, p, s_end, cfg), sign);
    } catch (const integrate::IntegrationError&) {
      return false;
    }
  };
  if (reaches(horizon, +1)) return Fate::Escape;
  if (reaches(-horizon, -1)) return Fate::Capture;
  return Fate::Neither;
}

/// Smallest field norm over a grid of zero-energy states with rho in (0, rho_max].
[[nodiscard]] inline double off_infinity_min_field_norm(const Params& p, double rho_max,
                                                        std::size_t n_rho = 40,
                                                        std::size_t n_theta = 24,
                                                        std::size_t n_v = 21) {
  require_beta_above(p, 2.0, "off_infinity_min_field_norm");
  require_zero_energy(p, "off_infinity_min_field_norm");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= n_rho; ++i) {
    const double rho = rho_max * static_cast<double>(i) / static_cast<double>(n_rho);
    for (std::size_t j = 0; j < n_theta; ++j) {
      const double th = two_pi * static_cast<double>(j) / static_cast<double>(n_theta);
      const auto umax = ubar_on_level(rho, 0.0, th, +1, p);
      if (!umax) continue;
      for (std::size_t k = 0; k < n_v; ++k) {
        const double vb =
            *umax * (-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n_v - 1));
        for (int sign : {+1, -1}) {
          const auto ub = ubar_on_level(rho, vb, th, sign, p);
          if (!ub) continue;
          const Vec4 f = detail::raw_field({rho, vb, th, *ub}, p);
          best = std::min(best, std::hypot(std::hypot(f[0], f[1]), std::hypot(f[2], f[3])));
        }
      }
    }
  }
  return best;
}

}  // namespace aniso::infinity
