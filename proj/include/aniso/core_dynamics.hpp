#pragma once

// Unregularized Hamiltonian flow H = |p|^2/2 + U_beta(q),
// U_beta(x, y) = -1/sqrt(x^2 + y^2) - b/(mu x^2 + y^2)^(beta/2).

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/integrate.hpp"

namespace aniso::core {

struct CartesianState {
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;
  double py = 0.0;

  [[nodiscard]] constexpr Vec4 vec() const noexcept { return {x, y, px, py}; }
  [[nodiscard]] static constexpr CartesianState from(const Vec4& v) noexcept {
    return {v[0], v[1], v[2], v[3]};
  }
  [[nodiscard]] double radius() const noexcept { return std::hypot(x, y); }
};

/// Below this radius a Cartesian state is treated as a collision.
inline constexpr double collision_radius = 1e-12;

namespace detail {
inline void require_off_origin(const CartesianState& s, const char* where) {
  if (!(s.radius() >= collision_radius)) {
    throw DomainError(std::string(where) + ": state at the collision singularity");
  }
}
}  // namespace detail

[[nodiscard]] inline double potential(const CartesianState& s, const Params& p) {
  detail::require_off_origin(s, "potential");
  const double r = s.radius();
  const double w = p.mu * s.x * s.x + s.y * s.y;
  return -1.0 / r - p.b / std::pow(w, 0.5 * p.beta);
}

/// (dU/dx, dU/dy).
[[nodiscard]] inline Vec2 grad_potential(const CartesianState& s, const Params& p) {
  detail::require_off_origin(s, "grad_potential");
  const double r2 = s.x * s.x + s.y * s.y;
  const double r3 = r2 * std::sqrt(r2);
  const double w = p.mu * s.x * s.x + s.y * s.y;
  const double k = p.b * p.beta * std::pow(w, -0.5 * p.beta - 1.0);
  return {s.x / r3 + k * p.mu * s.x, s.y / r3 + k * s.y};
}

/// (x', y', px', py') of Hamilton's equations.
[[nodiscard]] inline CartesianState cartesian_field(const CartesianState& s, const Params& p) {
  const Vec2 g = grad_potential(s, p);
  return {s.px, s.py, -g[0], -g[1]};
}

[[nodiscard]] inline double hamiltonian(const CartesianState& s, const Params& p) {
  return 0.5 * (s.px * s.px + s.py * s.py) + potential(s, p);
}

/// Integrates the Cartesian flow over physical time with an energy monitor
/// labelled "H".
[[nodiscard]] inline integrate::Trajectory<4> flow(const CartesianState& s0, const Params& p,
                                                   double t_end,
                                                   const integrate::IntegratorConfig& cfg = {},
                                                   double t_start = 0.0) {
  validate_common(p, "core::flow");
  detail::require_off_origin(s0, "core::flow");
  auto field = [&p](double, const Vec4& y) {
    const CartesianState s = CartesianState::from(y);
    if (!(s.radius() >= collision_radius)) {
      constexpr double nan = std::numeric_limits<double>::quiet_NaN();
      return Vec4{nan, nan, nan, nan};
    }
    return cartesian_field(s, p).vec();
  };
  const std::vector<integrate::Monitor<4>> monitors{
      {"H", [&p](const Vec4& y) { return hamiltonian(CartesianState::from(y), p); }}};
  return integrate::integrate<4>(field, s0.vec(), {t_start, t_end}, cfg, {}, monitors);
}

// ---------------------------------------------------------------------------
// Discrete symmetries of the extended phase space (x, y, px, py, t).

enum class SymmetryId { Id, S0, S1, S2, S3, S4, S5, S6 };

inline constexpr std::array<SymmetryId, 8> all_symmetries{
    SymmetryId::Id, SymmetryId::S0, SymmetryId::S1, SymmetryId::S2,
    SymmetryId::S3, SymmetryId::S4, SymmetryId::S5, SymmetryId::S6};

/// Sign pattern applied to (x, y, px, py, t).
using SignPattern = std::array<int, 5>;

[[nodiscard]] constexpr SignPattern signs(SymmetryId g) noexcept {
  switch (g) {
    case SymmetryId::Id: return {+1, +1, +1, +1, +1};
    case SymmetryId::S0: return {+1, +1, -1, -1, -1};
    case SymmetryId::S1: return {+1, -1, -1, +1, -1};
    case SymmetryId::S2: return {-1, +1, +1, -1, -1};
    case SymmetryId::S3: return {-1, -1, -1, -1, +1};
    case SymmetryId::S4: return {-1, +1, -1, +1, +1};
    case SymmetryId::S5: return {+1, -1, +1, -1, +1};
    case SymmetryId::S6: return {-1, -1, +1, +1, -1};
  }
  return {+1, +1, +1, +1, +1};
}

[[nodiscard]] constexpr int time_sign(SymmetryId g) noexcept { return signs(g)[4]; }

[[nodiscard]] constexpr std::string_view name(SymmetryId g) noexcept {
  constexpr std::array<std::string_view, 8> names{"Id", "S0", "S1", "S2",
                                                  "S3", "S4", "S5", "S6"};
  return names[static_cast<std::size_t>(g)];
}

[[nodiscard]] constexpr std::pair<CartesianState, double> apply_symmetry(
    SymmetryId g, const CartesianState& s, double t) noexcept {
  const SignPattern sg = signs(g);
  return {{sg[0] * s.x, sg[1] * s.y, sg[2] * s.px, sg[3] * s.py}, sg[4] * t};
}

/// The element acting as a then b, i.e. b o a. Throws if the product leaves the set.
[[nodiscard]] constexpr SymmetryId compose(SymmetryId b, SymmetryId a) {
  const SignPattern sa = signs(a);
  const SignPattern sb = signs(b);
  SignPattern prod{};
  for (std::size_t i = 0; i < 5; ++i) prod[i] = sa[i] * sb[i];
  for (SymmetryId g : all_symmetries) {
    if (signs(g) == prod) return g;
  }
  throw NumericalError("compose: product is not in the symmetry group");
}

}  // namespace aniso::core
