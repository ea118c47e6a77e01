#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aniso {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;

#ifdef ANISO_VERSION
inline constexpr const char* version = ANISO_VERSION;
#else
inline constexpr const char* version = "0.1.0";
#endif

/// A precondition on the parameters or arguments was violated.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The state lies outside the domain of the map (collision, r = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to meet its contract.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <std::size_t N>
using Vec = std::array<double, N>;

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;
using Vec4 = Vec<4>;

/// Problem constants. epsilon() is derived from mu and never stored.
struct Params {
  double beta = 3.0;
  double mu = 1.0;
  double b = 0.5;
  double h = 0.0;

  [[nodiscard]] constexpr double epsilon() const noexcept { return mu - 1.0; }
};

namespace detail {

[[noreturn]] inline void fail_validation(const char* where, const std::string& what) {
  throw ValidationError(std::string(where) + ": " + what);
}

}  // namespace detail

/// Checks mu >= 1, b > 0 and finiteness. Each operation adds its own beta bound.
inline void validate_common(const Params& p, const char* where) {
  if (!std::isfinite(p.beta) || !std::isfinite(p.mu) || !std::isfinite(p.b) ||
      !std::isfinite(p.h)) {
    detail::fail_validation(where, "parameters must be finite");
  }
  if (p.mu < 1.0) detail::fail_validation(where, "mu must be >= 1");
  if (!(p.b > 0.0)) detail::fail_validation(where, "b must be > 0");
}

inline void require_beta_above(const Params& p, double bound, const char* where) {
  validate_common(p, where);
  if (!(p.beta > bound)) {
    detail::fail_validation(where, "beta must be > " + std::to_string(bound));
  }
}

inline void require_beta_at_least(const Params& p, double bound, const char* where) {
  validate_common(p, where);
  if (!(p.beta >= bound)) {
    detail::fail_validation(where, "beta must be >= " + std::to_string(bound));
  }
}

inline void require_beta_equal(const Params& p, double value, const char* where) {
  validate_common(p, where);
  if (p.beta != value) {
    detail::fail_validation(where, "beta must equal " + std::to_string(value));
  }
}

inline void require_zero_energy(const Params& p, const char* where) {
  if (p.h != 0.0) detail::fail_validation(where, "requires h = 0");
}

/// Delta(theta) = mu cos^2 theta + sin^2 theta, in [1, mu] for mu >= 1.
[[nodiscard]] inline double delta(double theta, double mu) noexcept {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return mu * c * c + s * s;
}

/// Wraps an angle into [0, 2 pi).
[[nodiscard]] inline double wrap_angle(double a) noexcept {
  double w = std::fmod(a, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

}  // namespace aniso
