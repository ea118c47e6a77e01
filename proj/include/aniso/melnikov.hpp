#pragma once

// Melnikov integrals along zero-energy Kepler parabolas for the perturbation
// W2 = beta cos^2(theta) / (2 r^beta). Orbits are parametrized by
// eta = tan(theta/2): r = (p/2)(1 + eta^2), t = (p^(3/2)/2) eta (1 + eta^2/3),
// and Theta(0) = pi is realized as theta = 2 atan(eta) + pi.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "aniso/common.hpp"
#include "aniso/parallel.hpp"
#include "aniso/quadrature.hpp"

namespace aniso::melnikov {

struct ParabolicOrbit {
  double p_param = 1.0;
};

struct OrbitPoint {
  double r = 0.0;
  double t = 0.0;
  double theta = 0.0;
};

namespace detail {
inline void require_beta(double beta, const char* where) {
  if (!std::isfinite(beta) || !(beta > 1.5)) {
    throw ValidationError(std::string(where) + ": beta must be > 3/2");
  }
}
inline void require_orbit(const ParabolicOrbit& o, const char* where) {
  if (!std::isfinite(o.p_param) || !(o.p_param > 0.0)) {
    throw ValidationError(std::string(where) + ": p must be > 0");
  }
}

// cos(theta), sin(theta) at eta, with the pi offset applied.
inline Vec2 cos_sin(double eta) {
  const double d = 1.0 + eta * eta;
  return {-(1.0 - eta * eta) / d, -2.0 * eta / d};
}
}  // namespace detail

[[nodiscard]] inline OrbitPoint parabolic_rt(double eta, const ParabolicOrbit& o) {
  detail::require_orbit(o, "parabolic_rt");
  const double p = o.p_param;
  return {0.5 * p * (1.0 + eta * eta), 0.5 * std::pow(p, 1.5) * eta * (1.0 + eta * eta / 3.0),
          2.0 * std::atan(eta) + pi};
}

/// dt/deta.
[[nodiscard]] inline double dt_deta(double eta, const ParabolicOrbit& o) {
  return 0.5 * std::pow(o.p_param, 1.5) * (1.0 + eta * eta);
}

/// beta cos^2(theta) / (2 r^beta).
[[nodiscard]] inline double perturbation_W2(double r, double theta, double beta) {
  detail::require_beta(beta, "perturbation_W2");
  if (!(r > 0.0)) throw DomainError("perturbation_W2: r must be > 0");
  const double c = std::cos(theta);
  return beta * c * c / (2.0 * std::pow(r, beta));
}

[[nodiscard]] inline double dW2_dr(double r, double theta, double beta) {
  const double c = std::cos(theta);
  return -beta * beta * c * c / (2.0 * std::pow(r, beta + 1.0));
}

/// -beta sin(2 theta) / (2 r^beta).
[[nodiscard]] inline double dW2_dtheta(double r, double theta, double beta) {
  return -beta * std::sin(2.0 * theta) / (2.0 * std::pow(r, beta));
}

/// Truncation H for integrands bounded by c (1 + eta^2)^(1-beta): the tail
/// past H is below tail_tol.
[[nodiscard]] inline double truncation(double c, double beta, double tail_tol = 1e-12) {
  const double e = 2.0 * beta - 3.0;
  return std::max(10.0, std::pow(std::abs(c) / (e * tail_tol), 1.0 / e));
}

namespace detail {

// Integral of f over [-H, 0] and [0, H], returned separately.
template <class F>
std::pair<double, double> two_halves(F&& f, double H) {
  const double right = quadrature::half_line(f, H).value;
  const double left = quadrature::half_line([&](double x) { return f(-x); }, H).value;
  return {left, right};
}

inline double prefactor(const ParabolicOrbit& o, double beta) {
  // (beta/2) dt/deta / R^beta = prefactor (1+eta^2)^(1-beta)
  return 0.5 * beta * std::pow(2.0, beta - 1.0) * std::pow(o.p_param, 1.5 - beta);
}

}  // namespace detail

/// (beta/2) int cos(2 Theta) / R^beta dt by quadrature in eta.
[[nodiscard]] inline double i2_quadrature(const ParabolicOrbit& o, double beta) {
  detail::require_beta(beta, "i2_quadrature");
  detail::require_orbit(o, "i2_quadrature");
  const double c = detail::prefactor(o, beta);
  auto f = [&](double eta) {
    const OrbitPoint q = parabolic_rt(eta, o);
    const Vec2 cs = detail::cos_sin(eta);
    return 0.5 * beta * (2.0 * cs[0] * cs[0] - 1.0) / std::pow(q.r, beta) * dt_deta(eta, o);
  };
  const auto [l, r] = detail::two_halves(f, truncation(c, beta));
  return l + r;
}

/// (beta/2) int sin(2 Theta) / R^beta dt; zero by parity.
[[nodiscard]] inline double i1_parity_check(const ParabolicOrbit& o, double beta) {
  detail::require_beta(beta, "i1_parity_check");
  detail::require_orbit(o, "i1_parity_check");
  const double c = detail::prefactor(o, beta);
  auto f = [&](double eta) {
    const OrbitPoint q = parabolic_rt(eta, o);
    const Vec2 cs = detail::cos_sin(eta);
    return 0.5 * beta * 2.0 * cs[0] * cs[1] / std::pow(q.r, beta) * dt_deta(eta, o);
  };
  const auto [l, r] = detail::two_halves(f, truncation(c, beta));
  return l + r;
}

/// (beta/2) int sin(2 (Theta + theta0)) / R^beta dt, the sign convention of
/// the usual statement M2 = I1 cos(2 theta0) + I2 sin(2 theta0). The
/// theta-derivative of W2 carries the opposite sign.
[[nodiscard]] inline double melnikov_M2(double theta0, const ParabolicOrbit& o, double beta) {
  detail::require_beta(beta, "melnikov_M2");
  detail::require_orbit(o, "melnikov_M2");
  const double c = detail::prefactor(o, beta);
  auto f = [&](double eta) {
    const OrbitPoint q = parabolic_rt(eta, o);
    return 0.5 * beta * std::sin(2.0 * (q.theta + theta0)) / std::pow(q.r, beta) *
           dt_deta(eta, o);
  };
  const auto [l, r] = detail::two_halves(f, truncation(c, beta));
  return l + r;
}

/// M1 = int (R' dW2/dr + Theta' dW2/dtheta) dt at theta0; the integrand is
/// the total derivative of W2, so the result is a residual.
[[nodiscard]] inline double m1_residual(const ParabolicOrbit& o, double beta, double theta0 = 0.0) {
  detail::require_beta(beta, "m1_residual");
  detail::require_orbit(o, "m1_residual");
  const double p = o.p_param;
  // |W_r R_eta| + |W_theta Theta_eta| <= c' (1 + eta^2)^(1/2 - beta) <= c' (1+eta^2)^(1-beta)
  const double c = beta * beta * std::pow(2.0, beta) * std::pow(p, -beta) + 2.0 * beta;
  auto f = [&](double eta) {
    const OrbitPoint q = parabolic_rt(eta, o);
    const double th = q.theta + theta0;
    return dW2_dr(q.r, th, beta) * p * eta + dW2_dtheta(q.r, th, beta) * 2.0 / (1.0 + eta * eta);
  };
  const auto [l, r] = detail::two_halves(f, truncation(c, beta));
  return l + r;
}

/// int {H0, W2} dt along the orbit, with p_r and p_theta written out.
[[nodiscard]] inline double m1_bracket_form(const ParabolicOrbit& o, double beta,
                                            double theta0 = 0.0) {
  detail::require_beta(beta, "m1_bracket_form");
  detail::require_orbit(o, "m1_bracket_form");
  const double p = o.p_param;
  const double c = beta * beta * std::pow(2.0, beta) * std::pow(p, -beta) + 2.0 * beta;
  auto f = [&](double eta) {
    const OrbitPoint q = parabolic_rt(eta, o);
    const double th = q.theta + theta0;
    const double pr = 2.0 * eta / (std::sqrt(p) * (1.0 + eta * eta));
    const double ptheta = std::sqrt(p);
    const double bracket = -(pr * dW2_dr(q.r, th, beta) + ptheta / (q.r * q.r) * dW2_dtheta(q.r, th, beta));
    return bracket * dt_deta(eta, o);
  };
  const auto [l, r] = detail::two_halves(f, truncation(c, beta));
  return l + r;
}

// ---------------------------------------------------------------------------
// Closed forms.

/// The Gamma-bracket form.
[[nodiscard]] inline double i2_gamma_bracket(double p, double beta) {
  detail::require_beta(beta, "i2_gamma_bracket");
  const double pre = std::pow(2.0, beta - 1.0) * std::pow(p, 1.5 - beta) * beta /
                     (2.0 * std::tgamma(beta - 1.0)) * std::sqrt(pi);
  const double t1 = std::tgamma(beta - 1.5) * (3.0 / (2.0 * (beta - 1.0) * beta) - 1.0);
  const double t2 = 2.0 * (std::tgamma(beta + 0.5) - std::tgamma(beta - 0.5)) / ((beta - 1.0) * beta);
  return pre * (t1 + t2);
}

/// A = 2^(beta-2) p^(3/2-beta).
[[nodiscard]] inline double normalization_A(double p, double beta) {
  return std::pow(2.0, beta - 2.0) * std::pow(p, 1.5 - beta);
}

/// The factored form with (beta^2 - 5 beta + 6).
[[nodiscard]] inline double i2_factored(double p, double beta) {
  detail::require_beta(beta, "i2_factored");
  return normalization_A(p, beta) * std::sqrt(pi) * std::tgamma(beta + 0.5) /
         ((beta - 1.0) * (beta - 1.5) * (beta - 0.5) * std::tgamma(beta - 1.0)) *
         (beta * beta - 5.0 * beta + 6.0);
}

/// Both closed forms, required to agree to 1e-10 relative to the size of
/// the terms that cancel in the bracket form. Returns the bracket form.
[[nodiscard]] inline double i2_closed_form(double p, double beta) {
  if (!std::isfinite(p) || !(p > 0.0)) throw ValidationError("i2_closed_form: p must be > 0");
  const double a = i2_gamma_bracket(p, beta);
  const double b = i2_factored(p, beta);
  const double pre = std::pow(2.0, beta - 1.0) * std::pow(p, 1.5 - beta) * beta /
                     (2.0 * std::tgamma(beta - 1.0)) * std::sqrt(pi);
  const double scale =
      pre * (std::tgamma(beta - 1.5) * std::abs(3.0 / (2.0 * (beta - 1.0) * beta) - 1.0) +
             2.0 * (std::tgamma(beta + 0.5) + std::tgamma(beta - 0.5)) / ((beta - 1.0) * beta));
  if (!(std::abs(a - b) <= 1e-10 * std::max({std::abs(a), std::abs(b), scale}))) {
    throw NumericalError("i2_closed_form: the two closed forms disagree");
  }
  return a;
}

[[nodiscard]] inline double i2_over_A(double beta) {
  return i2_closed_form(1.0, beta) / normalization_A(1.0, beta);
}

/// Roots of beta -> I2(1, beta) on [lo, hi], from sign changes on a grid of
/// `cells` cells refined by bisection to `tol`.
[[nodiscard]] inline std::vector<double> i2_roots(double lo = 1.5 + 1e-3, double hi = 10.0,
                                                  std::size_t cells = 997, double tol = 1e-12) {
  detail::require_beta(lo, "i2_roots");
  if (!(hi > lo) || cells < 1) throw ValidationError("i2_roots: bad interval");
  auto f = [](double b) { return i2_closed_form(1.0, b); };
  std::vector<double> roots;
  double a = lo, fa = f(a);
  for (std::size_t i = 1; i <= cells; ++i) {
    const double b = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    const double fb = f(b);
    if (fa == 0.0) {
      roots.push_back(a);
    } else if (fa * fb < 0.0) {
      double x0 = a, x1 = b, f0 = fa;
      while (x1 - x0 > tol) {
        const double m = 0.5 * (x0 + x1);
        const double fm = f(m);
        if (fm == 0.0) {
          x0 = x1 = m;
          break;
        }
        if ((fm < 0.0) == (f0 < 0.0)) {
          x0 = m;
          f0 = fm;
        } else {
          x1 = m;
        }
      }
      roots.push_back(0.5 * (x0 + x1));
    }
    a = b;
    fa = fb;
  }
  if (fa == 0.0) roots.push_back(a);
  return roots;
}

enum class Verdict { SimpleZeros, IdenticallyZeroM2 };

[[nodiscard]] inline std::string to_string(Verdict v) {
  return v == Verdict::SimpleZeros ? "simple-zeros" : "identically-zero-M2";
}

inline constexpr double verdict_tol = 1e-9;

/// Simple zeros of M2 = I2 sin(2 theta0) when |I2/A| exceeds verdict_tol.
[[nodiscard]] inline Verdict chaos_verdict(double beta, double p) {
  const double r = i2_closed_form(p, beta) / normalization_A(p, beta);
  return std::abs(r) > verdict_tol ? Verdict::SimpleZeros : Verdict::IdenticallyZeroM2;
}

/// Zeros of M2 in [0, 2 pi) for I2 != 0.
[[nodiscard]] inline std::vector<double> m2_zeros() { return {0.0, pi / 2.0, pi, 1.5 * pi}; }

struct SweepRow {
  double beta = 0.0;
  double i2_quadrature = 0.0;
  double i2_closed = 0.0;
  double i2_over_A = 0.0;
};

/// I2 along a beta grid, evaluated concurrently; rows keep grid order.
[[nodiscard]] inline std::vector<SweepRow> sweep(const std::vector<double>& betas, double p) {
  std::vector<SweepRow> rows(betas.size());
  parallel_for(betas.size(), [&](std::size_t i) {
    const double b = betas[i];
    rows[i] = {b, i2_quadrature({p}, b), i2_closed_form(p, b),
               i2_closed_form(p, b) / normalization_A(p, b)};
  });
  return rows;
}

}  // namespace aniso::melnikov
