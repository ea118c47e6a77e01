#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aniso/common.hpp"

namespace aniso::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 61-point Gauss-Kronrod on a finite interval.
/// Throws NumericalError when the error estimate exceeds max(abs_tol, rel_tol L1).
template <class F>
Result adaptive(F&& f, double a, double b, double abs_tol = 1e-14, double rel_tol = 1e-12,
                unsigned max_depth = 15) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v)) throw NumericalError("quadrature: non-finite result");
  if (err > std::max(abs_tol, rel_tol * std::max(std::abs(v), l1))) {
    throw NumericalError("quadrature: nonconvergence (error estimate " + std::to_string(err) + ")");
  }
  return {v, err};
}

/// Integral over [0, H] for integrands with algebraic decay: [0, 1] directly,
/// [1, H] after the substitution x = e^s.
template <class F>
Result half_line(F&& f, double H, double abs_tol = 1e-15, double rel_tol = 1e-13) {
  if (!(H > 1.0)) return adaptive(f, 0.0, H, abs_tol, rel_tol);
  const Result near = adaptive(f, 0.0, 1.0, abs_tol, rel_tol);
  const Result far = adaptive(
      [&](double s) {
        const double x = std::exp(s);
        return f(x) * x;
      },
      0.0, std::log(H), abs_tol, rel_tol);
  return {near.value + far.value, near.error + far.error};
}

}  // namespace aniso::quadrature
