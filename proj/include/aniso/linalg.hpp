#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "aniso/common.hpp"

namespace aniso {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using cplx = std::complex<double>;

[[nodiscard]] inline cplx det3_shifted(const Mat3& m, cplx lambda) {
  const cplx a = m[0][0] - lambda, e = m[1][1] - lambda, i = m[2][2] - lambda;
  const double b = m[0][1], c = m[0][2], d = m[1][0], f = m[1][2], g = m[2][0], hh = m[2][1];
  return a * (e * i - f * hh) - b * (d * i - f * g) + c * (d * hh - e * g);
}

/// Eigenvalues of a real 3x3 matrix from its characteristic cubic.
/// Cardano / trigonometric roots, Newton-polished, with a residual check.
/// Real roots come first (ascending); a complex pair is returned as
/// (re + i im, re - i im) with im > 0.
[[nodiscard]] inline std::array<cplx, 3> eigen3(const Mat3& m) {
  for (const auto& row : m) {
    for (double x : row) {
      if (!std::isfinite(x)) throw ValidationError("eigen3: non-finite matrix entry");
    }
  }
  // lambda^3 + A lambda^2 + B lambda + C
  const double tr = m[0][0] + m[1][1] + m[2][2];
  const double minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] -
                        m[0][2] * m[2][0] + m[1][1] * m[2][2] - m[1][2] * m[2][1];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  const double A = -tr, B = minors, C = -det;

  const double shift = -A / 3.0;
  const double p = B - A * A / 3.0;
  const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  std::array<cplx, 3> roots;
  bool pair = false;
  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + sq);
    const double v = std::cbrt(-q / 2.0 - sq);
    const double re = -(u + v) / 2.0;
    const double im = std::sqrt(3.0) / 2.0 * std::abs(u - v);
    roots = {cplx(u + v + shift, 0.0), cplx(re + shift, im), cplx(re + shift, -im)};
    pair = im > 0.0;
  } else if (p == 0.0) {
    roots = {cplx(shift), cplx(shift), cplx(shift)};
  } else {
    const double r = 2.0 * std::sqrt(-p / 3.0);
    double arg = 3.0 * q / (p * r);
    arg = std::clamp(arg, -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) {
      roots[k] = cplx(r * std::cos(phi - 2.0 * pi * k / 3.0) + shift, 0.0);
    }
  }

  // Newton polish on the monic cubic; keeps real roots real.
  auto poly = [&](cplx z) { return ((z + A) * z + B) * z + C; };
  auto dpoly = [&](cplx z) { return (3.0 * z + 2.0 * A) * z + B; };
  for (auto& z : roots) {
    for (int it = 0; it < 3; ++it) {
      const cplx d = dpoly(z);
      if (std::abs(d) < 1e-300) break;
      const cplx step = poly(z) / d;
      const cplx zn = z - step;
      if (!(std::abs(poly(zn)) < std::abs(poly(z)))) break;
      z = zn;
    }
  }
  if (pair) {
    // Keep exact conjugate symmetry after polishing.
    const double re = 0.5 * (roots[1].real() + roots[2].real());
    const double im = 0.5 * (std::abs(roots[1].imag()) + std::abs(roots[2].imag()));
    roots[1] = cplx(re, im);
    roots[2] = cplx(re, -im);
  } else {
    for (auto& z : roots) z = cplx(z.real(), 0.0);
    std::sort(roots.begin(), roots.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
  }

  double norm = 0.0;
  for (const auto& row : m) {
    for (double x : row) norm = std::max(norm, std::abs(x));
  }
  const double scale = std::max(1.0, norm * norm * norm);
  for (const auto& z : roots) {
    if (std::abs(det3_shifted(m, z)) > 1e-9 * scale) {
      throw NumericalError("eigen3: characteristic residual check failed");
    }
  }
  return roots;
}

[[nodiscard]] inline bool has_nonreal(const std::array<cplx, 3>& ev) {
  return std::any_of(ev.begin(), ev.end(), [](const cplx& z) { return z.imag() != 0.0; });
}

/// Eigenvalues of a real 2x2 matrix, larger real part first for real roots.
[[nodiscard]] inline std::array<cplx, 2> eigen2(const Mat2& m) {
  const double tr = m[0][0] + m[1][1];
  const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    // Stable form for the smaller root.
    const double big = tr / 2.0 + std::copysign(s, tr == 0.0 ? 1.0 : tr);
    const double small = (big != 0.0) ? det / big : tr / 2.0 - s;
    return (big >= small) ? std::array<cplx, 2>{big, small} : std::array<cplx, 2>{small, big};
  }
  const double s = std::sqrt(-disc);
  return {cplx(tr / 2.0, s), cplx(tr / 2.0, -s)};
}

}  // namespace aniso
