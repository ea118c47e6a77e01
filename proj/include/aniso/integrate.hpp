#pragma once

// Adaptive Dormand-Prince 5(4) integrator with the order-4 continuous
// extension, event location on the dense output and invariant monitors.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aniso/common.hpp"

namespace aniso::integrate {

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2'000'000;
  /// Keep every accepted step in Trajectory::states. Endpoints are always kept.
  bool store_states = true;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw ValidationError("IntegratorConfig: tolerances must be > 0");
    }
    if (!(max_step > 0.0)) throw ValidationError("IntegratorConfig: max_step must be > 0");
    if (max_steps == 0) throw ValidationError("IntegratorConfig: max_steps must be >= 1");
  }
};

enum class IntegrationFailure { MaxSteps, StepUnderflow, EventRoot };

class IntegrationError : public NumericalError {
 public:
  IntegrationError(IntegrationFailure kind, const std::string& what)
      : NumericalError(what), kind_(kind) {}
  [[nodiscard]] IntegrationFailure kind() const noexcept { return kind_; }

 private:
  IntegrationFailure kind_;
};

template <std::size_t N>
struct EventSpec {
  std::string label;
  std::function<double(double, const Vec<N>&)> fn;
  /// +1 fires only on increasing crossings, -1 only on decreasing, 0 on both.
  int direction = 0;
  bool terminal = false;
};

template <std::size_t N>
struct Monitor {
  std::string label;
  std::function<double(const Vec<N>&)> fn;
};

template <std::size_t N>
struct EventRecord {
  double time = 0.0;
  std::string label;
  Vec<N> state{};
};

struct Drift {
  std::string label;
  double max_abs = 0.0;
};

template <std::size_t N>
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec<N>> states;
  std::vector<EventRecord<N>> events;
  std::vector<Drift> invariant_drift;
  bool stopped_by_event = false;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  [[nodiscard]] const Vec<N>& final_state() const { return states.back(); }
  [[nodiscard]] double final_time() const { return times.back(); }

  [[nodiscard]] double drift(const std::string& label) const {
    for (const auto& d : invariant_drift) {
      if (d.label == label) return d.max_abs;
    }
    throw ValidationError("Trajectory: no monitor named " + label);
  }
};

/// Region the solution must not enter; trial steps landing there are rejected.
template <std::size_t N>
using ForbiddenRegion = std::function<bool(const Vec<N>&)>;

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett & Wanner, DOPRI5 dense output).
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

template <std::size_t N>
bool all_finite(const Vec<N>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Dense-output polynomial for one accepted step [t0, t0 + h].
template <std::size_t N>
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec<N>, 5> rc{};

  [[nodiscard]] Vec<N> at(double t) const {
    const double s = (t - t0) / h;
    const double s1 = 1.0 - s;
    Vec<N> y{};
    for (std::size_t i = 0; i < N; ++i) {
      y[i] = rc[0][i] + s * (rc[1][i] + s1 * (rc[2][i] + s * (rc[3][i] + s1 * rc[4][i])));
    }
    return y;
  }
};

/// Root of g on the dense step between ta and tb (g(ta), g(tb) of opposite sign).
/// Illinois-modified regula falsi, terminated on bracket width.
template <std::size_t N, class G>
double locate_root(const DenseStep<N>& dense, G&& g, double ta, double ga, double tb,
                   double gb) {
  const double scale = std::max({1.0, std::abs(ta), std::abs(tb)});
  const double tol = std::max(1e-12, 8.0 * std::numeric_limits<double>::epsilon() * scale);
  int side = 0;
  for (int iter = 0; iter < 200; ++iter) {
    if (std::abs(tb - ta) <= tol) return (ga == 0.0) ? ta : tb;
    double tc = (ta * gb - tb * ga) / (gb - ga);
    if (!(tc > std::min(ta, tb) && tc < std::max(ta, tb))) tc = 0.5 * (ta + tb);
    const double gc = g(tc, dense.at(tc));
    if (gc == 0.0) return tc;
    if ((gc > 0.0) == (gb > 0.0)) {
      tb = tc;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      ta = tc;
      ga = gc;
      if (side == +1) gb *= 0.5;
      side = +1;
    }
    // Fall back to bisection when regula falsi stalls on one side.
    if (iter % 8 == 7) {
      const double tm = 0.5 * (ta + tb);
      const double gm = g(tm, dense.at(tm));
      if (gm == 0.0) return tm;
      if ((gm > 0.0) == (gb > 0.0)) {
        tb = tm;
        gb = gm;
      } else {
        ta = tm;
        ga = gm;
      }
    }
  }
  throw IntegrationError(IntegrationFailure::EventRoot,
                         "integrate: event root refinement did not converge");
}

}  // namespace detail

/// Integrates y' = field(t, y) from t_span.first to t_span.second (either
/// direction). Events are located on the dense output; monitors are evaluated
/// at every accepted step and reported as maximum absolute drift from the
/// initial value.
template <std::size_t N, class Field>
Trajectory<N> integrate(Field&& field, const Vec<N>& s0, std::pair<double, double> t_span,
                        const IntegratorConfig& cfg = {},
                        std::span<const EventSpec<N>> events = {},
                        std::span<const Monitor<N>> monitors = {},
                        const ForbiddenRegion<N>& forbidden = {}) {
  using namespace detail;
  cfg.validate();
  const auto [t_start, t_end] = t_span;
  if (!(t_end != t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
    throw ValidationError("integrate: degenerate time span");
  }
  if (!all_finite(s0)) throw DomainError("integrate: non-finite initial state");
  if (forbidden && forbidden(s0)) throw DomainError("integrate: initial state is in the forbidden region");

  const double dir = (t_end > t_start) ? 1.0 : -1.0;
  const double span = std::abs(t_end - t_start);

  Trajectory<N> traj;
  traj.times.push_back(t_start);
  traj.states.push_back(s0);

  std::vector<double> monitor0(monitors.size());
  traj.invariant_drift.resize(monitors.size());
  for (std::size_t m = 0; m < monitors.size(); ++m) {
    monitor0[m] = monitors[m].fn(s0);
    traj.invariant_drift[m].label = monitors[m].label;
  }

  std::vector<double> g_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].fn(t_start, s0);

  auto eval = [&](double t, const Vec<N>& y) -> Vec<N> { return field(t, y); };

  double t = t_start;
  Vec<N> y = s0;
  Vec<N> k1 = eval(t, y);
  if (!all_finite(k1)) throw DomainError("integrate: field is not finite at the initial state");

  auto err_norm = [&](const Vec<N>& y0, const Vec<N>& y1, const Vec<N>& err) {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(N));
  };

  // Initial step (Hairer's heuristic).
  double h;
  {
    auto scaled_norm = [&](const Vec<N>& v) {
      double acc = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
        acc += (v[i] / sc) * (v[i] / sc);
      }
      return std::sqrt(acc / static_cast<double>(N));
    };
    const double d0 = scaled_norm(y);
    const double d1n = scaled_norm(k1);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min({h0, span, cfg.max_step});
    Vec<N> y1{};
    for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * k1[i];
    const Vec<N> f1 = eval(t + dir * h0, y1);
    double d2 = 0.0;
    if (all_finite(f1)) {
      Vec<N> df{};
      for (std::size_t i = 0; i < N; ++i) df[i] = f1[i] - k1[i];
      d2 = scaled_norm(df) / h0;
    } else {
      d2 = 1.0 / h0;
    }
    const double dm = std::max(d1n, d2);
    const double h1 = (dm <= 1e-15) ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, span, cfg.max_step});
  }

  const double h_min_abs = 1e-15;
  bool reject_prev = false;

  while (true) {
    if (traj.accepted_steps + traj.rejected_steps >= cfg.max_steps) {
      throw IntegrationError(IntegrationFailure::MaxSteps, "integrate: max_steps exceeded");
    }
    const double remaining = std::abs(t_end - t);
    bool last = false;
    if (h >= remaining) {
      h = remaining;
      last = true;
    }
    if (h < h_min_abs * std::max(1.0, std::abs(t))) {
      throw IntegrationError(IntegrationFailure::StepUnderflow,
                             "integrate: step size underflow (singularity or forbidden region)");
    }
    const double hs = dir * h;

    Vec<N> tmp{};
    auto stage = [&](auto&& combine, double c) {
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + hs * combine(i);
      return eval(t + c * hs, tmp);
    };
    const Vec<N> k2 = stage([&](std::size_t i) { return a21 * k1[i]; }, c2);
    const Vec<N> k3 = stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; }, c3);
    const Vec<N> k4 =
        stage([&](std::size_t i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }, c4);
    const Vec<N> k5 = stage(
        [&](std::size_t i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; }, c5);
    const Vec<N> k6 = stage(
        [&](std::size_t i) {
          return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
        },
        1.0);
    Vec<N> ynew{};
    for (std::size_t i = 0; i < N; ++i) {
      ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    const double tnew = last ? t_end : t + hs;
    const Vec<N> k7 = eval(tnew, ynew);

    bool ok = all_finite(ynew) && all_finite(k7) && !(forbidden && forbidden(ynew));
    double err = std::numeric_limits<double>::infinity();
    if (ok) {
      Vec<N> e{};
      for (std::size_t i = 0; i < N; ++i) {
        e[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      }
      err = err_norm(y, ynew, e);
      ok = std::isfinite(err);
    }

    if (!ok || err > 1.0) {
      ++traj.rejected_steps;
      const double fac = ok ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      h *= std::min(fac, 0.9);
      reject_prev = true;
      continue;
    }

    // Accepted.
    DenseStep<N> dense;
    dense.t0 = t;
    dense.h = hs;
    for (std::size_t i = 0; i < N; ++i) {
      const double dy = ynew[i] - y[i];
      const double bspl = hs * k1[i] - dy;
      dense.rc[0][i] = y[i];
      dense.rc[1][i] = dy;
      dense.rc[2][i] = bspl;
      dense.rc[3][i] = dy - hs * k7[i] - bspl;
      dense.rc[4][i] =
          hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }

    // Events, earliest first.
    double stop_time = tnew;
    bool stop = false;
    std::vector<EventRecord<N>> fired;
    std::vector<double> g_new(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
      const auto& ev = events[e];
      const double ga = g_prev[e];
      const double gb = ev.fn(tnew, ynew);
      g_new[e] = gb;
      const bool crossed = (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
      if (!crossed || ga == 0.0) continue;
      const bool increasing = gb > ga;
      if (ev.direction > 0 && !increasing) continue;
      if (ev.direction < 0 && increasing) continue;
      const double te = (gb == 0.0) ? tnew : locate_root(dense, ev.fn, t, ga, tnew, gb);
      fired.push_back({te, ev.label, dense.at(te)});
      if (ev.terminal) {
        if (!stop || dir * (te - stop_time) < 0.0) stop_time = te;
        stop = true;
      }
    }
    std::sort(fired.begin(), fired.end(),
              [dir](const auto& a, const auto& b) { return dir * (a.time - b.time) < 0.0; });
    for (auto& f : fired) {
      if (stop && dir * (f.time - stop_time) > 0.0) continue;
      traj.events.push_back(std::move(f));
    }

    ++traj.accepted_steps;
    if (stop) {
      const Vec<N> ys = dense.at(stop_time);
      traj.times.push_back(stop_time);
      traj.states.push_back(ys);
      for (std::size_t m = 0; m < monitors.size(); ++m) {
        traj.invariant_drift[m].max_abs =
            std::max(traj.invariant_drift[m].max_abs, std::abs(monitors[m].fn(ys) - monitor0[m]));
      }
      traj.stopped_by_event = true;
      return traj;
    }

    for (std::size_t m = 0; m < monitors.size(); ++m) {
      traj.invariant_drift[m].max_abs =
          std::max(traj.invariant_drift[m].max_abs, std::abs(monitors[m].fn(ynew) - monitor0[m]));
    }
    g_prev = std::move(g_new);
    t = tnew;
    y = ynew;
    k1 = k7;
    if (last) {
      traj.times.push_back(t);
      traj.states.push_back(y);
      return traj;
    }
    if (cfg.store_states) {
      traj.times.push_back(t);
      traj.states.push_back(y);
    }

    double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    fac = std::clamp(fac, 0.2, 10.0);
    if (reject_prev) fac = std::min(fac, 1.0);
    reject_prev = false;
    h = std::min(h * fac, cfg.max_step);
  }
}

/// Convenience overload for vector containers of events and monitors.
template <std::size_t N, class Field>
Trajectory<N> integrate(Field&& field, const Vec<N>& s0, std::pair<double, double> t_span,
                        const IntegratorConfig& cfg, const std::vector<EventSpec<N>>& events,
                        const std::vector<Monitor<N>>& monitors = {},
                        const ForbiddenRegion<N>& forbidden = {}) {
  return integrate<N>(std::forward<Field>(field), s0, t_span, cfg,
                      std::span<const EventSpec<N>>(events),
                      std::span<const Monitor<N>>(monitors), forbidden);
}

}  // namespace aniso::integrate
