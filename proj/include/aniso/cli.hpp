#pragma once

// Command-line front end. Every command writes a CSV (reals as %.17g, '#'
// metadata lines first) and a JSON manifest next to it.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure. Failures print
// a JSON error record on the error stream.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aniso/beta2.hpp"
#include "aniso/common.hpp"
#include "aniso/core_dynamics.hpp"
#include "aniso/infinity_manifold.hpp"
#include "aniso/integrate.hpp"
#include "aniso/mcgehee.hpp"
#include "aniso/melnikov.hpp"
#include "aniso/parallel.hpp"
#include "aniso/saddle_connections.hpp"

namespace aniso::cli {

enum ExitCode : int { ok = 0, invalid_input = 2, numerical_failure = 3 };

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"simulate",   "equilibria",   "collision-flow",
                                          "infinity-flow", "splitting", "beta2-verify",
                                          "melnikov",   "basin"};
  return c;
}

inline std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> d{
      {"simulate", "integrate one orbit in Cartesian coordinates"},
      {"equilibria", "equilibria on the collision manifold with eigenvalues"},
      {"collision-flow", "connections between equilibria on the collision manifold"},
      {"infinity-flow", "orbits on the manifold at infinity"},
      {"splitting", "stable/unstable gap on the section versus eps"},
      {"beta2-verify", "check the second integral for beta = 2"},
      {"melnikov", "sweep I2/A over a beta grid"},
      {"basin", "fraction of a box near the sink that reaches collision"}};
  return d.at(command);
}

struct Options {
  std::string command;
  Params params;
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;

  // simulate
  double x = 1.0, y = 0.0, px = 0.0, py = 1.2;
  double t_end = 10.0;
  // collision-flow, infinity-flow
  std::size_t n_theta = 64, n_psi = 32, orbits = 8;
  double tau = 30.0;
  double s_end = 20.0;
  double rho0 = 0.0;
  // splitting
  std::string eps_grid = "0,0.001,0.002,0.004";
  // beta2-verify
  std::size_t states = 1000;
  // melnikov
  std::string beta_grid = "1.6:5:0.01";
  double p = 1.0;
  // basin
  std::size_t samples = 10000;
  double horizon = 50.0;
  mcgehee::BasinBox box;

  [[nodiscard]] integrate::IntegratorConfig integrator() const {
    integrate::IntegratorConfig c;
    c.rel_tol = rel_tol;
    c.abs_tol = abs_tol;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Output.

using Cell = std::variant<double, std::int64_t, std::string>;

[[nodiscard]] inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::string description;
  std::vector<std::vector<Cell>> rows;
};

struct Outcome {
  Table table;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::map<std::string, double> drift;

  void note_drift(const std::string& label, double v) {
    auto [it, fresh] = drift.emplace(label, v);
    if (!fresh) it->second = std::max(it->second, v);
  }
};

[[nodiscard]] inline std::string render_csv(const Options& o, const Table& t) {
  std::ostringstream s;
  s << "# aniso " << version << '\n';
  s << "# command: " << o.command << '\n';
  s << "# beta: " << format_real(o.params.beta) << ", mu: " << format_real(o.params.mu)
    << ", b: " << format_real(o.params.b) << ", h: " << format_real(o.params.h) << '\n';
  s << "# seed: " << o.seed << ", rel_tol: " << format_real(o.rel_tol)
    << ", abs_tol: " << format_real(o.abs_tol) << '\n';
  s << "# columns: " << t.description << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) s << (i ? "," : "") << t.columns[i];
  s << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) s << ',';
      std::visit(
          [&s](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) s << format_real(v);
            else s << v;
          },
          row[i]);
    }
    s << '\n';
  }
  return s.str();
}

[[nodiscard]] inline nlohmann::ordered_json config_echo(const Options& o) {
  nlohmann::ordered_json j;
  j["command"] = o.command;
  j["beta"] = o.params.beta;
  j["mu"] = o.params.mu;
  j["b"] = o.params.b;
  j["h"] = o.params.h;
  j["seed"] = o.seed;
  j["rel_tol"] = o.rel_tol;
  j["abs_tol"] = o.abs_tol;
  j["out"] = o.out;
  j["config"] = o.config;
  if (o.command == "simulate") {
    j["x"] = o.x;
    j["y"] = o.y;
    j["px"] = o.px;
    j["py"] = o.py;
    j["t_end"] = o.t_end;
  } else if (o.command == "collision-flow") {
    j["n_theta"] = o.n_theta;
    j["n_psi"] = o.n_psi;
    j["orbits"] = o.orbits;
    j["tau"] = o.tau;
  } else if (o.command == "infinity-flow") {
    j["orbits"] = o.orbits;
    j["s_end"] = o.s_end;
    j["rho0"] = o.rho0;
  } else if (o.command == "splitting") {
    j["eps_grid"] = o.eps_grid;
  } else if (o.command == "beta2-verify") {
    j["states"] = o.states;
    j["orbits"] = o.orbits;
    j["tau"] = o.tau;
  } else if (o.command == "melnikov") {
    j["beta_grid"] = o.beta_grid;
    j["p"] = o.p;
  } else if (o.command == "basin") {
    j["samples"] = o.samples;
    j["horizon"] = o.horizon;
    j["box"] = {{"r_min", o.box.r_min},         {"r_max", o.box.r_max},
                {"theta_min", o.box.theta_min}, {"theta_max", o.box.theta_max},
                {"u_min", o.box.u_min},         {"u_max", o.box.u_max}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Parsing helpers.

/// "a:b:step" -> a, a+step, ..., up to b (inclusive within rounding).
[[nodiscard]] inline std::vector<double> parse_range(const std::string& spec, const char* what) {
  double a = 0, b = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(spec);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !in.eof()) {
    throw ValidationError(std::string(what) + ": expected a:b:step, got '" + spec + "'");
  }
  if (!(step > 0.0) || !(b >= a)) throw ValidationError(std::string(what) + ": need step > 0 and b >= a");
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
  if (n > 1'000'000) throw ValidationError(std::string(what) + ": grid too large");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a + static_cast<double>(i) * step;
  return out;
}

/// Comma-separated reals.
[[nodiscard]] inline std::vector<double> parse_list(const std::string& spec, const char* what) {
  std::vector<double> out;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw ValidationError(std::string(what) + ": not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": empty list");
  return out;
}

/// Flat "key = value" file; '#' starts a comment.
[[nodiscard]] inline std::vector<std::pair<std::string, std::string>> read_config(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

/// Splices config-file values in front of the user's arguments so that
/// command-line values win (every option keeps its last occurrence).
[[nodiscard]] inline std::vector<std::string> expand_args(const std::vector<std::string>& args,
                                                          std::string& config_path) {
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw ValidationError("--config needs a path");
      config_path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  const auto& cmds = commands();
  auto cmd_it = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) {
    return std::find(cmds.begin(), cmds.end(), a) != cmds.end();
  });
  std::string command;
  if (cmd_it != rest.end()) {
    command = *cmd_it;
    rest.erase(cmd_it);
  }
  std::vector<std::string> injected;
  if (!config_path.empty()) {
    for (const auto& [k, v] : read_config(config_path)) {
      if (k == "command") {
        if (command.empty()) command = v;
        continue;
      }
      if (k == "config") throw ValidationError("config files cannot include other config files");
      injected.push_back("--" + k);
      injected.push_back(v);
    }
  }
  std::vector<std::string> out;
  if (!command.empty()) out.push_back(command);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

// ---------------------------------------------------------------------------
// Commands.

namespace detail {

inline Outcome cmd_simulate(const Options& o) {
  validate_common(o.params, "simulate");
  const core::CartesianState s0{o.x, o.y, o.px, o.py};
  const auto traj = core::flow(s0, o.params, o.t_end, o.integrator());
  const double h0 = core::hamiltonian(s0, o.params);
  Outcome out;
  out.table.columns = {"t", "x", "y", "px", "py", "H_residual"};
  out.table.description = "time, Cartesian state, H - H(0)";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto s = core::CartesianState::from(traj.states[i]);
    out.table.rows.push_back({traj.times[i], s.x, s.y, s.px, s.py,
                              core::hamiltonian(s, o.params) - h0});
  }
  out.note_drift("H", traj.drift("H"));
  out.summary["H0"] = h0;
  out.summary["accepted_steps"] = traj.accepted_steps;
  return out;
}

inline Outcome cmd_equilibria(const Options& o) {
  const auto reps = mcgehee::classify(o.params);
  Outcome out;
  out.table.columns = {"label", "theta",  "v",      "eig1_re", "eig1_im", "eig2_re",
                       "eig2_im", "eig3_re", "eig3_im", "class", "spiral"};
  out.table.description = "equilibrium on C, eigenvalues in the (r, theta, u) tangent basis, type";
  for (const auto& r : reps) {
    std::vector<Cell> row{r.label.name(), r.location.theta, r.location.v};
    for (const auto& z : r.eigenvalues) {
      row.emplace_back(z.real());
      row.emplace_back(z.imag());
    }
    row.emplace_back(mcgehee::to_string(*r.stability));
    row.emplace_back(static_cast<std::int64_t>(r.spiraling));
    out.table.rows.push_back(std::move(row));
  }
  out.summary["spiral_threshold"] = mcgehee::spiral_threshold(o.params.beta);
  out.summary["spiraling"] = o.params.mu > mcgehee::spiral_threshold(o.params.beta);
  return out;
}

inline Outcome cmd_collision_flow(const Options& o) {
  require_beta_above(o.params, 2.0, "collision-flow");
  if (o.n_theta < 1 || o.n_psi < 1) throw ValidationError("collision-flow: empty grid");
  if (!(o.tau > 0.0)) throw ValidationError("collision-flow: tau must be > 0");
  const Params& p = o.params;
  Outcome out;
  out.table.columns = {"kind", "id", "tau", "theta", "psi", "theta_dot", "psi_dot", "residual"};
  out.table.description =
      "field: grid sample of the torus flow; orbit: trajectory point. residual is the energy "
      "relation on C";
  auto residual = [&p](double th, double ps) {
    return mcgehee::energy_residual(saddle::from_torus({th, ps}, p), p);
  };
  for (std::size_t i = 0; i < o.n_theta; ++i) {
    const double th = -pi + two_pi * static_cast<double>(i) / static_cast<double>(o.n_theta);
    for (std::size_t j = 0; j < o.n_psi; ++j) {
      const double ps = two_pi * static_cast<double>(j) / static_cast<double>(o.n_psi);
      const auto f = saddle::torus_field({th, ps}, p);
      out.table.rows.push_back(
          {std::string("field"), std::int64_t{-1}, 0.0, th, ps, f.theta, f.psi, residual(th, ps)});
    }
  }
  // Orbits through psi = pi/2, followed both ways in time.
  std::vector<std::vector<std::vector<Cell>>> orbit_rows(o.orbits);
  std::vector<double> drift(o.orbits, 0.0);
  const auto cfg = o.integrator();
  parallel_for(o.orbits, [&](std::size_t k) {
    const double th0 = -pi + two_pi * static_cast<double>(k) / static_cast<double>(o.orbits);
    auto field = [&p](double, const Vec2& y) {
      return saddle::torus_field(saddle::TorusState::from(y), p).vec();
    };
    const std::vector<integrate::Monitor<2>> mon{
        {"residual", [&](const Vec2& y) { return residual(y[0], y[1]); }}};
    const auto bwd = integrate::integrate<2>(field, Vec2{th0, pi / 2.0}, {0.0, -o.tau}, cfg, {}, mon);
    const auto fwd = integrate::integrate<2>(field, Vec2{th0, pi / 2.0}, {0.0, o.tau}, cfg, {}, mon);
    auto& rows = orbit_rows[k];
    auto push = [&](double t, const Vec2& y) {
      const auto f = saddle::torus_field(saddle::TorusState::from(y), p);
      rows.push_back({std::string("orbit"), static_cast<std::int64_t>(k), t, y[0], y[1], f.theta,
                      f.psi, residual(y[0], y[1])});
    };
    for (std::size_t i = bwd.states.size(); i-- > 1;) push(bwd.times[i], bwd.states[i]);
    for (std::size_t i = 0; i < fwd.states.size(); ++i) push(fwd.times[i], fwd.states[i]);
    drift[k] = std::max(bwd.drift("residual"), fwd.drift("residual"));
  });
  for (std::size_t k = 0; k < o.orbits; ++k) {
    for (auto& r : orbit_rows[k]) out.table.rows.push_back(std::move(r));
    out.note_drift("residual", drift[k]);
  }
  out.summary["connection_slope_at_mu_1"] = 0.5 * (p.beta - 2.0);
  return out;
}

inline Outcome cmd_infinity_flow(const Options& o) {
  require_beta_above(o.params, 2.0, "infinity-flow");
  require_zero_energy(o.params, "infinity-flow");
  if (!(o.rho0 >= 0.0)) throw ValidationError("infinity-flow: rho0 must be >= 0");
  if (!(o.s_end > 0.0)) throw ValidationError("infinity-flow: s_end must be > 0");
  const Params& p = o.params;
  Outcome out;
  out.table.columns = {"id", "s", "rho", "vbar", "theta", "ubar", "residual"};
  out.table.description = "orbit id, time s, state, energy relation residual";
  std::vector<std::vector<std::vector<Cell>>> rows(o.orbits);
  std::vector<double> drift(o.orbits, 0.0);
  std::vector<int> to_plus(o.orbits, 0), from_minus(o.orbits, 0);
  const auto cfg = o.integrator();
  parallel_for(o.orbits, [&](std::size_t k) {
    const double th0 = two_pi * static_cast<double>(k) / static_cast<double>(o.orbits);
    const auto ub = infinity::ubar_on_level(o.rho0, 0.0, th0, +1, p);
    const infinity::InfinityState s0{o.rho0, 0.0, th0, *ub};
    const auto fwd = infinity::flow(s0, p, o.s_end, cfg);
    const auto bwd = infinity::flow(s0, p, -o.s_end, cfg);
    to_plus[k] = infinity::converged_to(fwd, +1);
    from_minus[k] = infinity::converged_to(bwd, -1);
    auto push = [&](double s, const Vec4& y) {
      rows[k].push_back({static_cast<std::int64_t>(k), s, y[0], y[1], y[2], y[3],
                         infinity::energy_residual(infinity::InfinityState::from(y), p)});
    };
    for (std::size_t i = bwd.states.size(); i-- > 1;) push(bwd.times[i], bwd.states[i]);
    for (std::size_t i = 0; i < fwd.states.size(); ++i) push(fwd.times[i], fwd.states[i]);
    drift[k] = std::max(fwd.drift("residual"), bwd.drift("residual"));
  });
  std::int64_t n_plus = 0, n_minus = 0;
  for (std::size_t k = 0; k < o.orbits; ++k) {
    for (auto& r : rows[k]) out.table.rows.push_back(std::move(r));
    out.note_drift("residual", drift[k]);
    n_plus += to_plus[k];
    n_minus += from_minus[k];
  }
  out.summary["converged_forward_to_C+"] = n_plus;
  out.summary["converged_backward_to_C-"] = n_minus;
  return out;
}

inline Outcome cmd_splitting(const Options& o) {
  const double beta = o.params.beta;
  if (beta != 3.0 && beta != 4.0) throw ValidationError("splitting: beta must be 3 or 4");
  const auto eps = parse_list(o.eps_grid, "splitting --eps-grid");
  for (double e : eps) {
    if (!(e >= 0.0)) throw ValidationError("splitting: epsilon values must be >= 0");
  }
  validate_common(o.params, "splitting");
  std::vector<saddle::SplittingResult> res(eps.size());
  const auto cfg = o.integrator();
  parallel_for(eps.size(), [&](std::size_t i) {
    Params q = o.params;
    q.mu = 1.0 + eps[i];
    res[i] = saddle::splitting(beta, q, cfg);
  });
  Outcome out;
  out.table.columns = {"beta", "eps", "psi_unstable", "psi_stable", "gap", "predicted_gap",
                       "broken", "arc_length"};
  out.table.description = "psi of both branches at the section, their gap and its first-order value";
  const double slope_pred = saddle::predicted_gap_slope(beta);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const auto& r = res[i];
    out.table.rows.push_back({beta, eps[i], r.psi_unstable, r.psi_stable, r.gap,
                              slope_pred * eps[i], static_cast<std::int64_t>(r.broken),
                              r.arc_length});
    if (eps[i] > 0.0) {
      sx += eps[i];
      sy += r.gap;
      sxx += eps[i] * eps[i];
      sxy += eps[i] * r.gap;
      ++n;
    }
  }
  out.summary["predicted_slope"] = slope_pred;
  if (n >= 2) {
    const double dn = static_cast<double>(n);
    out.summary["fitted_slope"] = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
  }
  return out;
}

inline Outcome cmd_beta2_verify(const Options& o) {
  require_beta_equal(o.params, 2.0, "beta2-verify");
  if (o.orbits > o.states) throw ValidationError("beta2-verify: orbits must not exceed states");
  if (!(o.tau > 0.0)) throw ValidationError("beta2-verify: tau must be > 0");
  const Params& p = o.params;
  std::mt19937_64 rng(o.seed);
  // With b = 1/2 these states have h < 0 and ptheta^2 > 2b, so the orbits
  // stay bounded and off collision.
  std::uniform_real_distribution<double> ur(1.5, 2.0), ut(0.0, two_pi), upr(-0.3, 0.3),
      upt(1.05, 1.2), coin(0.0, 1.0);
  std::vector<beta2::PolarState> states(o.states);
  for (auto& s : states) {
    s.r = ur(rng);
    s.theta = ut(rng);
    s.pr = upr(rng);
    s.ptheta = upt(rng) * (coin(rng) < 0.5 ? -1.0 : 1.0);
  }
  std::vector<double> dh(o.orbits), dg(o.orbits);
  const auto cfg = o.integrator();
  parallel_for(o.orbits, [&](std::size_t i) {
    const auto traj = beta2::polar_invariants_flow(states[i], p, o.tau, cfg);
    dh[i] = traj.drift("H2");
    dg[i] = traj.drift("G");
  });
  Outcome out;
  out.table.columns = {"id", "r", "theta", "pr", "ptheta", "H2", "G", "bracket", "H2_drift", "G_drift"};
  out.table.description =
      "random polar state, its invariants and {H2,G}; drift over tau for the first `orbits` states "
      "(nan otherwise)";
  double max_bracket = 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = states[i];
    const double br = beta2::poisson_bracket_H2_G(s, p);
    max_bracket = std::max(max_bracket, std::abs(br));
    const bool orbit = i < o.orbits;
    out.table.rows.push_back({static_cast<std::int64_t>(i), s.r, s.theta, s.pr, s.ptheta,
                              beta2::H2(s, p), beta2::integral_G(s, p), br, orbit ? dh[i] : nan,
                              orbit ? dg[i] : nan});
    if (orbit) {
      out.note_drift("H2", dh[i]);
      out.note_drift("G", dg[i]);
    }
  }
  out.summary["max_abs_bracket"] = max_bracket;
  return out;
}

inline Outcome cmd_melnikov(const Options& o) {
  const auto betas = parse_range(o.beta_grid, "melnikov --beta-grid");
  if (!(betas.front() > 1.5)) throw ValidationError("melnikov: beta grid must lie above 3/2");
  if (!std::isfinite(o.p) || !(o.p > 0.0)) throw ValidationError("melnikov: p must be > 0");
  const auto rows = melnikov::sweep(betas, o.p);
  Outcome out;
  out.table.columns = {"beta", "i2_quadrature", "i2_closed", "i2_over_A"};
  out.table.description = "I2 by quadrature and closed form, and I2/A";
  double max_dev = 0.0;
  // A grid point with |I2/A| below the verdict tolerance is itself a zero;
  // otherwise a zero lies between consecutive points of opposite sign.
  std::vector<double> zeros;
  int last_sign = 0;
  double last_beta = 0.0;
  for (const auto& r : rows) {
    out.table.rows.push_back({r.beta, r.i2_quadrature, r.i2_closed, r.i2_over_A});
    max_dev = std::max(max_dev, std::abs(r.i2_quadrature - r.i2_closed) /
                                    std::max(1.0, std::abs(r.i2_closed)));
    if (std::abs(r.i2_over_A) <= melnikov::verdict_tol) {
      zeros.push_back(r.beta);
      last_sign = 0;
      continue;
    }
    const int sign = r.i2_over_A > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) zeros.push_back(0.5 * (last_beta + r.beta));
    last_sign = sign;
    last_beta = r.beta;
  }
  out.summary["max_relative_deviation"] = max_dev;
  out.summary["zeros_near"] = zeros;
  return out;
}

inline Outcome cmd_basin(const Options& o) {
  const auto res = mcgehee::basin_fraction(o.params, o.samples, o.horizon, o.box, o.seed,
                                           o.integrator());
  Outcome out;
  out.table.columns = {"id", "r0", "v0", "theta0", "u0", "collided"};
  out.table.description = "sampled initial state and whether it reached r < 1e-6";
  for (std::size_t i = 0; i < res.starts.size(); ++i) {
    const auto& s = res.starts[i];
    out.table.rows.push_back({static_cast<std::int64_t>(i), s.r, s.v, s.theta, s.u,
                              static_cast<std::int64_t>(res.collided[i])});
  }
  out.note_drift("residual", res.max_residual_drift);
  out.summary["fraction"] = res.fraction;
  out.summary["collisions"] = res.collisions;
  out.summary["rejected_draws"] = res.rejected_draws;
  return out;
}

inline Outcome dispatch(const Options& o) {
  o.integrator().validate();
  if (o.command == "simulate") return cmd_simulate(o);
  if (o.command == "equilibria") return cmd_equilibria(o);
  if (o.command == "collision-flow") return cmd_collision_flow(o);
  if (o.command == "infinity-flow") return cmd_infinity_flow(o);
  if (o.command == "splitting") return cmd_splitting(o);
  if (o.command == "beta2-verify") return cmd_beta2_verify(o);
  if (o.command == "melnikov") return cmd_melnikov(o);
  if (o.command == "basin") return cmd_basin(o);
  throw ValidationError("unknown command '" + o.command + "'");
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

inline void error_record(std::ostream& err, const char* kind, const std::string& message,
                         const std::string& command) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  j["command"] = command;
  err << j.dump() << '\n';
}

}  // namespace detail

/// Builds the option parser bound to `o`.
inline void configure(CLI::App& app, Options& o) {
  // -h would clash with the energy option --h.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  for (const auto& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->callback([&o, name] { o.command = name; });
    auto real = [sub](const std::string& flag, double& target, const std::string& help) {
      sub->add_option(flag, target, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    };
    auto count = [sub](const std::string& flag, std::size_t& target, const std::string& help) {
      sub->add_option(flag, target, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    };
    auto text = [sub](const std::string& flag, std::string& target, const std::string& help) {
      sub->add_option(flag, target, help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    };
    real("--beta", o.params.beta, "exponent beta");
    real("--mu", o.params.mu, "anisotropy mu >= 1");
    real("--b", o.params.b, "coupling b > 0");
    real("--h", o.params.h, "energy h");
    real("--rel-tol", o.rel_tol, "integrator relative tolerance");
    real("--abs-tol", o.abs_tol, "integrator absolute tolerance");
    sub->add_option("--seed", o.seed, "random seed")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    text("--out", o.out, "CSV path ('-' for standard output)");
    if (name == "simulate") {
      real("--x", o.x, "initial x");
      real("--y", o.y, "initial y");
      real("--px", o.px, "initial px");
      real("--py", o.py, "initial py");
      real("--t-end", o.t_end, "final time");
    } else if (name == "collision-flow") {
      count("--n-theta", o.n_theta, "field grid size in theta");
      count("--n-psi", o.n_psi, "field grid size in psi");
      count("--orbits", o.orbits, "number of orbits");
      real("--tau", o.tau, "half-length of each orbit");
    } else if (name == "infinity-flow") {
      count("--orbits", o.orbits, "number of orbits");
      real("--s-end", o.s_end, "half-length of each orbit");
      real("--rho0", o.rho0, "initial rho (0 starts on I0)");
    } else if (name == "splitting") {
      text("--eps-grid", o.eps_grid, "comma-separated epsilon values");
    } else if (name == "beta2-verify") {
      count("--states", o.states, "number of random states");
      count("--orbits", o.orbits, "number of integrated orbits");
      real("--tau", o.tau, "orbit length in tau");
    } else if (name == "melnikov") {
      text("--beta-grid", o.beta_grid, "a:b:step");
      real("--p", o.p, "orbit parameter p");
    } else if (name == "basin") {
      count("--samples", o.samples, "number of sampled states");
      real("--horizon", o.horizon, "tau horizon");
      real("--r-min", o.box.r_min, "box");
      real("--r-max", o.box.r_max, "box");
      real("--theta-min", o.box.theta_min, "box");
      real("--theta-max", o.box.theta_max, "box");
      real("--u-min", o.box.u_min, "box");
      real("--u-max", o.box.u_max, "box");
    }
  }
}

/// Runs one command line (without the program name). Writes files, returns an exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  Options o;
  std::string command_hint;
  try {
    std::string config_path;
    std::vector<std::string> full = expand_args(args, config_path);
    if (!full.empty()) command_hint = full.front();
    CLI::App app{"Anisotropic quasihomogeneous two-body analyses", "aniso"};
    configure(app, o);
    std::vector<std::string> reversed(full.rbegin(), full.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return ok;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return ok;
    } catch (const CLI::ParseError& e) {
      detail::error_record(err, "validation", e.what(), command_hint);
      return invalid_input;
    }
    o.config = config_path;
    if (o.out.empty()) o.out = o.command + ".csv";

    const Outcome result = detail::dispatch(o);
    const std::string csv = render_csv(o, result.table);
    std::string manifest_path = o.out + ".manifest.json";
    if (o.out == "-") {
      out << csv;
      manifest_path = o.command + ".manifest.json";
    } else {
      detail::write_file(o.out, csv);
    }
    nlohmann::ordered_json m;
    m["tool"] = "aniso";
    m["version"] = version;
    m["config"] = config_echo(o);
    m["rows"] = result.table.rows.size();
    m["columns"] = result.table.columns;
    nlohmann::ordered_json drift = nlohmann::ordered_json::object();
    for (const auto& [k, v] : result.drift) drift[k] = v;
    m["invariant_drift"] = drift;
    m["summary"] = result.summary;
    detail::write_file(manifest_path, m.dump(2) + "\n");
    return ok;
  } catch (const ValidationError& e) {
    detail::error_record(err, "validation", e.what(), o.command.empty() ? command_hint : o.command);
    return invalid_input;
  } catch (const DomainError& e) {
    detail::error_record(err, "validation", e.what(), o.command.empty() ? command_hint : o.command);
    return invalid_input;
  } catch (const NumericalError& e) {
    detail::error_record(err, "numerical", e.what(), o.command.empty() ? command_hint : o.command);
    return numerical_failure;
  }
}

}  // namespace aniso::cli
