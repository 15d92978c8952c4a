#include "hmm/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace hmm {

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::hmm_fixed: return "hmm-fixed";
    case RunMode::hmm_variable: return "hmm-variable";
    case RunMode::micro_only: return "micro-only";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& s) {
  if (s == "hmm-fixed") return RunMode::hmm_fixed;
  if (s == "hmm-variable" || s == "hmm") return RunMode::hmm_variable;
  if (s == "micro-only") return RunMode::micro_only;
  throw ConfigError(fmt::format("unknown mode '{}' (hmm-fixed, hmm-variable, micro-only)", s));
}

void HmmConfig::validate() const {
  if (!(eta > 0)) throw ConfigError("eta must be > 0");
  if (!(t_end > 0)) throw ConfigError("t_end must be > 0");
  if (mode == RunMode::hmm_fixed && !(macro_period >= eta))
    throw ConfigError(fmt::format("H = {} must be >= eta = {}", macro_period, eta));
  if (!(mh_max > 0)) throw ConfigError("Mh_max must be > 0");
  if (!(rho_max > 1)) throw ConfigError("rho_max must be > 1");
  if (!(tol > 0)) throw ConfigError("Tol must be > 0");
  if (!(mh_initial > 0)) throw ConfigError("initial Mh must be > 0");
  if (!(warmup >= 0)) throw ConfigError("warmup must be >= 0");
  if (!(kernel_d > 0)) throw ConfigError("kernel D must be > 0");
  if (micro.order < 1) throw ConfigError("DT order L must be >= 1");
  if (micro.dense_points < 17 || micro.dense_points % 2 == 0)
    throw ConfigError("dense grid needs an odd number of points >= 17");
  if (!micro.variable() && !(micro.fixed_step > 0)) throw ConfigError("micro step h must be > 0");
}

void SimulationResult::push(double t, const Vector& x, Resolution tag, double h, int win) {
  times.push_back(t);
  states.push_back(x);
  tags.push_back(tag);
  steps.push_back(h);
  window.push_back(win);
}

double SimulationResult::average_macro_step() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : step_trace)
    if (s.mh > 0) {
      sum += s.mh;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<bool> SimulationResult::active_mask(double t) const {
  const std::size_t n = states.empty() ? state_names.size() : static_cast<std::size_t>(states.front().size());
  std::vector<bool> m(n, true);
  for (const auto& [time, idx] : exclusions)
    if (t > time)
      for (auto i : idx) m[i] = false;
  return m;
}

ControllerStep macro_controller(const Vector& f, const Vector& u_eps, double mh, double tol,
                                double rho_max, double mh_max) {
  ControllerStep c;
  c.r = (mh * f.cwiseAbs()).cwiseQuotient(u_eps.cwiseAbs() + Vector::Ones(u_eps.size())).maxCoeff();
  if (c.r >= 1.0) {
    c.e = std::numeric_limits<double>::infinity();
    c.rho = 0.0;
    c.mh_next = 0.0;
    c.reject = true;
    return c;
  }
  c.e = c.r / (1.0 - c.r);
  c.rho = c.e > 0 ? std::min(tol / c.e, rho_max) : rho_max;
  c.mh_next = std::min(c.rho * mh, mh_max);
  c.reject = c.e > 10.0 * tol;
  return c;
}

Vector macro_update(const Vector& u_eps, const Vector& f_slow, const Vector& f_bar_fast,
                    double step, double t_prime, const SlowField& field, Vector* f_bar_slow_out) {
  const Eigen::Index ns = f_slow.size(), nf = f_bar_fast.size();
  if (step == 0.0) {
    if (f_bar_slow_out) *f_bar_slow_out = f_slow;
    return u_eps;
  }
  Vector pred = u_eps;
  pred.head(ns) += step * f_slow;
  pred.tail(nf) += step * f_bar_fast;
  const Vector f_bar_slow = 0.5 * (f_slow + field(pred, t_prime + step));
  Vector next = u_eps;
  next.head(ns) += step * f_bar_slow;
  next.tail(nf) += step * f_bar_fast;
  if (f_bar_slow_out) *f_bar_slow_out = f_bar_slow;
  return next;
}

Vector macro_step_fixed(const Vector& u_eps, const Vector& f_slow, const Vector& f_bar_fast,
                        double h_macro, double eta, double t_prime, const SlowField& field) {
  return macro_update(u_eps, f_slow, f_bar_fast, h_macro - eta, t_prime, field);
}

VariableStep macro_step_variable(const Vector& u_eps, const Vector& f_slow,
                                 const Vector& f_bar_fast, double mh, const HmmConfig& cfg,
                                 double t_prime, const SlowField& field, double cap) {
  Vector f(u_eps.size());
  f << f_slow, f_bar_fast;
  VariableStep v;
  double trial = mh;
  for (;;) {
    v.control = macro_controller(f, u_eps, trial, cfg.tol, cfg.rho_max, cfg.mh_max);
    if (!v.control.reject) break;
    trial *= 0.5;
    ++v.rejections;
    if (trial < 1e-12)
      throw MacroDivergence(fmt::format("macro step collapsed below 1e-12 s (r = {:.3e})", v.control.r),
                            t_prime, u_eps);
  }
  v.mh_taken = std::min(trial, cap);
  v.u_next = macro_update(u_eps, f_slow, f_bar_fast, v.mh_taken, t_prime, field);
  return v;
}

std::vector<std::size_t> source_state_indices(const System& sys, std::size_t k) {
  const auto& c = sys.power_case();
  const auto& lay = sys.layout();
  std::vector<std::size_t> idx;
  const bool gen = k < c.generators.size();
  const std::size_t off = gen ? lay.generator_offset[k] : lay.ibr_offset[k - c.generators.size()];
  const std::size_t n = gen ? kGeneratorStates : kIbrStates;
  for (std::size_t i = 0; i < n; ++i) idx.push_back(off + i);
  for (std::size_t p = 0; p < 3; ++p) idx.push_back(lay.source_offset(k) + p);
  return idx;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

SimulationResult run_simulation(const System& sys_in, const Vector& x0, const EventSchedule& schedule,
                                const HmmConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  System sys = sys_in;
  const auto& c = sys.power_case();
  const auto& lay = sys.layout();
  if (x0.size() != static_cast<Eigen::Index>(lay.size()))
    throw ConfigError(fmt::format("initial state has {} entries, layout has {}", x0.size(), lay.size()));
  const std::size_t rhs0 = sys.rhs_calls();

  MicroSolver micro(sys, cfg.micro);
  const BumpKernel kernel = BumpKernel::make(cfg.eta, cfg.kernel_d, cfg.micro.dense_points);
  const auto ns = static_cast<Eigen::Index>(lay.slow_size);
  const Eigen::Index nf = x0.size() - ns;
  const double inf = std::numeric_limits<double>::infinity();
  const bool hmm = cfg.mode != RunMode::micro_only;

  SimulationResult res;
  res.state_names.reserve(lay.size());
  for (const auto& s : lay.states) res.state_names.push_back(s.name);
  res.t_end = cfg.t_end;

  double t = 0.0;
  Vector x = x0;
  res.push(t, x, Resolution::micro, 0.0, -1);

  std::size_t next = 0;
  double micro_until = hmm ? cfg.warmup : inf;
  double mh = cfg.mh_initial;

  auto fire_events = [&] {
    while (next < schedule.events.size() && schedule.events[next].time <= t) {
      const auto& se = schedule.events[next++];
      sys.apply_event(se.event, x);
      res.events.push_back({t, schedule.describe(se)});
      micro_until = std::max(micro_until, t + cfg.warmup);
      if (se.event.kind == EventKind::trip_generator)
        res.exclusions.push_back({t, source_state_indices(sys, c.generator_index(se.event.target))});
      else if (se.event.kind == EventKind::trip_ibr)
        res.exclusions.push_back(
            {t, source_state_indices(sys, c.generators.size() + c.ibr_index(se.event.target))});
    }
  };

  int current_window = -1;
  auto record = [&](double tn, double h, const Vector& xn, const DtSeries&) {
    res.push(tn, xn, Resolution::micro, h, current_window);
  };

  auto run_micro_to = [&](double target) {
    const auto t0 = Clock::now();
    current_window = -1;
    micro.advance(t, x, target, record);
    res.timers.micro += seconds_since(t0);
  };

  auto angles = [&](const Vector& v, double tt) { return angles_at(c, lay, v, tt, cfg.frame); };
  const SlowField field = [&](const Vector& u, double tt) {
    Vector xs = reconstruct(u, lay, angles(u, tt));
    return sys.slow_rhs(xs, tt);
  };

  fire_events();
  Matrix dense_u;
  while (t < cfg.t_end) {
    const double next_event = next < schedule.events.size() ? schedule.events[next].time : inf;
    const double stop = std::min(next_event, cfg.t_end);
    const bool faulted = !sys.network().topology.faults.empty();
    if (!hmm || faulted || t < micro_until) {
      run_micro_to(faulted || !hmm ? stop : std::min(stop, micro_until));
      // Every return to the macro process restarts the controller.
      mh = cfg.mh_initial;
      fire_events();
      continue;
    }
    if (t + cfg.eta >= stop) {
      run_micro_to(stop);
      fire_events();
      continue;
    }

    // Step 1: micro window, compression and kernel estimate.
    current_window = static_cast<int>(res.windows);
    auto t0 = Clock::now();
    const MicroWindowResult w = micro.run_window(x, t, cfg.eta);
    for (std::size_t i = 0; i < w.times.size(); ++i)
      res.push(w.times[i], w.states[i], Resolution::micro, w.steps[i], current_window);
    res.timers.micro += seconds_since(t0);

    t0 = Clock::now();
    const double t_prime = w.t_end;
    dense_u.resize(w.dense.rows(), w.dense.cols());
    for (Eigen::Index i = 0; i < w.dense.cols(); ++i) {
      const Vector col = w.dense.col(i);
      compress_into(col, lay, angles(col, w.dense_times[static_cast<std::size_t>(i)]), dense_u.col(i));
    }
    const MacroForce force = estimate_macro_force(dense_u, kernel, t, cfg.eta);
    const Vector f_bar_fast = force.f.tail(nf);
    Vector u_eps = compress(w.x_end, lay, angles(w.x_end, t_prime));
    if (cfg.averaged_fast_state)
      u_eps.tail(nf) = kernel_average(dense_u, kernel).tail(nf) + 0.5 * cfg.eta * f_bar_fast;
    res.timers.kernel += seconds_since(t0);

    // Step 2: macro step, truncated at the next event or the horizon.
    t0 = Clock::now();
    const double cap = stop - t_prime;
    StepTraceEntry tr;
    tr.t = t_prime;
    Vector u_next;
    if (cfg.mode == RunMode::hmm_fixed) {
      const double full = cfg.macro_period - cfg.eta;
      tr.mh = std::min(full, cap);
      tr.truncated = tr.mh < full;
      u_next = macro_update(u_eps, w.f_slow_end, f_bar_fast, tr.mh, t_prime, field);
    } else {
      const VariableStep v =
          macro_step_variable(u_eps, w.f_slow_end, f_bar_fast, mh, cfg, t_prime, field, cap);
      tr.mh = v.mh_taken;
      tr.truncated = v.mh_taken < mh / std::pow(2.0, v.rejections);
      tr.r = v.control.r;
      tr.e = v.control.e;
      tr.rho = v.control.rho;
      tr.mh_next = v.control.mh_next;
      tr.rejections = v.rejections;
      res.rejected_steps += static_cast<std::size_t>(v.rejections);
      mh = v.control.mh_next;
      u_next = v.u_next;
    }
    ++res.windows;
    MacroForceLog fl;
    fl.window = static_cast<std::size_t>(current_window);
    fl.t_n = t;
    fl.delta = force.delta;
    fl.norm = f_bar_fast.size() ? f_bar_fast.lpNorm<Eigen::Infinity>() : 0.0;
    fl.f.resize(x.size());
    fl.f << w.f_slow_end, f_bar_fast;
    res.forces.push_back(std::move(fl));
    res.step_trace.push_back(tr);

    if (tr.mh == 0.0) {
      // Degenerate step: the micro state continues untouched.
      t = t_prime;
      x = w.x_end;
    } else {
      if (!u_next.allFinite())
        throw MacroDivergence("non-finite macro prediction", t_prime, w.x_end);
      sys.project(u_next);
      t = tr.mh == cap ? stop : t_prime + tr.mh;
      x = reconstruct(u_next, lay, angles(u_next, t));
      res.push(t, x, Resolution::macro, 0.0, current_window);
      ++res.macro_steps;
    }
    res.timers.macro += seconds_since(t0);
    fire_events();
  }

  res.micro_stats = micro.stats();
  res.rhs_calls = sys.rhs_calls() - rhs0;
  res.timers.total = seconds_since(start);
  return res;
}

}  // namespace hmm
