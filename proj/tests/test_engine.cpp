#include "support.hpp"

#include "hmm/reference.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hmm;
using namespace hmm::test;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

HmmConfig desk_config(RunMode mode, double t_end) {
  HmmConfig cfg;
  cfg.mode = mode;
  cfg.t_end = t_end;
  cfg.warmup = 0.1;
  cfg.micro.order = 20;
  return cfg;
}

double max_deviation(const Vector& a, const Vector& b, std::size_t n) {
  return (a.head(static_cast<Eigen::Index>(n)) - b.head(static_cast<Eigen::Index>(n))).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("controller on dyadic inputs") {
  SUBCASE("accepted step") {
    const ControllerStep c = macro_controller(vec({8.0}), vec({1.0}), 0.03125, 0.02, 1.05, 0.04);
    CHECK(c.r == 0.125);
    CHECK(c.e == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    CHECK(c.rho == doctest::Approx(0.14).epsilon(1e-14));
    CHECK(c.mh_next == doctest::Approx(0.14 * 0.03125).epsilon(1e-14));
    CHECK_FALSE(c.reject);
  }
  SUBCASE("error above ten times the tolerance") {
    const ControllerStep c = macro_controller(vec({16.0, 0.0}), vec({1.0, 3.0}), 0.0625, 0.01, 1.05, 0.04);
    CHECK(c.r == 0.5);
    CHECK(c.e == 1.0);
    CHECK(c.rho == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(c.mh_next == doctest::Approx(0.000625).epsilon(1e-14));
    CHECK(c.reject);
  }
  SUBCASE("growth is capped by rho_max and mh_max") {
    const ControllerStep small = macro_controller(vec({1e-12}), vec({0.0}), 0.02, 0.01, 1.05, 0.04);
    CHECK(small.rho == 1.05);
    CHECK(small.mh_next == doctest::Approx(0.021).epsilon(1e-14));
    const ControllerStep near = macro_controller(vec({1e-12}), vec({0.0}), 0.039, 0.01, 1.05, 0.04);
    CHECK(near.mh_next == 0.04);
    const ControllerStep zero = macro_controller(vec({0.0, 0.0}), vec({1.0, -2.0}), 0.01, 0.01, 1.05, 0.04);
    CHECK(zero.r == 0.0);
    CHECK(zero.e == 0.0);
    CHECK(zero.rho == 1.05);
  }
  SUBCASE("r at or above one") {
    const ControllerStep c = macro_controller(vec({2.0}), vec({1.0}), 1.0, 0.01, 1.05, 0.04);
    CHECK(c.r == 1.0);
    CHECK(c.e == std::numeric_limits<double>::infinity());
    CHECK(c.rho == 0.0);
    CHECK(c.mh_next == 0.0);
    CHECK(c.reject);
  }
}

TEST_CASE("macro update is Heun on the slow block and Euler on the fast block") {
  const SlowField decay = [](const Vector& u, double) { return Vector(-u.head(1)); };
  const double h = 0.1;
  const Vector u0 = vec({1.0, 2.0});
  const Vector next = macro_update(u0, vec({-1.0}), vec({3.0}), h, 0.0, decay);
  CHECK(next[0] == doctest::Approx(1.0 - h + 0.5 * h * h).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(2.0 + 3.0 * h).epsilon(1e-15));

  // Second order: halving h cuts the one-step error by about 8.
  auto err = [&](double s) {
    return std::abs(macro_update(vec({1.0, 0.0}), vec({-1.0}), vec({0.0}), s, 0.0, decay)[0] - std::exp(-s));
  };
  CHECK(err(0.1) / err(0.05) == doctest::Approx(8.0).epsilon(0.05));

  CHECK(macro_update(u0, vec({-1.0}), vec({3.0}), 0.0, 0.0, decay) == u0);
  const double eta = 0.0264;
  CHECK(macro_step_fixed(u0, vec({-1.0}), vec({3.0}), eta, eta, 0.0, decay) == u0);
}

TEST_CASE("variable macro step halves on rejection and honours the cap") {
  HmmConfig cfg;
  cfg.tol = 0.01;
  const SlowField steady = [](const Vector&, double) { return Vector(Vector::Constant(1, 20.0)); };
  // r = 10 mh, rejected while e = r / (1 - r) > 0.1: 0.04, 0.02 and 0.01 fail.
  const VariableStep v = macro_step_variable(vec({1.0}), vec({20.0}), Vector(), 0.04, cfg, 0.0, steady, 1.0);
  CHECK(v.rejections == 3);
  CHECK(v.mh_taken == 0.005);
  CHECK(v.u_next[0] == doctest::Approx(1.0 + 0.005 * 20.0).epsilon(1e-15));

  const VariableStep capped = macro_step_variable(vec({1.0}), vec({0.1}), Vector(), 0.04, cfg, 0.0, steady, 0.015);
  CHECK(capped.rejections == 0);
  CHECK(capped.mh_taken == 0.015);

  CHECK_THROWS_AS(macro_step_variable(vec({0.0}), vec({1e300}), Vector(), 0.04, cfg, 0.0, steady, 1.0),
                  MacroDivergence);
}

TEST_CASE("configuration validation") {
  HmmConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  HmmConfig bad = cfg;
  bad.mode = RunMode::hmm_fixed;
  bad.macro_period = 0.5 * bad.eta;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.eta = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_run_mode(to_string(RunMode::hmm_variable)) == RunMode::hmm_variable);
  CHECK(parse_run_mode(to_string(RunMode::micro_only)) == RunMode::micro_only);
  CHECK_THROWS_AS(parse_run_mode("bogus"), ConfigError);
}

TEST_CASE("warmup covering the horizon reproduces the micro-only run") {
  Loaded s = load_initialized("desk.yaml");
  const EventSchedule sched = load_schedule(case_path("desk_fault.yaml"), s.sys.power_case());
  HmmConfig micro = desk_config(RunMode::micro_only, 0.3);
  HmmConfig fixed = desk_config(RunMode::hmm_fixed, 0.3);
  fixed.warmup = 0.5;
  HmmConfig variable = desk_config(RunMode::hmm_variable, 0.3);
  variable.warmup = 0.5;
  const SimulationResult a = run_simulation(s.sys, s.x0, sched, micro);
  for (const HmmConfig* cfg : {&fixed, &variable}) {
    const SimulationResult b = run_simulation(s.sys, s.x0, sched, *cfg);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t k = 0; k < a.size(); ++k)
      identical = identical && a.times[k] == b.times[k] && a.states[k] == b.states[k];
    CHECK(identical);
    CHECK(b.macro_steps == 0);
  }
}

TEST_CASE("macro period equal to the window tracks the micro-only run") {
  Loaded s = load_initialized("desk.yaml");
  const EventSchedule sched = load_schedule(case_path("desk_fault.yaml"), s.sys.power_case());
  HmmConfig micro = desk_config(RunMode::micro_only, 0.5);
  micro.warmup = 0.2;
  HmmConfig fixed = micro;
  fixed.mode = RunMode::hmm_fixed;
  fixed.macro_period = fixed.eta;
  const SimulationResult a = run_simulation(s.sys, s.x0, sched, micro);
  const SimulationResult b = run_simulation(s.sys, s.x0, sched, fixed);
  CHECK(b.windows > 0);
  const ErrorReport e = integral_error(b, a, 0.5, s.sys.layout());
  CHECK(e.max_abs_error < 1e-8);
}

TEST_CASE("an equilibrium is a fixed point of the macro map") {
  Loaded s = load_initialized("two_area_ibr.yaml");
  const std::size_t ns = s.sys.layout().slow_size;
  for (RunMode mode : {RunMode::hmm_fixed, RunMode::hmm_variable}) {
    HmmConfig cfg = desk_config(mode, 1.0);
    cfg.macro_period = 2.0 * cfg.eta;
    const SimulationResult r = run_simulation(s.sys, s.x0, EventSchedule{}, cfg);
    CHECK(r.macro_steps > 0);
    CHECK(max_deviation(r.states.back(), s.x0, ns) < 1e-6);
    if (mode == RunMode::hmm_variable) {
      CHECK(r.rejected_steps == 0);
      for (std::size_t k = 1; k < r.step_trace.size(); ++k)
        if (!r.step_trace[k].truncated) CHECK(r.step_trace[k].mh >= r.step_trace[k - 1].mh);
      CHECK(r.step_trace.back().mh > cfg.mh_initial);
    }
  }
}

TEST_CASE("macro steps never cross a disturbance") {
  Loaded s = load_initialized("desk.yaml");
  EventSchedule sched = parse_schedule(
      "events:\n  - {time: 0.7, type: fault, bus: 3, g_pu: 5.0, duration_s: 0.05}\n",
      s.sys.power_case());
  for (RunMode mode : {RunMode::hmm_fixed, RunMode::hmm_variable}) {
    HmmConfig cfg = desk_config(mode, 1.5);
    const SimulationResult r = run_simulation(s.sys, s.x0, sched, cfg);
    for (double te : {0.7, 0.75}) {
      bool sampled = false;
      for (double t : r.times) sampled = sampled || t == te;
      CHECK(sampled);
      for (const auto& st : r.step_trace) CHECK_FALSE((st.t < te && st.t + st.mh > te + 1e-12));
    }
    // Micro-only from the event until one warmup after the clearing.
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r.times[k] > 0.7 && r.times[k] < 0.75 + cfg.warmup) CHECK(r.tags[k] == Resolution::micro);
    CHECK(r.events.size() == 2);
    for (std::size_t k = 1; k < r.size(); ++k) CHECK(r.times[k] >= r.times[k - 1]);
    CHECK(r.times.back() == doctest::Approx(1.5).epsilon(1e-12));
  }
}

TEST_CASE("variable mode respects the maximum step and restarts after events") {
  Loaded s = load_initialized("desk.yaml");
  const EventSchedule sched = load_schedule(case_path("desk_fault.yaml"), s.sys.power_case());
  HmmConfig cfg = desk_config(RunMode::hmm_variable, 3.0);
  const SimulationResult r = run_simulation(s.sys, s.x0, sched, cfg);
  REQUIRE_FALSE(r.step_trace.empty());
  CHECK(r.step_trace.front().t >= 0.1 + 5.0 / 60.0 + cfg.warmup - 1e-9);
  CHECK(r.step_trace.front().mh <= cfg.mh_initial);
  for (const auto& st : r.step_trace) {
    CHECK(st.mh <= cfg.mh_max + 1e-15);
    CHECK(st.mh_next <= cfg.rho_max * st.mh * std::pow(2.0, st.rejections) + 1e-15);
  }
  CHECK(r.average_macro_step() > 0.0);
}

TEST_CASE("runs are deterministic") {
  Loaded s = load_initialized("desk.yaml");
  const EventSchedule sched = load_schedule(case_path("desk_fault.yaml"), s.sys.power_case());
  HmmConfig cfg = desk_config(RunMode::hmm_variable, 1.0);
  const SimulationResult a = run_simulation(s.sys, s.x0, sched, cfg);
  const SimulationResult b = run_simulation(s.sys, s.x0, sched, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.states[k] == b.states[k]);
}

TEST_CASE("tripped devices are excluded from metrics") {
  Loaded s = load_initialized("two_area_ibr.yaml");
  const EventSchedule sched = load_schedule(case_path("s2_trip.yaml"), s.sys.power_case());
  REQUIRE_FALSE(sched.empty());
  HmmConfig cfg = desk_config(RunMode::micro_only, sched.events.front().time + 0.05);
  cfg.micro.eps1 = 1e-6;
  const SimulationResult r = run_simulation(s.sys, s.x0, sched, cfg);
  REQUIRE(r.exclusions.size() == 1);
  const double t_trip = r.exclusions.front().first;
  const auto before = r.active_mask(t_trip - 1e-3);
  const auto after = r.active_mask(t_trip + 1e-3);
  for (std::size_t i : r.exclusions.front().second) {
    CHECK(before[i]);
    CHECK_FALSE(after[i]);
  }
}
