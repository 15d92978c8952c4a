#include "hmm/reference.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace hmm {

SimulationResult rk4_simulate(const System& sys_in, const Vector& x0, const EventSchedule& schedule,
                              const Rk4Options& opt) {
  if (!(opt.step > 0)) throw ConfigError("reference step must be > 0");
  const auto start = std::chrono::steady_clock::now();
  System sys = sys_in;
  const auto& lay = sys.layout();
  SimulationResult res;
  for (const auto& s : lay.states) res.state_names.push_back(s.name);
  res.t_end = opt.t_end;
  const std::size_t rhs0 = sys.rhs_calls();

  auto f = [&](const Vector& x, double t) { return sys.rhs(x, t); };
  double t = 0.0;
  Vector x = x0;
  res.push(t, x, Resolution::micro, 0.0, -1);
  std::size_t ev = 0, out = 0, count = 0;
  const auto& outs = opt.output_times;
  while (out < outs.size() && outs[out] <= 0.0) ++out;

  auto fire = [&] {
    while (ev < schedule.events.size() && schedule.events[ev].time <= t) {
      const auto& se = schedule.events[ev++];
      sys.apply_event(se.event, x);
      res.events.push_back({t, schedule.describe(se)});
    }
  };
  fire();
  double last_sample = 0.0;
  while (t < opt.t_end) {
    double target = opt.t_end;
    if (ev < schedule.events.size()) target = std::min(target, schedule.events[ev].time);
    if (out < outs.size()) target = std::min(target, outs[out]);
    double h = opt.step;
    bool land = false;
    if (target - t <= h * (1.0 + 1e-9)) {
      h = target - t;
      land = true;
    }
    x = rk4_step(f, x, t, h);
    sys.project(x);
    t = land ? target : t + h;
    ++count;
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > opt.divergence_bound)
      throw NumericalError(fmt::format("RK4 diverged at t = {:.6f} s with h = {:.3e} s", t, opt.step),
                           t, x);
    const bool at_output = out < outs.size() && t == outs[out];
    if (at_output) ++out;
    if (outs.empty() ? (count % opt.record_stride == 0 || t == opt.t_end) : at_output) {
      res.push(t, x, Resolution::micro, t - last_sample, -1);
      last_sample = t;
    }
    fire();
  }
  res.rhs_calls = sys.rhs_calls() - rhs0;
  res.timers.total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<double> micro_sample_times(const SimulationResult& r) {
  std::vector<double> t;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.tags[i] == Resolution::micro && r.times[i] > 0.0) t.push_back(r.times[i]);
  return t;
}

ErrorReport integral_error(const SimulationResult& cand, const SimulationResult& ref, double horizon,
                           const StateLayout& layout) {
  if (!(horizon > 0)) throw std::invalid_argument("horizon must be > 0");
  for (const SimulationResult* r : {&cand, &ref})
    if (!r->states.empty() && static_cast<std::size_t>(r->states.front().size()) != layout.size())
      throw std::invalid_argument("trajectory width does not match the state layout");
  ErrorReport rep;
  rep.candidate_seconds = cand.timers.total;
  rep.reference_seconds = ref.timers.total;
  std::map<std::string, double> fam;
  for (const auto& s : layout.states) fam[s.family] = 0.0;
  double sum = 0.0;
  std::size_t j = 0;
  WindowDeviation cur;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (cand.tags[i] != Resolution::micro || cand.steps[i] <= 0.0) continue;
    const double t = cand.times[i];
    while (j < ref.size() && ref.times[j] < t) ++j;
    if (j >= ref.size() || std::abs(ref.times[j] - t) > 1e-12 * std::max(1.0, t)) continue;
    const auto mask = cand.active_mask(t);
    const Vector& a = cand.states[i];
    const Vector& b = ref.states[j];
    double worst = 0.0;
    std::map<std::string, double> fam_worst;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (!mask[static_cast<std::size_t>(k)]) continue;
      const double d = std::abs(a[k] - b[k]);
      const auto& family = layout.states[static_cast<std::size_t>(k)].family;
      fam_worst[family] = std::max(fam_worst[family], d);
      if (d > worst) worst = d;
      if (d > rep.max_abs_error) {
        rep.max_abs_error = d;
        rep.max_abs_state = layout.states[static_cast<std::size_t>(k)].name;
        rep.max_abs_time = t;
      }
      rep.max_normalized_pct = std::max(rep.max_normalized_pct, 100.0 * d / (std::abs(b[k]) + 1.0));
    }
    const double h = cand.steps[i];
    sum += worst * h;
    for (const auto& [name, v] : fam_worst) fam[name] += v * h;
    ++rep.compared_samples;
    const int win = cand.window[i];
    if (win >= 0) {
      if (cur.window != win) {
        if (cur.window >= 0) rep.windows.push_back(cur);
        cur = {win, t, 0.0};
      }
      cur.max_deviation = std::max(cur.max_deviation, worst);
    }
  }
  if (cur.window >= 0) rep.windows.push_back(cur);
  if (rep.compared_samples == 0)
    throw std::invalid_argument("no overlapping micro-resolution samples between the runs");
  rep.integral_error = sum / horizon;
  for (auto& [name, v] : fam) rep.family_error[name] = v / horizon;
  return rep;
}

SpeedupTable speedup_report(const std::vector<SpeedupRun>& runs, double reference_seconds) {
  SpeedupTable tab;
  for (const auto& r : runs)
    tab.rows.push_back({r.label, r.ratio, r.seconds, r.seconds > 0 ? reference_seconds / r.seconds : 0.0});
  const auto n = static_cast<double>(tab.rows.size());
  if (tab.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& r : tab.rows) {
      sx += r.ratio;
      sy += r.speedup;
      sxx += r.ratio * r.ratio;
      sxy += r.ratio * r.speedup;
      syy += r.speedup * r.speedup;
    }
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    tab.slope = vx > 0 ? cxy / vx : 0.0;
    tab.intercept = (sy - tab.slope * sx) / n;
    tab.r_squared = vx > 0 && vy > 0 ? cxy * cxy / (vx * vy) : (vy == 0 ? 1.0 : 0.0);
  }
  std::vector<SpeedupRow> sorted = tab.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.ratio < b.ratio; });
  tab.monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (!(sorted[i].speedup > sorted[i - 1].speedup)) tab.monotone = false;
  return tab;
}

}  // namespace hmm
