#pragma once

#include "hmm/engine.hpp"

#include <map>

namespace hmm {

struct Rk4Options {
  double step = 5e-6;
  double t_end = 1.0;
  // Steps are shortened to land on each of these times, where a sample is
  // recorded. Empty: every `record_stride`-th step is recorded.
  std::vector<double> output_times;
  std::size_t record_stride = 1;
  double divergence_bound = 1e6;  // max |x| before the run is declared unstable
};

// Classical RK4 on System::rhs with the same projection and event handling
// as the DT solver. Samples are tagged micro.
SimulationResult rk4_simulate(const System& sys, const Vector& x0, const EventSchedule& schedule,
                              const Rk4Options& opt);

// One classical RK4 step of dx/dt = f(x, t).
template <class F>
Vector rk4_step(const F& f, const Vector& x, double t, double h) {
  const Vector k1 = f(x, t);
  const Vector k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
  const Vector k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
  const Vector k4 = f(x + h * k3, t + h);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct WindowDeviation {
  int window = -1;
  double t = 0.0;
  double max_deviation = 0.0;
};

struct ErrorReport {
  double integral_error = 0.0;
  std::map<std::string, double> family_error;  // same metric per state family
  double max_abs_error = 0.0;
  std::string max_abs_state;
  double max_abs_time = 0.0;
  double max_normalized_pct = 0.0;  // 100 * max |d| / (|ref| + 1)
  std::vector<WindowDeviation> windows;
  std::size_t compared_samples = 0;
  double candidate_seconds = 0.0;
  double reference_seconds = 0.0;
  double speedup() const { return candidate_seconds > 0 ? reference_seconds / candidate_seconds : 0.0; }
};

// (1/T) sum over micro-resolution candidate samples of ||x_c - x_r||_inf h,
// with the reference looked up at the candidate's sample times. States of
// tripped devices are skipped after the trip.
ErrorReport integral_error(const SimulationResult& candidate, const SimulationResult& reference,
                           double horizon, const StateLayout& layout);

// Times of the candidate's micro-resolution samples, the grid a reference run
// must land on.
std::vector<double> micro_sample_times(const SimulationResult& r);

struct SpeedupRun {
  std::string label;
  double ratio = 0.0;  // predicted speedup, H / eta
  double seconds = 0.0;
};

struct SpeedupRow {
  std::string label;
  double ratio = 0.0;
  double seconds = 0.0;
  double speedup = 0.0;
};

struct SpeedupTable {
  std::vector<SpeedupRow> rows;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool monotone = false;
};

// Measured speedups against `reference_seconds`, with a least-squares line of
// measured speedup against the predicted ratio.
SpeedupTable speedup_report(const std::vector<SpeedupRun>& runs, double reference_seconds);

}  // namespace hmm
