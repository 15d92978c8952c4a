#pragma once

#include "hmm/dt_system.hpp"

#include <functional>

namespace hmm {

struct MicroConfig {
  int order = 30;
  double fixed_step = 330e-6;  // used when eps1 <= 0
  double eps1 = 0.0;           // > 0 selects defect-controlled stepping
  double h_min = 1e-6;
  double h_max = 0.0264 / 4.0;
  int dense_points = 129;
#ifdef NDEBUG
  bool global_defect_check = false;
#else
  bool global_defect_check = true;
#endif
  int underflow_limit = 200;  // consecutive steps below h_min tolerated

  bool variable() const { return eps1 > 0.0; }
};

struct MicroStats {
  std::size_t steps = 0;
  std::size_t underflow_steps = 0;
  double max_defect = 0.0;         // largest predicted network defect of an accepted step
  double max_global_defect = 0.0;  // largest full-RHS residual, when checked
  double min_step = 0.0;
  double max_step = 0.0;
};

struct MicroWindowResult {
  std::vector<double> times;  // accepted step end times
  std::vector<double> steps;  // accepted step sizes
  std::vector<Vector> states;
  Matrix dense;                    // column i: x at dense_times[i]
  std::vector<double> dense_times;
  Vector x_end;
  Vector f_slow_end;  // slow vector field at the window end
  double t_end = 0.0;
};

// Called after each accepted step with (t_new, h, x_new, series of the step).
using StepObserver = std::function<void(double, double, const Vector&, const DtSeries&)>;

class MicroSolver {
 public:
  MicroSolver(const System& sys, MicroConfig cfg);

  const MicroConfig& config() const { return cfg_; }
  const MicroStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

  // Step from (t, x) until t == t_end exactly.
  void advance(double& t, Vector& x, double t_end, const StepObserver& observer = {});

  // One window [t_n, t_n + eta] with dense output on the kernel grid.
  MicroWindowResult run_window(const Vector& x0, double t_n, double eta);

  // Series of the most recent step.
  const DtSeries& last_series() const { return series_; }
  double last_q() const { return last_q_; }

 private:
  double choose_step(double q_l, double remaining) const;

  const System& sys_;
  MicroConfig cfg_;
  DtSystem dts_;
  DtSeries series_;
  MicroStats stats_;
  double last_q_ = 0.0;
  int consecutive_underflow_ = 0;
  Vector scratch_, scratch2_;
};

}  // namespace hmm
