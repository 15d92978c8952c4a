#pragma once

#include "hmm/events.hpp"
#include "hmm/kernel.hpp"
#include "hmm/micro_solver.hpp"

#include <functional>

namespace hmm {

enum class RunMode { hmm_fixed, hmm_variable, micro_only };

std::string to_string(RunMode m);
RunMode parse_run_mode(const std::string& s);

struct HmmConfig {
  RunMode mode = RunMode::hmm_variable;
  MicroConfig micro;           // h (or eps1), L, clamps, dense grid
  double eta = 0.0264;         // micro window (s)
  double macro_period = 2.625 * 0.0264;  // H, fixed mode
  double tol = 1e-2;           // variable mode
  double mh_max = 0.04;
  double rho_max = 1.05;
  double mh_initial = 0.01;
  double warmup = 1.0;         // micro-only span at start and after each event
  double kernel_d = 1.25;
  double t_end = 10.0;
  FrameMode frame = FrameMode::global_reference;
  bool averaged_fast_state = false;  // use K_eta * u + (eta/2) f instead of Q(x(t'_n))

  // Throws ConfigError on inconsistent settings.
  void validate() const;
};

enum class Resolution : char { micro = 'm', macro = 'M' };

struct StepTraceEntry {
  double t = 0.0;  // t'_n, where the macro step starts
  double mh = 0.0;  // step actually taken
  double r = 0.0, e = 0.0, rho = 0.0;
  double mh_next = 0.0;
  int rejections = 0;
  bool truncated = false;
};

struct MacroForceLog {
  std::size_t window = 0;
  double t_n = 0.0;
  double delta = 0.0;
  double norm = 0.0;  // ||f_bar^II||_inf
  Vector f;           // full [f^I, f_bar^II]
};

struct EventLogEntry {
  double time = 0.0;
  std::string text;
};

struct PhaseTimers {
  double micro = 0.0;
  double kernel = 0.0;
  double macro = 0.0;
  double total = 0.0;
};

struct SimulationResult {
  std::vector<std::string> state_names;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Resolution> tags;
  std::vector<double> steps;   // micro step that produced the sample (0 for macro/initial)
  std::vector<int> window;     // window index, -1 outside HMM windows
  std::vector<StepTraceEntry> step_trace;
  std::vector<MacroForceLog> forces;
  std::vector<EventLogEntry> events;
  // From `time` on, the listed state indices belong to a tripped device.
  std::vector<std::pair<double, std::vector<std::size_t>>> exclusions;
  PhaseTimers timers;
  MicroStats micro_stats;
  std::size_t windows = 0;
  std::size_t macro_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_calls = 0;
  double t_end = 0.0;

  void push(double t, const Vector& x, Resolution tag, double h, int win);
  std::size_t size() const { return times.size(); }
  double average_macro_step() const;
  // Mask of states included in error metrics at time t.
  std::vector<bool> active_mask(double t) const;
};

// Outcome of one pass of the variable-step controller.
struct ControllerStep {
  double r = 0.0;
  double e = 0.0;
  double rho = 0.0;
  double mh_next = 0.0;
  bool reject = false;  // r >= 1 or e > 10 Tol
};

// r = max_i |mh f_i| / (|u_i| + 1), e = r / (1 - r),
// rho = min(Tol / e, rho_max), mh_next = min(rho mh, mh_max).
ControllerStep macro_controller(const Vector& f, const Vector& u_eps, double mh, double tol,
                                double rho_max, double mh_max);

// Slow vector field evaluated at a macro state and time.
using SlowField = std::function<Vector(const Vector& u, double t)>;

// Forward-Euler predictor on [f^I, f_bar^II], slow force refined by
// averaging with f^I at the predicted point, then
// u_{n+1} = u_eps + step * [f_bar^I, f_bar^II]. A zero step returns u_eps.
Vector macro_update(const Vector& u_eps, const Vector& f_slow, const Vector& f_bar_fast,
                    double step, double t_prime, const SlowField& field,
                    Vector* f_bar_slow_out = nullptr);

// One fixed macro step of length H - eta.
Vector macro_step_fixed(const Vector& u_eps, const Vector& f_slow, const Vector& f_bar_fast,
                        double h_macro, double eta, double t_prime, const SlowField& field);

struct VariableStep {
  Vector u_next;
  double mh_taken = 0.0;
  ControllerStep control;
  int rejections = 0;
};

// Variable macro step: halves mh until the controller accepts, then
// updates with mh and proposes mh_next. `cap` truncates the step (events).
VariableStep macro_step_variable(const Vector& u_eps, const Vector& f_slow,
                                 const Vector& f_bar_fast, double mh, const HmmConfig& cfg,
                                 double t_prime, const SlowField& field, double cap);

// Runs the case from x0 at t = 0. The system is copied; events mutate the copy.
SimulationResult run_simulation(const System& sys, const Vector& x0, const EventSchedule& schedule,
                                const HmmConfig& cfg);

// Indices of the states of source k (slow block and terminal current).
std::vector<std::size_t> source_state_indices(const System& sys, std::size_t k);

}  // namespace hmm
