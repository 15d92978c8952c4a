#pragma once

#include "hmm/micro_solver.hpp"
#include "hmm/power_flow.hpp"

namespace hmm {

struct InitOptions {
  double tolerance = 1e-6;       // on the rotating-frame residual
  double settle_damping = 50.0;  // pu added to every machine's D while settling
  double settle_budget = 20.0;   // simulated seconds allowed for settling
  double settle_chunk = 0.05;
  MicroConfig micro;
};

struct InitResult {
  Vector x;
  PowerFlowResult power_flow;
  double residual = 0.0;
  std::size_t worst_state = 0;
  bool settled = false;  // true when the damped pre-simulation was needed
  double settle_time = 0.0;
};

// Full vector field with the synchronous rotation of every fast triplet
// removed: each triplet's derivative is taken in the reference dq frame.
// Zero at a balanced equilibrium.
Vector rotating_frame_residual(const System& sys, const Vector& x, double t);

// Builds the operating point from a power flow, writes the control
// setpoints (governor p_ref, exciter v_ref, IBR v_ref/q_ref) into the
// system's case, and checks the residual. When it exceeds the tolerance a
// damped pre-simulation runs and the result is re-phased to t = 0.
InitResult initialize(System& sys, const InitOptions& opt = {});

}  // namespace hmm
