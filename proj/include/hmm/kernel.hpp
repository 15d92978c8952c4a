#pragma once

#include "hmm/common.hpp"

#include <cstddef>

namespace hmm {

// K(t) = C exp(-D / (1 - t^2)) on (-1, 1), zero elsewhere.
double kernel_value(double t, double c, double d);
// dK/dt of the unit-width kernel.
double kernel_value_derivative(double t, double c, double d);

// C such that K integrates to one; adaptive Gauss-Kronrod to 1e-10.
double calibrate_C(double d);

// Kernel scaled to a window of width eta, with quadrature weights prepared for
// a uniform grid of `points` samples spanning the window.
struct BumpKernel {
  double c = 0.0;
  double d = 1.25;
  double eta = 0.0;
  int points = 129;
  Vector weights;             // trapezoid weight * K_eta(Delta - tau_i)
  Vector derivative_weights;  // trapezoid weight * K'_eta(Delta - tau_i)

  static BumpKernel make(double eta, double d = 1.25, int points = 129);
  double grid_time(double t_n, int i) const { return t_n + eta * i / (points - 1); }
};

// K_eta(t) = (2/eta) K(2t/eta).
double kernel_scaled(const BumpKernel& k, double eta, double t);
// d/dt K_eta(t) = (4/eta^2) K'(2t/eta).
double kernel_derivative(const BumpKernel& k, double eta, double t);

// Composite trapezoid weights on uniform points. The kernel and all its
// derivatives vanish at the window ends, where this rule converges faster
// than any fixed power of the spacing.
Vector trapezoid_weights(int points, double span);

struct MacroForce {
  Vector f;
  std::size_t window = 0;
  double delta = 0.0;  // t_n + eta/2, where the convolution is centered
};

// f = K'_eta * u (Delta) from dense samples: column i of `samples` holds
// u(t_n + i eta / (points - 1)).
MacroForce estimate_macro_force(const Matrix& samples, const BumpKernel& k, double t_n, double eta);

// K_eta * u (Delta), the kernel-averaged value of the same samples.
Vector kernel_average(const Matrix& samples, const BumpKernel& k);

}  // namespace hmm
