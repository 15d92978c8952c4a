#include "hmm/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <cmath>

namespace hmm {

double kernel_value(double t, double c, double d) {
  if (!(std::abs(t) < 1.0)) return 0.0;
  return c * std::exp(-d / (1.0 - t * t));
}

double kernel_value_derivative(double t, double c, double d) {
  if (!(std::abs(t) < 1.0)) return 0.0;
  const double s = 1.0 - t * t;
  return kernel_value(t, c, d) * (-2.0 * d * t / (s * s));
}

double calibrate_C(double d) {
  if (!(d > 0)) throw std::invalid_argument("calibrate_C: D must be > 0");
  double err = 0.0;
  auto f = [d](double t) { return std::abs(t) < 1.0 ? std::exp(-d / (1.0 - t * t)) : 0.0; };
  const double area =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 20, 1e-13, &err);
  if (!(area > 0) || !(err <= 1e-10 * area))
    throw NumericalError(fmt::format("calibrate_C: quadrature did not converge (error {:.3g})", err), 0.0);
  return 1.0 / area;
}

double kernel_scaled(const BumpKernel& k, double eta, double t) {
  return 2.0 / eta * kernel_value(2.0 * t / eta, k.c, k.d);
}

double kernel_derivative(const BumpKernel& k, double eta, double t) {
  return 4.0 / (eta * eta) * kernel_value_derivative(2.0 * t / eta, k.c, k.d);
}

Vector trapezoid_weights(int points, double span) {
  if (points < 2) throw std::invalid_argument("trapezoid rule needs at least 2 points");
  Vector w = Vector::Constant(points, span / (points - 1));
  w[0] *= 0.5;
  w[points - 1] *= 0.5;
  return w;
}

BumpKernel BumpKernel::make(double eta, double d, int points) {
  if (!(eta > 0)) throw std::invalid_argument("kernel window must be > 0");
  if (points < 17) throw std::invalid_argument(fmt::format("kernel grid too coarse ({} < 17 points)", points));
  BumpKernel k;
  k.c = calibrate_C(d);
  k.d = d;
  k.eta = eta;
  k.points = points;
  const Vector w = trapezoid_weights(points, eta);
  k.weights.resize(points);
  k.derivative_weights.resize(points);
  const double delta = 0.5 * eta;
  for (int i = 0; i < points; ++i) {
    const double tau = eta * i / (points - 1);
    k.weights[i] = w[i] * kernel_scaled(k, eta, delta - tau);
    k.derivative_weights[i] = w[i] * kernel_derivative(k, eta, delta - tau);
  }
  // Rescale so the discrete rules are exact for constants and linear signals.
  double slope = 0.0;
  for (int i = 0; i < points; ++i) slope += k.derivative_weights[i] * (eta * i / (points - 1) - delta);
  k.weights /= k.weights.sum();
  k.derivative_weights /= slope;
  return k;
}

MacroForce estimate_macro_force(const Matrix& samples, const BumpKernel& k, double t_n, double eta) {
  if (samples.cols() < 17)
    throw std::invalid_argument(fmt::format("kernel grid too coarse ({} < 17 points)", samples.cols()));
  if (samples.cols() != k.points || eta != k.eta)
    throw std::invalid_argument("samples do not match the kernel grid");
  MacroForce m;
  m.f.noalias() = samples * k.derivative_weights;
  m.delta = t_n + 0.5 * eta;
  return m;
}

Vector kernel_average(const Matrix& samples, const BumpKernel& k) {
  if (samples.cols() != k.points) throw std::invalid_argument("samples do not match the kernel grid");
  return samples * k.weights;
}

}  // namespace hmm
