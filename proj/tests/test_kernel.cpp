#include "hmm/kernel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

using namespace hmm;

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

// Dense samples of a scalar signal on the kernel grid of [t_n, t_n + eta].
Matrix sample(const BumpKernel& k, double t_n, const std::function<double(double)>& u) {
  Matrix m(1, k.points);
  for (int i = 0; i < k.points; ++i) m(0, i) = u(k.grid_time(t_n, i));
  return m;
}

}  // namespace

TEST_CASE("C for D = 1.25 matches the tabulated 3.0739") {
  CHECK(calibrate_C(1.25) == doctest::Approx(3.0739).epsilon(1e-4));
  // Independent oracle: Boost quadrature of the unnormalized bump.
  const double area = integrate([](double t) { return std::exp(-1.25 / (1.0 - t * t)); }, -1.0, 1.0);
  CHECK(calibrate_C(1.25) == doctest::Approx(1.0 / area).epsilon(1e-12));
  CHECK_THROWS_AS(calibrate_C(0.0), std::invalid_argument);
}

TEST_CASE("bump kernel shape") {
  const double c = calibrate_C(1.25);
  CHECK(kernel_value(0.0, c, 1.25) == doctest::Approx(c * std::exp(-1.25)));
  CHECK(kernel_value(0.0, c, 1.25) == doctest::Approx(0.880687).epsilon(1e-5));
  CHECK(kernel_value(1.0, c, 1.25) == 0.0);
  CHECK(kernel_value(-1.5, c, 1.25) == 0.0);
  CHECK(kernel_value_derivative(0.0, c, 1.25) == 0.0);
  for (double t : {0.1, 0.37, 0.8})
    CHECK(kernel_value(t, c, 1.25) == doctest::Approx(kernel_value(-t, c, 1.25)));
  // derivative against a central difference
  const double t = 0.42, e = 1e-6;
  CHECK(kernel_value_derivative(t, c, 1.25) ==
        doctest::Approx((kernel_value(t + e, c, 1.25) - kernel_value(t - e, c, 1.25)) / (2 * e)).epsilon(1e-7));
}

TEST_CASE("scaled kernel has unit mass and zero-mean derivative") {
  for (double eta : {0.0264, 0.1}) {
    const BumpKernel k = BumpKernel::make(eta);
    const double m0 = integrate([&](double t) { return kernel_scaled(k, eta, t); }, -eta / 2, eta / 2);
    const double m1 = integrate([&](double t) { return kernel_derivative(k, eta, t); }, -eta / 2, eta / 2);
    CHECK(std::abs(m0 - 1.0) < 1e-8);
    CHECK(std::abs(m1) < 1e-8);
    // discrete weights on the 129-point grid
    CHECK(std::abs(k.weights.sum() - 1.0) < 1e-8);
    CHECK(std::abs(k.derivative_weights.sum()) < 1e-8);
  }
}

TEST_CASE("trapezoid weights") {
  const Vector w = trapezoid_weights(5, 1.0);
  CHECK(w.sum() == doctest::Approx(1.0));
  CHECK(w[0] == 0.125);
  CHECK(w[1] == 0.25);
  CHECK_THROWS(trapezoid_weights(1, 1.0));
}

TEST_CASE("macro force of constant and linear signals") {
  const double eta = 0.0264, t_n = 1.3;
  const BumpKernel k = BumpKernel::make(eta);
  const MacroForce c = estimate_macro_force(sample(k, t_n, [](double) { return 4.2; }), k, t_n, eta);
  CHECK(std::abs(c.f[0]) < 1e-9);
  CHECK(c.delta == doctest::Approx(t_n + eta / 2));
  const MacroForce l = estimate_macro_force(sample(k, t_n, [](double t) { return -3.0 * t; }), k, t_n, eta);
  CHECK(l.f[0] == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("integration by parts holds at 129 points") {
  for (double eta : {0.0264, 0.1}) {
    const BumpKernel k = BumpKernel::make(eta);
    const double t_n = 0.25;
    auto poly = [](double t) { return 1.0 + 2.0 * t + 3.0 * t * t - t * t * t; };
    auto dpoly = [](double t) { return 2.0 + 6.0 * t - 3.0 * t * t; };
    const double w = 2 * kPi * 60;
    auto sine = [w](double t) { return std::sin(w * t + 0.3); };
    auto dsine = [w](double t) { return w * std::cos(w * t + 0.3); };
    const std::vector<std::pair<std::function<double(double)>, std::function<double(double)>>> cases{
        {poly, dpoly}, {sine, dsine}};
    for (const auto& [u, du] : cases) {
      const double lhs = estimate_macro_force(sample(k, t_n, u), k, t_n, eta).f[0];
      const double rhs = kernel_average(sample(k, t_n, du), k)[0];
      CHECK(std::abs(lhs - rhs) <= 1e-6);
    }
  }
}

TEST_CASE("ramp plus 60 Hz is averaged to the ramp slope") {
  const double p = 1.0 / 60.0, a = 0.7, eta = 0.0264;
  auto ramp = [&](double amp) {
    return [=](double t) { return a * t + amp * std::sin(2 * kPi * t / p + 1.1); };
  };
  // Oracle: the continuous convolution K_eta * u' by adaptive quadrature.
  auto oracle = [&](double amp, double window) {
    const BumpKernel k = BumpKernel::make(window);
    const double mid = 2.0 + window / 2;
    auto g = [&](double t) {
      return kernel_scaled(k, window, mid - t) * (a + amp * 2 * kPi / p * std::cos(2 * kPi * t / p + 1.1));
    };
    return integrate(g, 2.0, 2.0 + window);
  };
  const BumpKernel k = BumpKernel::make(eta);
  // Residual oscillation small against the slope: averaged to within 2%.
  const double small = estimate_macro_force(sample(k, 2.0, ramp(5e-4)), k, 2.0, eta).f[0];
  CHECK(small == doctest::Approx(a).epsilon(0.02));
  CHECK(small == doctest::Approx(oracle(5e-4, eta)).epsilon(1e-6));
  // Large residual: the estimate still matches the oracle, and the error
  // falls as the window covers more periods.
  const double large = estimate_macro_force(sample(k, 2.0, ramp(0.5)), k, 2.0, eta).f[0];
  CHECK(std::abs(large - oracle(0.5, eta)) <= 1e-6 * 0.5 * 2 * kPi / p);
  double prev = 1e300;
  for (double window : {p, 2 * p, 4 * p}) {
    const BumpKernel ke = BumpKernel::make(window);
    const double err = std::abs(estimate_macro_force(sample(ke, 2.0, ramp(0.5)), ke, 2.0, window).f[0] - a);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("samples outside the window do not matter") {
  const double eta = 0.05;
  const BumpKernel k = BumpKernel::make(eta);
  // only the end points touch the support boundary, where K and K' vanish
  CHECK(k.weights[0] == 0.0);
  CHECK(k.weights[k.points - 1] == 0.0);
  CHECK(k.derivative_weights[0] == 0.0);
  CHECK(k.derivative_weights[k.points - 1] == 0.0);
  Matrix m = Matrix::Random(3, k.points);
  const Vector f0 = estimate_macro_force(m, k, 0.0, eta).f;
  m.col(0).setConstant(1e9);
  m.col(k.points - 1).setConstant(-1e9);
  CHECK((estimate_macro_force(m, k, 0.0, eta).f - f0).norm() == 0.0);
}

TEST_CASE("kernel grid validation") {
  CHECK_THROWS(BumpKernel::make(0.0264, 1.25, 9));
  const BumpKernel k = BumpKernel::make(0.0264);
  CHECK_THROWS(estimate_macro_force(Matrix::Zero(1, 9), k, 0.0, 0.0264));
  CHECK_THROWS(estimate_macro_force(Matrix::Zero(1, k.points), k, 0.0, 0.03));
}
