#pragma once

#include "hmm/common.hpp"

#include <utility>
#include <vector>

namespace hmm {

// Differential-transformation (Taylor coefficient) algebra.
//
// A scalar series holds X[k] = x^(k)(t0) / k! for k = 0..order.
class Series {
 public:
  Series() = default;
  explicit Series(int order, double t0 = 0.0) : t0_(t0), c_(static_cast<std::size_t>(order) + 1, 0.0) {}
  Series(std::vector<double> coeffs, double t0) : t0_(t0), c_(std::move(coeffs)) {}

  static Series constant(double value, int order, double t0 = 0.0);
  // The time variable itself, t = t0 + h: [t0, 1, 0, ...].
  static Series time(int order, double t0 = 0.0);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double t0() const { return t0_; }
  double& operator[](std::size_t k) { return c_[k]; }
  double operator[](std::size_t k) const { return c_[k]; }
  const std::vector<double>& coeffs() const { return c_; }
  double evaluate(double h) const;

 private:
  double t0_ = 0.0;
  std::vector<double> c_;
};

Series dt_add(const Series& a, const Series& b);
Series dt_scale(const Series& a, double s);
Series dt_product(const Series& a, const Series& b);
// Returns {sin, cos} of the angle series.
std::pair<Series, Series> dt_sin_cos(const Series& angle);
Series dt_sin(const Series& angle);
Series dt_cos(const Series& angle);
Series dt_reciprocal(const Series& a);
Series dt_sqrt(const Series& a);

// Order-by-order kernels. Each computes coefficient k from coefficients
// 0..k-1 (and a[k] where noted) so recursions can interleave them.
namespace dt {

inline double cauchy(const double* a, const double* b, int k) {
  double s = 0.0;
  for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
  return s;
}

// Fills s[k], c[k] (k >= 1) from angle coefficients a[1..k] and s, c up to k-1.
inline void sincos_step(const double* a, double* s, double* c, int k) {
  double ss = 0.0, cc = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double w = j * a[j];
    ss += w * c[k - j];
    cc += w * s[k - j];
  }
  s[k] = ss / k;
  c[k] = -cc / k;
}

// r = 1/a; uses a[0..k] and r[0..k-1].
inline double reciprocal_step(const double* a, const double* r, int k) {
  double s = 0.0;
  for (int j = 1; j <= k; ++j) s += a[j] * r[k - j];
  return -s * r[0];
}

// r = sqrt(a); uses a[k] and r[0..k-1], k >= 1.
inline double sqrt_step(const double* a, const double* r, int k) {
  double s = 0.0;
  for (int j = 1; j < k; ++j) s += r[j] * r[k - j];
  return (a[k] - s) / (2.0 * r[0]);
}

}  // namespace dt

// Coefficient table of a whole state vector about t0: column k holds X[k].
struct DtSeries {
  double t0 = 0.0;
  Matrix coeffs;

  int order() const { return static_cast<int>(coeffs.cols()) - 1; }
  Eigen::Index size() const { return coeffs.rows(); }
  Vector evaluate(double h) const;
  Vector derivative(double h) const;
  void evaluate_into(double h, Eigen::Ref<Vector> out) const;
  void derivative_into(double h, Eigen::Ref<Vector> out) const;
};

}  // namespace hmm
