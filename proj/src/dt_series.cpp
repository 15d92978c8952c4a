#include "hmm/dt_series.hpp"

#include <fmt/format.h>

#include <cmath>

namespace hmm {

Series Series::constant(double value, int order, double t0) {
  Series s(order, t0);
  s[0] = value;
  return s;
}

Series Series::time(int order, double t0) {
  Series s(order, t0);
  s[0] = t0;
  if (order >= 1) s[1] = 1.0;
  return s;
}

double Series::evaluate(double h) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * h + *it;
  return acc;
}

namespace {

void check_compatible(const Series& a, const Series& b, const char* op) {
  if (a.order() != b.order())
    throw std::invalid_argument(fmt::format("{}: order mismatch ({} vs {})", op, a.order(), b.order()));
  if (a.t0() != b.t0())
    throw std::invalid_argument(fmt::format("{}: base time mismatch ({} vs {})", op, a.t0(), b.t0()));
}

}  // namespace

Series dt_add(const Series& a, const Series& b) {
  check_compatible(a, b, "dt_add");
  Series r(a.order(), a.t0());
  for (int k = 0; k <= a.order(); ++k) r[k] = a[k] + b[k];
  return r;
}

Series dt_scale(const Series& a, double s) {
  Series r(a.order(), a.t0());
  for (int k = 0; k <= a.order(); ++k) r[k] = s * a[k];
  return r;
}

Series dt_product(const Series& a, const Series& b) {
  check_compatible(a, b, "dt_product");
  Series r(a.order(), a.t0());
  for (int k = 0; k <= a.order(); ++k) r[k] = dt::cauchy(a.coeffs().data(), b.coeffs().data(), k);
  return r;
}

std::pair<Series, Series> dt_sin_cos(const Series& angle) {
  const int n = angle.order();
  std::vector<double> s(static_cast<std::size_t>(n) + 1), c(static_cast<std::size_t>(n) + 1);
  s[0] = std::sin(angle[0]);
  c[0] = std::cos(angle[0]);
  for (int k = 1; k <= n; ++k) dt::sincos_step(angle.coeffs().data(), s.data(), c.data(), k);
  return {Series(std::move(s), angle.t0()), Series(std::move(c), angle.t0())};
}

Series dt_sin(const Series& angle) { return dt_sin_cos(angle).first; }
Series dt_cos(const Series& angle) { return dt_sin_cos(angle).second; }

Series dt_reciprocal(const Series& a) {
  if (a[0] == 0.0) throw std::domain_error("dt_reciprocal: zero constant term");
  Series r(a.order(), a.t0());
  r[0] = 1.0 / a[0];
  for (int k = 1; k <= a.order(); ++k)
    r[k] = dt::reciprocal_step(a.coeffs().data(), r.coeffs().data(), k);
  return r;
}

Series dt_sqrt(const Series& a) {
  if (!(a[0] > 0.0)) throw std::domain_error("dt_sqrt: constant term must be positive");
  Series r(a.order(), a.t0());
  r[0] = std::sqrt(a[0]);
  for (int k = 1; k <= a.order(); ++k) r[k] = dt::sqrt_step(a.coeffs().data(), r.coeffs().data(), k);
  return r;
}

void DtSeries::evaluate_into(double h, Eigen::Ref<Vector> out) const {
  const Eigen::Index last = coeffs.cols() - 1;
  out = coeffs.col(last);
  for (Eigen::Index k = last - 1; k >= 0; --k) out = out * h + coeffs.col(k);
}

void DtSeries::derivative_into(double h, Eigen::Ref<Vector> out) const {
  const Eigen::Index last = coeffs.cols() - 1;
  if (last == 0) {
    out.setZero();
    return;
  }
  out = static_cast<double>(last) * coeffs.col(last);
  for (Eigen::Index k = last - 1; k >= 1; --k) out = out * h + static_cast<double>(k) * coeffs.col(k);
}

Vector DtSeries::evaluate(double h) const {
  Vector out(coeffs.rows());
  evaluate_into(h, out);
  return out;
}

Vector DtSeries::derivative(double h) const {
  Vector out(coeffs.rows());
  derivative_into(h, out);
  return out;
}

}  // namespace hmm
