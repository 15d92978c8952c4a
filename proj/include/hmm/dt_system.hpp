#pragma once

#include "hmm/dt_series.hpp"
#include "hmm/system.hpp"

#include <memory>

namespace hmm {

namespace detail {
class GeneratorTaylor;
class IbrTaylor;
}  // namespace detail

// Taylor coefficient recursion (k+1) X[k+1] = F(X[0..k]) for the whole
// system. The network block uses Psi[k+1] = (A_eq Psi[k] + B_eq Lambda[k]) / (k+1).
class DtSystem {
 public:
  DtSystem(const System& sys, int order);
  ~DtSystem();
  DtSystem(const DtSystem&) = delete;
  DtSystem& operator=(const DtSystem&) = delete;

  // Fills out with the table about (t0, x0) and returns
  // Q_L = ||A_eq Psi[L] + B_eq Lambda[L]||_inf. Throws NumericalError on a
  // non-finite coefficient.
  double compute(double t0, const Vector& x0, DtSeries& out);

  int order() const { return order_; }
  // Injection coefficients Lambda[0..L] of the last compute (network rows).
  const Matrix& lambda() const { return lambda_; }
  // A_eq Psi[L] + B_eq Lambda[L] of the last compute.
  const Vector& top_residual() const { return top_; }

 private:
  void injection_column(const Matrix& x, double t0, int k);

  const System& sys_;
  int order_;
  std::vector<std::unique_ptr<detail::GeneratorTaylor>> gens_;
  std::vector<std::unique_ptr<detail::IbrTaylor>> ibrs_;
  Matrix lambda_;
  Vector top_;
};

DtSeries dt_system_coefficients(const System& sys, const Vector& x0, double t0, int order);

// Exact defect of the truncated network series: ||A_eq Psi[L] + B_eq Lambda[L]||_inf h^L.
double defect_error(const Vector& psi_l, const Vector& lambda_l, const NetworkMatrices& m, double h,
                    int order);
double defect_from_norm(double q_l, double h, int order);

// h = (eps1 / Q_L)^(1/L) clamped to [h_min, h_max]; Q_L = 0 gives h_max.
double select_step(double q_l, double eps1, int order, double h_min, double h_max);

}  // namespace hmm
