#include "hmm/dt_system.hpp"

#include "device_taylor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace hmm {

DtSystem::DtSystem(const System& sys, int order) : sys_(sys), order_(order) {
  if (order < 1) throw std::invalid_argument("DT order must be >= 1");
  const auto& c = sys.power_case();
  for (std::size_t g = 0; g < c.generators.size(); ++g)
    gens_.push_back(std::make_unique<detail::GeneratorTaylor>(c, sys.layout(), g, order));
  for (std::size_t k = 0; k < c.ibrs.size(); ++k)
    ibrs_.push_back(std::make_unique<detail::IbrTaylor>(c, sys.layout(), k, order));
  lambda_ = Matrix::Zero(static_cast<Eigen::Index>(sys.layout().network_size()), order + 1);
}

DtSystem::~DtSystem() = default;

void DtSystem::injection_column(const Matrix& x, double t0, int k) {
  const auto& lay = sys_.layout();
  const auto& net = sys_.network();
  const auto& c = sys_.power_case();
  auto col = lambda_.col(k);
  col.setZero();
  for (std::size_t s = 0; s < net.source_node.size(); ++s) {
    if (!net.topology.source_active[s]) continue;
    const auto off = static_cast<Eigen::Index>(lay.source_offset(s));
    col.segment(static_cast<Eigen::Index>(3 * net.source_node[s]), 3) += x.block(off, k, 3, 1);
  }
  // sin(w (t0 + h) + phi) has coefficients A w^k / k! sin(a + k pi/2).
  for (const auto& j : net.topology.injections) {
    const auto b = static_cast<Eigen::Index>(3 * c.bus_index(j.bus));
    double scale = j.amplitude;
    for (int i = 1; i <= k; ++i) scale *= j.omega / i;
    const double shift = k * 0.5 * kPi;
    const double a = j.omega * t0 + j.phase;
    col[b] += scale * std::sin(a + shift);
    if (j.three_phase) {
      col[b + 1] += scale * std::sin(a - kTwoPiOver3 + shift);
      col[b + 2] += scale * std::sin(a + kTwoPiOver3 + shift);
    }
  }
}

double DtSystem::compute(double t0, const Vector& x0, DtSeries& out) {
  sys_.count_series_call();
  const auto& lay = sys_.layout();
  const auto& net = sys_.network();
  const auto n = static_cast<Eigen::Index>(lay.size());
  if (x0.size() != n) throw std::invalid_argument("dt_system: state dimension mismatch");
  out.t0 = t0;
  out.coeffs.resize(n, order_ + 1);
  out.coeffs.setZero();
  out.coeffs.col(0) = x0;
  Matrix& x = out.coeffs;
  for (auto& g : gens_) g->begin(x, t0, sys_.status());
  for (auto& d : ibrs_) d->begin(x, t0, sys_.status());

  const auto voff = static_cast<Eigen::Index>(lay.v_offset());
  const auto nn = static_cast<Eigen::Index>(lay.network_size());
  for (int k = 0; k < order_; ++k) {
    injection_column(x, t0, k);
    for (auto& g : gens_) g->stage1(x, k);
    for (auto& d : ibrs_) d->stage1(x, k);
    for (auto& g : gens_) g->stage2(x, k);
    for (auto& d : ibrs_) d->stage2(x, k);
    auto next = x.block(voff, k + 1, nn, 1);
    next.noalias() = net.a_eq * x.block(voff, k, nn, 1);
    next += net.b_eq.cwiseProduct(lambda_.col(k));
    next /= static_cast<double>(k + 1);
  }
  injection_column(x, t0, order_);
  top_.noalias() = net.a_eq * x.block(voff, order_, nn, 1);
  top_ += net.b_eq.cwiseProduct(lambda_.col(order_));
  if (!x.allFinite()) {
    Eigen::Index row = 0, col = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (!std::isfinite(x(i, j))) {
          row = i;
          col = j;
          j = x.cols();
          break;
        }
    throw NumericalError(fmt::format("non-finite DT coefficient X[{}] of state {}", col,
                                     lay.name_of(static_cast<std::size_t>(row))),
                         t0, x0);
  }
  return nn > 0 ? top_.lpNorm<Eigen::Infinity>() : 0.0;
}

DtSeries dt_system_coefficients(const System& sys, const Vector& x0, double t0, int order) {
  DtSystem dts(sys, order);
  DtSeries s;
  dts.compute(t0, x0, s);
  return s;
}

double defect_from_norm(double q_l, double h, int order) { return q_l * std::pow(h, order); }

double defect_error(const Vector& psi_l, const Vector& lambda_l, const NetworkMatrices& m, double h,
                    int order) {
  Vector r = m.a_eq * psi_l + m.b_eq.cwiseProduct(lambda_l);
  return defect_from_norm(r.lpNorm<Eigen::Infinity>(), h, order);
}

double select_step(double q_l, double eps1, int order, double h_min, double h_max) {
  if (!(q_l > 0.0)) return h_max;
  const double h = std::pow(eps1 / q_l, 1.0 / order);
  return std::clamp(h, h_min, h_max);
}

}  // namespace hmm
