#pragma once

// Taylor-coefficient recursions of the device equations. Each device is
// advanced order by order; stage1(k) produces the order k+1 coefficients of
// the slow states (and, for inverters, of the filter current), stage2(k)
// produces everything that needs those new slow coefficients.

#include "hmm/model.hpp"

#include <vector>

namespace hmm::detail {

using Coeffs = std::vector<double>;

class GeneratorTaylor {
 public:
  GeneratorTaylor(const PowerSystemCase& c, const StateLayout& layout, std::size_t g, int order);
  void begin(Matrix& x, double t0, const DeviceStatus& st);
  void stage1(Matrix& x, int k);
  void stage2(Matrix& x, int k);
  bool active() const { return active_; }

 private:
  void sync_currents(const Matrix& x, int k);

  const PowerSystemCase& c_;
  const SynchronousGenerator& m_;
  std::size_t off_, ioff_, voff_;
  int order_;
  bool active_ = true;
  double damping_ = 0.0;
  bool valve_frozen_ = false, efd_frozen_ = false;
  Coeffs theta_, cs_, sn_, c2_, s2_;
  Coeffs ia_, ib_, i0_, va_, vb_, v0_;
  Coeffs id_, iq_, ppad_, ppaq_, pad_, paq_, pd_, pq_, ifd_, i1d_, i1q_, i2q_;
  Coeffs torque_, omega_, pe_, vt2_, vt_;
  Coeffs ppa_, ppb_;
};

class IbrTaylor {
 public:
  IbrTaylor(const PowerSystemCase& c, const StateLayout& layout, std::size_t k, int order);
  void begin(Matrix& x, double t0, const DeviceStatus& st);
  void stage1(Matrix& x, int k);
  void stage2(Matrix& x, int k);

 private:
  const PowerSystemCase& c_;
  const GridFollowingIbr& d_;
  std::size_t off_, ioff_, voff_;
  int order_;
  bool active_ = true;
  Coeffs theta_, cs_, sn_;
  Coeffs va_, vb_, v0_, ia_, ib_, i0_;
  Coeffs vd_, vq_, id_, iq_, omega_, vcd_, vcq_;
};

}  // namespace hmm::detail
