#include "device_taylor.hpp"

#include "frames.hpp"
#include "hmm/dt_series.hpp"

#include <cmath>

namespace hmm::detail {

namespace {

inline double conv(const Coeffs& a, const Coeffs& b, int k) { return dt::cauchy(a.data(), b.data(), k); }
inline double kron(int k) { return k == 0 ? 1.0 : 0.0; }

void resize_all(std::initializer_list<Coeffs*> list, int order) {
  for (Coeffs* c : list) c->assign(static_cast<std::size_t>(order) + 2, 0.0);
}

bool pushes_out(double value, double rate, double lo, double hi) {
  return (value >= hi && rate > 0) || (value <= lo && rate < 0);
}

}  // namespace

GeneratorTaylor::GeneratorTaylor(const PowerSystemCase& c, const StateLayout& layout,
                                 std::size_t g, int order)
    : c_(c),
      m_(c.generators[g]),
      off_(layout.generator_offset[g]),
      ioff_(layout.source_offset(g)),
      voff_(layout.v_offset() + 3 * c.bus_index(c.generators[g].bus)),
      order_(order) {
  resize_all({&theta_, &cs_, &sn_, &c2_, &s2_, &ia_, &ib_, &i0_, &va_, &vb_, &v0_, &id_, &iq_,
              &ppad_, &ppaq_, &pad_, &paq_, &pd_, &pq_, &ifd_, &i1d_, &i1q_, &i2q_, &torque_,
              &omega_, &pe_, &vt2_, &vt_, &ppa_, &ppb_},
             order);
}

void GeneratorTaylor::sync_currents(const Matrix& x, int k) {
  const auto a = frames::clarke(x(ioff_, k), x(ioff_ + 1, k), x(ioff_ + 2, k));
  ia_[k] = a.alpha;
  ib_[k] = a.beta;
  i0_[k] = a.zero;
}

void GeneratorTaylor::begin(Matrix& x, double t0, const DeviceStatus& st) {
  const std::size_t g = static_cast<std::size_t>(&m_ - c_.generators.data());
  active_ = st.source_active[g];
  damping_ = m_.d + st.extra_damping;
  valve_frozen_ = efd_frozen_ = false;
  if (!active_) return;
  theta_[0] = c_.omega0 * t0 + x(off_ + gen_state::delta, 0);
  cs_[0] = std::cos(theta_[0]);
  sn_[0] = std::sin(theta_[0]);
  c2_[0] = cs_[0] * cs_[0] - sn_[0] * sn_[0];
  s2_[0] = 2.0 * sn_[0] * cs_[0];
  sync_currents(x, 0);
  ppad_[0] = m_.lpp_ad * (x(off_ + gen_state::psi_fd, 0) / m_.llfd + x(off_ + gen_state::psi_1d, 0) / m_.ll1d);
  ppaq_[0] = m_.lpp_aq * (x(off_ + gen_state::psi_1q, 0) / m_.ll1q + x(off_ + gen_state::psi_2q, 0) / m_.ll2q);
  ppa_[0] = ppad_[0] * cs_[0] - ppaq_[0] * sn_[0];
  ppb_[0] = ppad_[0] * sn_[0] + ppaq_[0] * cs_[0];
}

void GeneratorTaylor::stage1(Matrix& x, int k) {
  if (!active_) return;
  const auto& m = m_;
  const double w0 = c_.omega0;
  auto X = [&](std::size_t s) { return x(off_ + s, k); };
  const auto v = frames::clarke(x(voff_, k), x(voff_ + 1, k), x(voff_ + 2, k));
  va_[k] = v.alpha;
  vb_[k] = v.beta;
  v0_[k] = v.zero;

  id_[k] = conv(ia_, cs_, k) + conv(ib_, sn_, k);
  iq_[k] = -conv(ia_, sn_, k) + conv(ib_, cs_, k);
  pad_[k] = ppad_[k] - m.lpp_ad * id_[k];
  paq_[k] = ppaq_[k] - m.lpp_aq * iq_[k];
  pd_[k] = pad_[k] - m.lls * id_[k];
  pq_[k] = paq_[k] - m.lls * iq_[k];
  ifd_[k] = (X(gen_state::psi_fd) - pad_[k]) / m.llfd;
  i1d_[k] = (X(gen_state::psi_1d) - pad_[k]) / m.ll1d;
  i1q_[k] = (X(gen_state::psi_1q) - paq_[k]) / m.ll1q;
  i2q_[k] = (X(gen_state::psi_2q) - paq_[k]) / m.ll2q;
  torque_[k] = conv(pd_, iq_, k) - conv(pq_, id_, k);
  omega_[k] = w0 * kron(k) + X(gen_state::dw);
  pe_[k] = conv(omega_, torque_, k);
  double pm;
  if (m.has_governor) {
    const double xv = X(gen_state::valve), x2 = X(gen_state::gov_lead);
    pm = x2 + (m.gov.t2 / m.gov.t3) * (xv - x2) - m.gov.dt * X(gen_state::dw) / w0;
  } else {
    pm = m.gov.p_ref * kron(k);
  }
  vt2_[k] = conv(va_, va_, k) + conv(vb_, vb_, k);
  if (k == 0)
    vt_[0] = std::sqrt(vt2_[0]);
  else
    vt_[k] = vt_[0] > 1e-12 ? dt::sqrt_step(vt2_.data(), vt_.data(), k) : 0.0;

  const double inv = 1.0 / (k + 1);
  auto set = [&](std::size_t s, double rate) { x(off_ + s, k + 1) = rate * inv; };
  const double dw = X(gen_state::dw);
  set(gen_state::delta, dw);
  set(gen_state::dw, w0 / (2.0 * m.h) * (pm - pe_[k] - damping_ * dw / w0));
  set(gen_state::psi_fd, m.efd_scale * X(gen_state::efd) - m.rfd * ifd_[k]);
  set(gen_state::psi_1d, -m.r1d * i1d_[k]);
  set(gen_state::psi_1q, -m.r1q * i1q_[k]);
  set(gen_state::psi_2q, -m.r2q * i2q_[k]);
  if (m.has_governor) {
    const double xv = X(gen_state::valve);
    const double rate = (m.gov.p_ref * kron(k) - dw / (w0 * m.gov.r) - xv) / m.gov.t1;
    if (k == 0) valve_frozen_ = pushes_out(xv, rate, m.gov.vmin, m.gov.vmax);
    set(gen_state::valve, valve_frozen_ ? 0.0 : rate);
    set(gen_state::gov_lead, (xv - X(gen_state::gov_lead)) / m.gov.t3);
  } else {
    set(gen_state::valve, 0.0);
    set(gen_state::gov_lead, 0.0);
  }
  if (m.has_exciter) {
    const auto& ex = m.exc;
    const double u = ex.v_ref * kron(k) - vt_[k];
    const double xe = X(gen_state::exc_lead), efd = X(gen_state::efd);
    set(gen_state::exc_lead, (u - xe) / ex.tb);
    const double y = xe + (ex.ta / ex.tb) * (u - xe);
    const double rate = (ex.k * y - efd) / ex.te;
    if (k == 0) efd_frozen_ = pushes_out(efd, rate, ex.emin, ex.emax);
    set(gen_state::efd, efd_frozen_ ? 0.0 : rate);
  } else {
    set(gen_state::exc_lead, 0.0);
    set(gen_state::efd, 0.0);
  }
}

void GeneratorTaylor::stage2(Matrix& x, int k) {
  if (!active_) return;
  const auto& m = m_;
  const int n = k + 1;
  theta_[n] = x(off_ + gen_state::delta, n) + (k == 0 ? c_.omega0 : 0.0);
  dt::sincos_step(theta_.data(), sn_.data(), cs_.data(), n);
  c2_[n] = conv(cs_, cs_, n) - conv(sn_, sn_, n);
  s2_[n] = 2.0 * conv(sn_, cs_, n);
  ppad_[n] = m.lpp_ad * (x(off_ + gen_state::psi_fd, n) / m.llfd + x(off_ + gen_state::psi_1d, n) / m.ll1d);
  ppaq_[n] = m.lpp_aq * (x(off_ + gen_state::psi_1q, n) / m.ll1q + x(off_ + gen_state::psi_2q, n) / m.ll2q);
  ppa_[n] = conv(ppad_, cs_, n) - conv(ppaq_, sn_, n);
  ppb_[n] = conv(ppad_, sn_, n) + conv(ppaq_, cs_, n);

  // Stator flux: psi_ab[n] = (v + ra i)[k] / n, and psi_ab = -L'' i + psi''_ab.
  const double lam_a = (va_[k] + m.ra * ia_[k]) / n;
  const double lam_b = (vb_[k] + m.ra * ib_[k]) / n;
  const double mean = 0.5 * (m.lpp_d + m.lpp_q), half = 0.5 * (m.lpp_d - m.lpp_q);
  double ra = ppa_[n] - lam_a, rb = ppb_[n] - lam_b;
  for (int j = 1; j <= n; ++j) {
    const double l11 = half * c2_[j], l12 = half * s2_[j];
    ra -= l11 * ia_[n - j] + l12 * ib_[n - j];
    rb -= l12 * ia_[n - j] - l11 * ib_[n - j];
  }
  const double a11 = mean + half * c2_[0], a22 = mean - half * c2_[0], a12 = half * s2_[0];
  const double det = a11 * a22 - a12 * a12;
  ia_[n] = (a22 * ra - a12 * rb) / det;
  ib_[n] = (-a12 * ra + a11 * rb) / det;
  i0_[n] = -(v0_[k] + m.ra * i0_[k]) / (m.lls * n);
  double abc[3];
  frames::inverse_clarke(ia_[n], ib_[n], i0_[n], abc);
  x(ioff_, n) = abc[0];
  x(ioff_ + 1, n) = abc[1];
  x(ioff_ + 2, n) = abc[2];
}

IbrTaylor::IbrTaylor(const PowerSystemCase& c, const StateLayout& layout, std::size_t k, int order)
    : c_(c),
      d_(c.ibrs[k]),
      off_(layout.ibr_offset[k]),
      ioff_(layout.source_offset(c.generators.size() + k)),
      voff_(layout.v_offset() + 3 * c.bus_index(c.ibrs[k].bus)),
      order_(order) {
  resize_all({&theta_, &cs_, &sn_, &va_, &vb_, &v0_, &ia_, &ib_, &i0_, &vd_, &vq_, &id_, &iq_,
              &omega_, &vcd_, &vcq_},
             order);
}

void IbrTaylor::begin(Matrix& x, double t0, const DeviceStatus& st) {
  const std::size_t k = static_cast<std::size_t>(&d_ - c_.ibrs.data());
  active_ = st.source_active[c_.generators.size() + k];
  if (!active_) return;
  theta_[0] = c_.omega0 * t0 + x(off_ + ibr_state::delta, 0);
  cs_[0] = std::cos(theta_[0]);
  sn_[0] = std::sin(theta_[0]);
  const auto a = frames::clarke(x(ioff_, 0), x(ioff_ + 1, 0), x(ioff_ + 2, 0));
  ia_[0] = a.alpha;
  ib_[0] = a.beta;
  i0_[0] = a.zero;
}

void IbrTaylor::stage1(Matrix& x, int k) {
  if (!active_) return;
  const auto& d = d_;
  const double w0 = c_.omega0;
  auto X = [&](std::size_t s) { return x(off_ + s, k); };
  const auto v = frames::clarke(x(voff_, k), x(voff_ + 1, k), x(voff_ + 2, k));
  va_[k] = v.alpha;
  vb_[k] = v.beta;
  v0_[k] = v.zero;
  vd_[k] = conv(va_, cs_, k) + conv(vb_, sn_, k);
  vq_[k] = -conv(va_, sn_, k) + conv(vb_, cs_, k);
  id_[k] = conv(ia_, cs_, k) + conv(ib_, sn_, k);
  iq_[k] = -conv(ia_, sn_, k) + conv(ib_, cs_, k);
  omega_[k] = w0 * kron(k) + d.kp_pll * vq_[k] + d.ki_pll * X(ibr_state::phi);
  const double p = conv(vd_, id_, k) + conv(vq_, iq_, k);
  const double q = conv(vq_, id_, k) - conv(vd_, iq_, k);
  const double p_star = d.p_ref * kron(k) - d.kf * (omega_[k] - w0 * kron(k)) / w0;
  const double q_star = d.q_ref * kron(k) + d.kv * (d.v_ref * kron(k) - vd_[k]);
  const double id_ref = d.kp_p * (p_star - p) + d.ki_p * X(ibr_state::xi_p);
  const double iq_ref = -(d.kp_q * (q_star - q) + d.ki_q * X(ibr_state::xi_q));
  const double ed = id_ref - id_[k], eq = iq_ref - iq_[k];

  const double inv = 1.0 / (k + 1);
  auto set = [&](std::size_t s, double rate) { x(off_ + s, k + 1) = rate * inv; };
  set(ibr_state::delta, omega_[k] - w0 * kron(k));
  set(ibr_state::phi, vq_[k]);
  set(ibr_state::xi_p, p_star - p);
  set(ibr_state::xi_q, q_star - q);
  set(ibr_state::xi_d, ed);
  set(ibr_state::xi_qc, eq);

  vcd_[k] = vd_[k] + d.kp_c * ed + d.ki_c * X(ibr_state::xi_d) - d.lf * conv(omega_, iq_, k);
  vcq_[k] = vq_[k] + d.kp_c * eq + d.ki_c * X(ibr_state::xi_qc) + d.lf * conv(omega_, id_, k);
  const double vca = conv(vcd_, cs_, k) - conv(vcq_, sn_, k);
  const double vcb = conv(vcd_, sn_, k) + conv(vcq_, cs_, k);
  const int n = k + 1;
  ia_[n] = (vca - va_[k] - d.rf * ia_[k]) / (d.lf * n);
  ib_[n] = (vcb - vb_[k] - d.rf * ib_[k]) / (d.lf * n);
  i0_[n] = -d.rf * i0_[k] / (d.lf * n);
  double abc[3];
  frames::inverse_clarke(ia_[n], ib_[n], i0_[n], abc);
  x(ioff_, n) = abc[0];
  x(ioff_ + 1, n) = abc[1];
  x(ioff_ + 2, n) = abc[2];
}

void IbrTaylor::stage2(Matrix& x, int k) {
  if (!active_) return;
  const int n = k + 1;
  theta_[n] = x(off_ + ibr_state::delta, n) + (k == 0 ? c_.omega0 : 0.0);
  dt::sincos_step(theta_.data(), sn_.data(), cs_.data(), n);
}

}  // namespace hmm::detail
