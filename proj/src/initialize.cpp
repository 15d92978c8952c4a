#include "hmm/initialize.hpp"

#include <fmt/format.h>

#include <cmath>

namespace hmm {

namespace {

// Balanced abc samples at t = 0 of the peak phasor z.
void write_triplet(Vector& x, std::size_t off, Complex z) {
  for (int p = 0; p < 3; ++p)
    x[static_cast<Eigen::Index>(off) + p] = std::abs(z) * std::cos(std::arg(z) - p * kTwoPiOver3);
}

void init_generator(System& sys, std::size_t g, Complex v, Complex i, Vector& x) {
  auto& m = sys.mutable_case().generators[g];
  const double w0 = sys.power_case().omega0;
  const auto o = static_cast<Eigen::Index>(sys.layout().generator_offset[g]);
  const double xq = w0 * (m.lls + m.lmq);
  const Complex e = v + Complex(m.ra, xq) * i;
  const double delta = std::arg(e) - kPi / 2.0;
  const Complex rot = std::polar(1.0, -delta);
  const Complex vdq = v * rot, idq = i * rot;
  const double vd = vdq.real(), vq = vdq.imag(), id = idq.real(), iq = idq.imag();

  const double psi_q = -(vd + m.ra * id) / w0;
  const double psi_d = (vq + m.ra * iq) / w0;
  const double psi_ad = psi_d + m.lls * id;
  const double psi_aq = psi_q + m.lls * iq;
  const double ifd = (psi_ad + m.lmd * id) / m.lmd;
  const double efd = ifd * m.rfd / m.efd_scale;
  const double pm = (v * std::conj(i)).real() + m.ra * std::norm(i);

  x[o + gen_state::delta] = delta;
  x[o + gen_state::dw] = 0.0;
  x[o + gen_state::psi_fd] = psi_ad + m.llfd * ifd;
  x[o + gen_state::psi_1d] = psi_ad;
  x[o + gen_state::psi_1q] = psi_aq;
  x[o + gen_state::psi_2q] = psi_aq;
  x[o + gen_state::valve] = pm;
  x[o + gen_state::gov_lead] = pm;
  m.gov.p_ref = pm;
  if (m.has_governor && (pm > m.gov.vmax || pm < m.gov.vmin))
    throw InitializationError(
        fmt::format("{}: mechanical power {:.4f} pu outside governor limits [{}, {}]", m.name, pm,
                    m.gov.vmin, m.gov.vmax),
        0.0);
  x[o + gen_state::efd] = efd;
  if (m.has_exciter) {
    if (efd > m.exc.emax || efd < m.exc.emin)
      throw InitializationError(
          fmt::format("{}: field voltage {:.4f} pu outside exciter limits [{}, {}]", m.name, efd,
                      m.exc.emin, m.exc.emax),
          0.0);
    x[o + gen_state::exc_lead] = efd / m.exc.k;
    m.exc.v_ref = std::abs(v) + efd / m.exc.k;
  } else {
    x[o + gen_state::exc_lead] = 0.0;
  }
}

void init_ibr(System& sys, std::size_t k, Complex v, Complex i, Vector& x) {
  auto& d = sys.mutable_case().ibrs[k];
  const auto o = static_cast<Eigen::Index>(sys.layout().ibr_offset[k]);
  const double delta = std::arg(v);
  const Complex rot = std::polar(1.0, -delta);
  const double vd = std::abs(v);
  const Complex idq = i * rot;
  const double id = idq.real(), iq = idq.imag();
  x[o + ibr_state::delta] = delta;
  x[o + ibr_state::phi] = 0.0;
  x[o + ibr_state::xi_p] = id / d.ki_p;
  x[o + ibr_state::xi_q] = -iq / d.ki_q;
  x[o + ibr_state::xi_d] = d.rf * id / d.ki_c;
  x[o + ibr_state::xi_qc] = d.rf * iq / d.ki_c;
  d.p_ref = vd * id;
  d.q_ref = -vd * iq;
  d.v_ref = vd;
}

}  // namespace

Vector rotating_frame_residual(const System& sys, const Vector& x, double t) {
  const auto& c = sys.power_case();
  const auto& lay = sys.layout();
  Vector r = sys.rhs(x, t);
  if (c.source_count() == 0) return r;
  const std::size_t ref = reference_source(c);
  const double theta = source_angle(c, lay, x, t, ref);
  const double w = source_speed(c, lay, x, t, ref);
  const Mat3 p = park_matrix(theta);
  for (auto j = static_cast<Eigen::Index>(lay.slow_size); j < x.size(); j += 3) {
    const Vec3 u = p * x.segment<3>(j);
    Vec3 du = p * r.segment<3>(j);
    du[1] += w * u[2];
    du[2] -= w * u[1];
    r.segment<3>(j) = du;
  }
  return r;
}

InitResult initialize(System& sys, const InitOptions& opt) {
  const auto& c = sys.power_case();
  const auto& lay = sys.layout();
  InitResult res;
  res.power_flow = solve_power_flow(c, sys.network());
  const auto& pf = res.power_flow;

  Vector x = Vector::Zero(static_cast<Eigen::Index>(lay.size()));
  for (std::size_t b = 0; b < lay.n_bus; ++b)
    write_triplet(x, lay.v_offset() + 3 * b, pf.voltage[static_cast<Eigen::Index>(b)]);
  for (std::size_t e = 0; e < lay.n_edge; ++e)
    write_triplet(x, lay.w_offset() + 3 * e, pf.edge_current[static_cast<Eigen::Index>(e)]);
  for (std::size_t k = 0; k < c.source_count(); ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const Complex v = pf.voltage[static_cast<Eigen::Index>(c.bus_index(c.source_bus(k)))];
    const Complex i = pf.source_current[ki];
    write_triplet(x, lay.source_offset(k), i);
    if (k < c.generators.size())
      init_generator(sys, k, v, i, x);
    else
      init_ibr(sys, k - c.generators.size(), v, i, x);
  }

  auto measure = [&](const Vector& xs, double t) {
    const Vector r = rotating_frame_residual(sys, xs, t);
    Eigen::Index worst = 0;
    res.residual = r.cwiseAbs().maxCoeff(&worst);
    res.worst_state = static_cast<std::size_t>(worst);
  };
  measure(x, 0.0);

  if (res.residual > opt.tolerance) {
    res.settled = true;
    sys.set_extra_damping(opt.settle_damping);
    MicroSolver micro(sys, opt.micro);
    double t = 0.0;
    try {
      while (res.residual > opt.tolerance && t < opt.settle_budget) {
        micro.advance(t, x, t + opt.settle_chunk);
        measure(x, t);
      }
    } catch (...) {
      sys.set_extra_damping(0.0);
      throw;
    }
    sys.set_extra_damping(0.0);
    res.settle_time = t;
    // Re-phase to t = 0: same dq picture, slow block unchanged.
    const Vector u = compress(x, lay, angles_at(c, lay, x, t, FrameMode::global_reference));
    x = reconstruct(u, lay, angles_at(c, lay, x, 0.0, FrameMode::global_reference));
    measure(x, 0.0);
    if (res.residual > opt.tolerance)
      throw InitializationError(
          fmt::format("initialization did not settle within {} s: residual {:.3e} at {}",
                      opt.settle_budget, res.residual, lay.name_of(res.worst_state)),
          t, x);
  }
  res.x = x;
  return res;
}

}  // namespace hmm
