#include "hmm/model.hpp"

#include "frames.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace hmm {

void SynchronousGenerator::finalize(double omega0) {
  lpp_ad = 1.0 / (1.0 / lmd + 1.0 / llfd + 1.0 / ll1d);
  lpp_aq = 1.0 / (1.0 / lmq + 1.0 / ll1q + 1.0 / ll2q);
  lpp_d = lls + lpp_ad;
  lpp_q = lls + lpp_aq;
  efd_scale = rfd / (omega0 * lmd);
}

namespace {

template <typename T>
std::size_t find_by_id(const std::vector<T>& items, int id, const char* what) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].id == id) return i;
  throw CaseError(fmt::format("unknown {} {}", what, id));
}

}  // namespace

std::size_t PowerSystemCase::bus_index(int id) const { return find_by_id(buses, id, "bus"); }
std::size_t PowerSystemCase::generator_index(int id) const {
  return find_by_id(generators, id, "generator");
}
std::size_t PowerSystemCase::ibr_index(int id) const { return find_by_id(ibrs, id, "ibr"); }
std::size_t PowerSystemCase::load_index(int id) const { return find_by_id(loads, id, "load"); }
std::size_t PowerSystemCase::line_index(int id) const { return find_by_id(lines, id, "line"); }

double PowerSystemCase::impedance_base(int bus_id) const {
  const double kv = buses[bus_index(bus_id)].nominal_kv;
  return kv * kv / base_mva;
}

int PowerSystemCase::source_bus(std::size_t k) const {
  return k < generators.size() ? generators[k].bus : ibrs[k - generators.size()].bus;
}

std::string PowerSystemCase::source_name(std::size_t k) const {
  return k < generators.size() ? generators[k].name : ibrs[k - generators.size()].name;
}

void PowerSystemCase::validate() const {
  if (buses.empty()) throw CaseError("empty network");
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw CaseError(fmt::format("duplicate bus id {}", b.id));
    if (!(b.nominal_kv > 0)) throw CaseError(fmt::format("bus {}: nominal_kv must be > 0", b.id));
    if (b.shunt_capacitance < 0)
      throw CaseError(fmt::format("bus {}: negative shunt capacitance", b.id));
    if (b.shunt_conductance < 0)
      throw CaseError(fmt::format("bus {}: negative shunt conductance", b.id));
  }
  auto need_bus = [&](int bus, const std::string& who) {
    if (!ids.count(bus)) throw CaseError(fmt::format("{} references unknown bus {}", who, bus));
  };
  std::map<int, double> node_cap;
  for (const auto& b : buses) node_cap[b.id] = b.shunt_capacitance;

  std::set<int> line_ids;
  for (const auto& l : lines) {
    const std::string who = fmt::format("line {}", l.id);
    if (!line_ids.insert(l.id).second) throw CaseError(fmt::format("duplicate {}", who));
    need_bus(l.from_bus, who);
    need_bus(l.to_bus, who);
    if (l.from_bus == l.to_bus) throw CaseError(fmt::format("{}: from_bus equals to_bus", who));
    if (!(l.inductance > 0)) throw CaseError(fmt::format("{}: inductance must be > 0", who));
    if (l.resistance < 0) throw CaseError(fmt::format("{}: negative resistance", who));
    if (l.charging < 0) throw CaseError(fmt::format("{}: negative charging", who));
    node_cap[l.from_bus] += 0.5 * l.charging;
    node_cap[l.to_bus] += 0.5 * l.charging;
  }
  std::set<int> load_ids;
  for (const auto& ld : loads) {
    const std::string who = fmt::format("load {}", ld.id);
    if (!load_ids.insert(ld.id).second) throw CaseError(fmt::format("duplicate {}", who));
    need_bus(ld.bus, who);
    if (ld.kind == LoadKind::rl) {
      if (!(ld.inductance > 0)) throw CaseError(fmt::format("{}: inductance must be > 0", who));
      if (ld.resistance < 0) throw CaseError(fmt::format("{}: negative resistance", who));
    } else {
      if (ld.conductance < 0 || ld.capacitance < 0)
        throw CaseError(fmt::format("{}: negative conductance or capacitance", who));
      node_cap[ld.bus] += ld.capacitance;
    }
  }
  for (const auto& [id, cap] : node_cap)
    if (!(cap > 0))
      throw CaseError(fmt::format("bus {}: total node capacitance must be > 0", id));

  std::set<int> source_buses;
  std::set<int> gen_ids;
  for (const auto& g : generators) {
    const std::string who = fmt::format("generator {}", g.id);
    if (!gen_ids.insert(g.id).second) throw CaseError(fmt::format("duplicate {}", who));
    need_bus(g.bus, who);
    if (!source_buses.insert(g.bus).second)
      throw CaseError(fmt::format("{}: bus {} already hosts a source", who, g.bus));
    if (!(g.h > 0)) throw CaseError(fmt::format("{}: H must be > 0", who));
    if (g.d < 0) throw CaseError(fmt::format("{}: negative damping", who));
    for (double r : {g.ra, g.rfd, g.r1d, g.r1q, g.r2q})
      if (r < 0) throw CaseError(fmt::format("{}: negative winding resistance", who));
    for (double l : {g.lls, g.llfd, g.ll1d, g.ll1q, g.ll2q, g.lmd, g.lmq})
      if (!(l > 0)) throw CaseError(fmt::format("{}: inductances must be > 0", who));
    // The 2x2 subtransient inductance in the stationary frame has
    // eigenvalues lpp_d and lpp_q for every rotor angle; sweep anyway so
    // corrupted derived values are caught.
    for (int i = 0; i < 64; ++i) {
      const double th = 2.0 * kPi * i / 64.0;
      const double m = 0.5 * (g.lpp_d + g.lpp_q), dlt = 0.5 * (g.lpp_d - g.lpp_q);
      const double a11 = m + dlt * std::cos(2 * th), a22 = m - dlt * std::cos(2 * th);
      const double a12 = dlt * std::sin(2 * th);
      if (!(a11 * a22 - a12 * a12 > 1e-14))
        throw CaseError(fmt::format("{}: subtransient inductance singular", who));
    }
    if (g.has_governor && !(g.gov.r > 0 && g.gov.t1 > 0 && g.gov.t3 > 0))
      throw CaseError(fmt::format("{}: governor R, T1, T3 must be > 0", who));
    if (g.has_exciter && !(g.exc.tb > 0 && g.exc.te > 0))
      throw CaseError(fmt::format("{}: exciter TB, TE must be > 0", who));
  }
  std::set<int> ibr_ids;
  for (const auto& v : ibrs) {
    const std::string who = fmt::format("ibr {}", v.id);
    if (!ibr_ids.insert(v.id).second) throw CaseError(fmt::format("duplicate {}", who));
    need_bus(v.bus, who);
    if (!source_buses.insert(v.bus).second)
      throw CaseError(fmt::format("{}: bus {} already hosts a source", who, v.bus));
    if (!(v.lf > 0)) throw CaseError(fmt::format("{}: filter inductance must be > 0", who));
    if (v.rf < 0) throw CaseError(fmt::format("{}: negative filter resistance", who));
    for (double k : {v.kp_pll, v.ki_pll, v.kp_p, v.ki_p, v.kp_q, v.ki_q, v.kp_c, v.ki_c, v.kf,
                     v.kv})
      if (k < 0) throw CaseError(fmt::format("{}: negative controller gain", who));
    if (!(v.ki_p > 0 && v.ki_q > 0 && v.ki_c > 0))
      throw CaseError(fmt::format("{}: integral gains must be > 0", who));
  }
  if (reference.kind == ReferenceSelection::Kind::generator) {
    if (!gen_ids.count(reference.id) && !(generators.empty() && ibrs.empty()))
      throw CaseError(fmt::format("reference generator {} not found", reference.id));
  } else if (!ibr_ids.count(reference.id)) {
    throw CaseError(fmt::format("reference ibr {} not found", reference.id));
  }

  // Connectivity over buses and lines.
  std::map<int, std::vector<int>> adj;
  for (const auto& l : lines) {
    adj[l.from_bus].push_back(l.to_bus);
    adj[l.to_bus].push_back(l.from_bus);
  }
  std::set<int> seen{buses.front().id};
  std::vector<int> stack{buses.front().id};
  while (!stack.empty()) {
    int b = stack.back();
    stack.pop_back();
    for (int n : adj[b])
      if (seen.insert(n).second) stack.push_back(n);
  }
  for (const auto& b : buses)
    if (!seen.count(b.id))
      throw CaseError(fmt::format("disconnected network: bus {} unreachable", b.id));
}

std::size_t StateLayout::index_of(const std::string& name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) throw std::out_of_range("unknown state " + name);
  return it->second;
}

void StateLayout::add(StateInfo info) {
  if (!lookup_.emplace(info.name, states.size()).second)
    throw CaseError("duplicate state name " + info.name);
  states.push_back(std::move(info));
}

std::string bus_state_prefix(const Bus& b) { return fmt::format("bus{}", b.id); }

std::string line_state_prefix(const PowerSystemCase& c, const Line& l) {
  if (!l.name.empty()) return l.name;
  const int lo = std::min(l.from_bus, l.to_bus), hi = std::max(l.from_bus, l.to_bus);
  int parallel = 0;
  for (const auto& o : c.lines)
    if (std::min(o.from_bus, o.to_bus) == lo && std::max(o.from_bus, o.to_bus) == hi) ++parallel;
  if (parallel > 1) return fmt::format("line_{}_{}_{}", lo, hi, l.id);
  return fmt::format("line_{}_{}", lo, hi);
}

StateLayout build_layout(const PowerSystemCase& c) {
  StateLayout lay;
  static const char* gen_names[kGeneratorStates] = {"delta",  "dw",     "psi_fd", "psi_1d",
                                                    "psi_1q", "psi_2q", "valve",  "gov_lead",
                                                    "exc_lead", "efd"};
  static const char* gen_family[kGeneratorStates] = {"angle",  "speed",    "flux",    "flux",
                                                     "flux",   "flux",     "governor", "governor",
                                                     "exciter", "exciter"};
  static const char* ibr_names[kIbrStates] = {"delta_pll", "pll_int", "xi_p",
                                              "xi_q",      "xi_id",   "xi_iq"};
  for (const auto& g : c.generators) {
    lay.generator_offset.push_back(lay.size());
    for (std::size_t i = 0; i < kGeneratorStates; ++i)
      lay.add({g.name + "." + gen_names[i], g.name, gen_family[i], Timescale::slow});
  }
  for (const auto& v : c.ibrs) {
    lay.ibr_offset.push_back(lay.size());
    for (std::size_t i = 0; i < kIbrStates; ++i)
      lay.add({v.name + "." + ibr_names[i], v.name, i < 2 ? "pll" : "ibr_control",
               Timescale::slow});
  }
  lay.slow_size = lay.size();
  static const char phase[3] = {'a', 'b', 'c'};
  for (const auto& b : c.buses) {
    const auto p = bus_state_prefix(b);
    for (char ph : phase)
      lay.add({fmt::format("{}.v_{}", p, ph), p, "bus_voltage", Timescale::fast});
  }
  for (const auto& l : c.lines) {
    const auto p = line_state_prefix(c, l);
    for (char ph : phase)
      lay.add({fmt::format("{}.w_{}", p, ph), p, "branch_current", Timescale::fast});
    lay.edge_load.push_back(-1);
  }
  for (const auto& ld : c.loads) {
    if (ld.kind != LoadKind::rl) continue;
    const auto p = ld.name.empty() ? fmt::format("load{}", ld.id) : ld.name;
    for (char ph : phase)
      lay.add({fmt::format("{}.w_{}", p, ph), p, "branch_current", Timescale::fast});
    lay.edge_load.push_back(ld.id);
  }
  for (std::size_t k = 0; k < c.source_count(); ++k) {
    const auto p = c.source_name(k);
    for (char ph : phase)
      lay.add({fmt::format("{}.i_{}", p, ph), p, "source_current", Timescale::fast});
  }
  lay.n_bus = c.buses.size();
  lay.n_line = c.lines.size();
  lay.n_edge = lay.edge_load.size();
  lay.n_source = c.source_count();
  return lay;
}

DeviceStatus default_device_status(const PowerSystemCase& c) {
  DeviceStatus s;
  s.source_active.assign(c.source_count(), true);
  return s;
}

std::size_t reference_source(const PowerSystemCase& c) {
  if (c.reference.kind == ReferenceSelection::Kind::generator) {
    if (c.generators.empty()) return 0;
    return c.generator_index(c.reference.id);
  }
  return c.generators.size() + c.ibr_index(c.reference.id);
}

namespace {

using frames::clarke;

frames::AlphaBeta0 clarke_at(const Vector& x, std::size_t off) {
  return clarke(x[off], x[off + 1], x[off + 2]);
}

// Freeze a limited state that sits on a bound and is pushed outward.
double limit_rate(double value, double rate, double lo, double hi) {
  if (value >= hi && rate > 0) return 0.0;
  if (value <= lo && rate < 0) return 0.0;
  return rate;
}

struct GenEval {
  GeneratorSnapshot snap;
  double c, s;
  frames::AlphaBeta0 i, v;
  double psi_ad_pp, psi_aq_pp;
  double ifd, i1d, i1q, i2q;
  double psi_ad, psi_aq;
  double efd_field;
};

GenEval eval_generator(const PowerSystemCase& c, const StateLayout& lay, const Vector& x, double t,
                       std::size_t g) {
  const auto& m = c.generators[g];
  const std::size_t o = lay.generator_offset[g];
  GenEval e{};
  e.snap.theta = c.omega0 * t + x[o + gen_state::delta];
  e.snap.omega = c.omega0 + x[o + gen_state::dw];
  e.c = std::cos(e.snap.theta);
  e.s = std::sin(e.snap.theta);
  e.i = clarke_at(x, lay.source_offset(g));
  e.v = clarke_at(x, lay.v_offset() + 3 * c.bus_index(m.bus));
  frames::to_dq(e.i.alpha, e.i.beta, e.c, e.s, e.snap.id, e.snap.iq);
  frames::to_dq(e.v.alpha, e.v.beta, e.c, e.s, e.snap.vd, e.snap.vq);
  const double pfd = x[o + gen_state::psi_fd], p1d = x[o + gen_state::psi_1d];
  const double p1q = x[o + gen_state::psi_1q], p2q = x[o + gen_state::psi_2q];
  e.psi_ad_pp = m.lpp_ad * (pfd / m.llfd + p1d / m.ll1d);
  e.psi_aq_pp = m.lpp_aq * (p1q / m.ll1q + p2q / m.ll2q);
  e.psi_ad = e.psi_ad_pp - m.lpp_ad * e.snap.id;
  e.psi_aq = e.psi_aq_pp - m.lpp_aq * e.snap.iq;
  e.snap.psi_d = e.psi_ad - m.lls * e.snap.id;
  e.snap.psi_q = e.psi_aq - m.lls * e.snap.iq;
  e.ifd = (pfd - e.psi_ad) / m.llfd;
  e.i1d = (p1d - e.psi_ad) / m.ll1d;
  e.i1q = (p1q - e.psi_aq) / m.ll1q;
  e.i2q = (p2q - e.psi_aq) / m.ll2q;
  e.snap.pe = e.snap.omega * (e.snap.psi_d * e.snap.iq - e.snap.psi_q * e.snap.id);
  const double dw_pu = x[o + gen_state::dw] / c.omega0;
  if (m.has_governor) {
    const double xv = x[o + gen_state::valve], x2 = x[o + gen_state::gov_lead];
    e.snap.pm = x2 + (m.gov.t2 / m.gov.t3) * (xv - x2) - m.gov.dt * dw_pu;
  } else {
    e.snap.pm = m.gov.p_ref;
  }
  e.snap.vt = std::sqrt(e.v.alpha * e.v.alpha + e.v.beta * e.v.beta);
  e.efd_field = m.efd_scale * x[o + gen_state::efd];
  return e;
}

void generator_rhs(const PowerSystemCase& c, const StateLayout& lay, const Vector& x, double t,
                   const DeviceStatus& st, std::size_t g, Vector& dx) {
  const auto& m = c.generators[g];
  const std::size_t o = lay.generator_offset[g];
  const std::size_t io = lay.source_offset(g);
  if (!st.source_active[g]) {
    dx.segment(o, kGeneratorStates).setZero();
    dx.segment(io, 3).setZero();
    return;
  }
  const GenEval e = eval_generator(c, lay, x, t, g);
  const double dw = x[o + gen_state::dw];
  const double d_total = m.d + st.extra_damping;

  dx[o + gen_state::delta] = dw;
  dx[o + gen_state::dw] = c.omega0 / (2.0 * m.h) * (e.snap.pm - e.snap.pe - d_total * dw / c.omega0);
  const double dpfd = e.efd_field - m.rfd * e.ifd;
  const double dp1d = -m.r1d * e.i1d;
  const double dp1q = -m.r1q * e.i1q;
  const double dp2q = -m.r2q * e.i2q;
  dx[o + gen_state::psi_fd] = dpfd;
  dx[o + gen_state::psi_1d] = dp1d;
  dx[o + gen_state::psi_1q] = dp1q;
  dx[o + gen_state::psi_2q] = dp2q;

  if (m.has_governor) {
    const auto& gv = m.gov;
    const double xv = x[o + gen_state::valve], x2 = x[o + gen_state::gov_lead];
    const double raw = (gv.p_ref - dw / c.omega0 / gv.r - xv) / gv.t1;
    dx[o + gen_state::valve] = limit_rate(xv, raw, gv.vmin, gv.vmax);
    dx[o + gen_state::gov_lead] = (xv - x2) / gv.t3;
  } else {
    dx[o + gen_state::valve] = 0.0;
    dx[o + gen_state::gov_lead] = 0.0;
  }
  if (m.has_exciter) {
    const auto& ex = m.exc;
    const double u = ex.v_ref - e.snap.vt;
    const double xe = x[o + gen_state::exc_lead], efd = x[o + gen_state::efd];
    dx[o + gen_state::exc_lead] = (u - xe) / ex.tb;
    const double y = xe + (ex.ta / ex.tb) * (u - xe);
    dx[o + gen_state::efd] = limit_rate(efd, (ex.k * y - efd) / ex.te, ex.emin, ex.emax);
  } else {
    dx[o + gen_state::exc_lead] = 0.0;
    dx[o + gen_state::efd] = 0.0;
  }

  // Stator: d/dt psi_ab0 = v + ra*i with psi_ab = -L''(theta) i + psi''_ab.
  const double w = e.snap.omega;
  const double dpsi_ad_pp = m.lpp_ad * (dpfd / m.llfd + dp1d / m.ll1d);
  const double dpsi_aq_pp = m.lpp_aq * (dp1q / m.ll1q + dp2q / m.ll2q);
  const double vpp_d = dpsi_ad_pp - w * e.psi_aq_pp;
  const double vpp_q = dpsi_aq_pp + w * e.psi_ad_pp;
  double vpp_a, vpp_b;
  frames::from_dq(vpp_d, vpp_q, e.c, e.s, vpp_a, vpp_b);

  const double mean = 0.5 * (m.lpp_d + m.lpp_q), half = 0.5 * (m.lpp_d - m.lpp_q);
  const double c2 = e.c * e.c - e.s * e.s, s2 = 2.0 * e.s * e.c;
  const double l11 = mean + half * c2, l22 = mean - half * c2, l12 = half * s2;
  // dL''/dt = w * (lpp_d - lpp_q) * [[-sin2, cos2], [cos2, sin2]]
  const double k = w * 2.0 * half;
  const double dl11 = -k * s2, dl12 = k * c2, dl22 = k * s2;
  const double ra = m.ra;
  const double rhs_a = vpp_a - (dl11 * e.i.alpha + dl12 * e.i.beta) - e.v.alpha - ra * e.i.alpha;
  const double rhs_b = vpp_b - (dl12 * e.i.alpha + dl22 * e.i.beta) - e.v.beta - ra * e.i.beta;
  const double det = l11 * l22 - l12 * l12;
  if (!(std::abs(det) > 1e-300))
    throw NumericalError(fmt::format("{}: singular subtransient inductance", m.name), t);
  const double dia = (l22 * rhs_a - l12 * rhs_b) / det;
  const double dib = (-l12 * rhs_a + l11 * rhs_b) / det;
  const double di0 = -(e.v.zero + ra * e.i.zero) / m.lls;
  double out[3];
  frames::inverse_clarke(dia, dib, di0, out);
  dx[io] = out[0];
  dx[io + 1] = out[1];
  dx[io + 2] = out[2];
}

struct IbrEval {
  IbrSnapshot snap;
  double c, s;
  frames::AlphaBeta0 i, v;
  double p_star, q_star;
};

IbrEval eval_ibr(const PowerSystemCase& c, const StateLayout& lay, const Vector& x, double t,
                 std::size_t k) {
  const auto& d = c.ibrs[k];
  const std::size_t o = lay.ibr_offset[k];
  const std::size_t src = c.generators.size() + k;
  IbrEval e{};
  e.snap.theta = c.omega0 * t + x[o + ibr_state::delta];
  e.c = std::cos(e.snap.theta);
  e.s = std::sin(e.snap.theta);
  e.i = clarke_at(x, lay.source_offset(src));
  e.v = clarke_at(x, lay.v_offset() + 3 * c.bus_index(d.bus));
  frames::to_dq(e.i.alpha, e.i.beta, e.c, e.s, e.snap.id, e.snap.iq);
  frames::to_dq(e.v.alpha, e.v.beta, e.c, e.s, e.snap.vd, e.snap.vq);
  e.snap.omega = c.omega0 + d.kp_pll * e.snap.vq + d.ki_pll * x[o + ibr_state::phi];
  e.snap.p = e.snap.vd * e.snap.id + e.snap.vq * e.snap.iq;
  e.snap.q = e.snap.vq * e.snap.id - e.snap.vd * e.snap.iq;
  e.p_star = d.p_ref - d.kf * (e.snap.omega - c.omega0) / c.omega0;
  e.q_star = d.q_ref + d.kv * (d.v_ref - e.snap.vd);
  e.snap.id_ref = d.kp_p * (e.p_star - e.snap.p) + d.ki_p * x[o + ibr_state::xi_p];
  e.snap.iq_ref = -(d.kp_q * (e.q_star - e.snap.q) + d.ki_q * x[o + ibr_state::xi_q]);
  return e;
}

void ibr_rhs(const PowerSystemCase& c, const StateLayout& lay, const Vector& x, double t,
             const DeviceStatus& st, std::size_t k, Vector& dx) {
  const auto& d = c.ibrs[k];
  const std::size_t o = lay.ibr_offset[k];
  const std::size_t src = c.generators.size() + k;
  const std::size_t io = lay.source_offset(src);
  if (!st.source_active[src]) {
    dx.segment(o, kIbrStates).setZero();
    dx.segment(io, 3).setZero();
    return;
  }
  const IbrEval e = eval_ibr(c, lay, x, t, k);
  dx[o + ibr_state::delta] = e.snap.omega - c.omega0;
  dx[o + ibr_state::phi] = e.snap.vq;
  dx[o + ibr_state::xi_p] = e.p_star - e.snap.p;
  dx[o + ibr_state::xi_q] = e.q_star - e.snap.q;
  const double ed = e.snap.id_ref - e.snap.id, eq = e.snap.iq_ref - e.snap.iq;
  dx[o + ibr_state::xi_d] = ed;
  dx[o + ibr_state::xi_qc] = eq;
  const double w = e.snap.omega;
  const double vcd = e.snap.vd + d.kp_c * ed + d.ki_c * x[o + ibr_state::xi_d] - w * d.lf * e.snap.iq;
  const double vcq = e.snap.vq + d.kp_c * eq + d.ki_c * x[o + ibr_state::xi_qc] + w * d.lf * e.snap.id;
  double vca, vcb;
  frames::from_dq(vcd, vcq, e.c, e.s, vca, vcb);
  const double dia = (vca - e.v.alpha - d.rf * e.i.alpha) / d.lf;
  const double dib = (vcb - e.v.beta - d.rf * e.i.beta) / d.lf;
  const double di0 = -d.rf * e.i.zero / d.lf;
  double out[3];
  frames::inverse_clarke(dia, dib, di0, out);
  dx[io] = out[0];
  dx[io + 1] = out[1];
  dx[io + 2] = out[2];
}

}  // namespace

void device_rhs(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                const DeviceStatus& status, Vector& dx) {
  for (std::size_t g = 0; g < c.generators.size(); ++g) generator_rhs(c, layout, x, t, status, g, dx);
  for (std::size_t k = 0; k < c.ibrs.size(); ++k) ibr_rhs(c, layout, x, t, status, k, dx);
}

void clamp_states(const PowerSystemCase& c, const StateLayout& layout, const DeviceStatus& status,
                  Vector& x) {
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto& m = c.generators[g];
    const std::size_t o = layout.generator_offset[g];
    if (m.has_governor)
      x[o + gen_state::valve] = std::clamp(x[o + gen_state::valve], m.gov.vmin, m.gov.vmax);
    if (m.has_exciter)
      x[o + gen_state::efd] = std::clamp(x[o + gen_state::efd], m.exc.emin, m.exc.emax);
  }
  for (std::size_t k = 0; k < c.source_count(); ++k)
    if (!status.source_active[k]) x.segment(layout.source_offset(k), 3).setZero();
}

double source_angle(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                    std::size_t k) {
  if (k < c.generators.size()) return c.omega0 * t + x[layout.generator_offset[k] + gen_state::delta];
  return c.omega0 * t + x[layout.ibr_offset[k - c.generators.size()] + ibr_state::delta];
}

double source_speed(const PowerSystemCase& c, const StateLayout& layout, const Vector& x, double t,
                    std::size_t k) {
  if (k < c.generators.size()) return c.omega0 + x[layout.generator_offset[k] + gen_state::dw];
  return eval_ibr(c, layout, x, t, k - c.generators.size()).snap.omega;
}

GeneratorSnapshot generator_snapshot(const PowerSystemCase& c, const StateLayout& layout,
                                     const Vector& x, double t, std::size_t g) {
  return eval_generator(c, layout, x, t, g).snap;
}

IbrSnapshot ibr_snapshot(const PowerSystemCase& c, const StateLayout& layout, const Vector& x,
                         double t, std::size_t k) {
  return eval_ibr(c, layout, x, t, k).snap;
}

}  // namespace hmm
