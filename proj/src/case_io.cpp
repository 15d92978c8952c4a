#include "hmm/case_io.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace hmm {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError(fmt::format("cannot open {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double num(const YAML::Node& n, const char* key, double fallback = kNaN) {
  const YAML::Node v = n[key];
  if (!v) return fallback;
  try {
    return v.as<double>();
  } catch (const YAML::Exception&) {
    throw CaseError(fmt::format("key '{}': expected a number", key));
  }
}

double need(const YAML::Node& n, const char* key, const std::string& who) {
  const double v = num(n, key);
  if (std::isnan(v)) throw CaseError(fmt::format("{}: missing '{}'", who, key));
  return v;
}

int need_int(const YAML::Node& n, const char* key, const std::string& who) {
  const YAML::Node v = n[key];
  if (!v) throw CaseError(fmt::format("{}: missing '{}'", who, key));
  try {
    return v.as<int>();
  } catch (const YAML::Exception&) {
    throw CaseError(fmt::format("{}: key '{}' must be an integer", who, key));
  }
}

bool has(const YAML::Node& n, const char* key) { return static_cast<bool>(n[key]); }

std::string str(const YAML::Node& n, const char* key, const std::string& fallback = {}) {
  const YAML::Node v = n[key];
  return v ? v.as<std::string>() : fallback;
}

YAML::Node parse_yaml(const std::string& doc) {
  try {
    return YAML::Load(doc);
  } catch (const YAML::Exception& e) {
    throw CaseError(fmt::format("parse error: {}", e.what()));
  }
}

struct MachineEquivalent {
  double ra, xl, xmd, xmq, xlfd, xl1d, xl1q, xl2q, rfd, r1d, r1q, r2q;
};

// Standard conversion from operational (transient/subtransient) data to
// equivalent-circuit parameters, machine base, reactances in pu.
MachineEquivalent from_operational(const YAML::Node& n, double wb, const std::string& who) {
  MachineEquivalent e{};
  e.ra = num(n, "ra", 0.0);
  e.xl = need(n, "xl", who);
  const double xd = need(n, "xd", who), xq = need(n, "xq", who);
  const double xdp = need(n, "xdp", who), xdpp = need(n, "xdpp", who);
  const double xqpp = need(n, "xqpp", who);
  const double td0p = need(n, "td0p", who), td0pp = need(n, "td0pp", who);
  const double tq0pp = need(n, "tq0pp", who);
  e.xmd = xd - e.xl;
  e.xmq = xq - e.xl;
  e.xlfd = e.xmd * (xdp - e.xl) / (e.xmd - xdp + e.xl);
  e.rfd = (e.xmd + e.xlfd) / (wb * td0p);
  const double a = xdpp - e.xl;
  e.xl1d = e.xmd * e.xlfd * a / (e.xmd * e.xlfd - a * (e.xmd + e.xlfd));
  e.r1d = (e.xl1d + e.xmd * e.xlfd / (e.xmd + e.xlfd)) / (wb * td0pp);
  // A round-rotor q axis has a transient winding; without xqp both q
  // dampers are derived from the subtransient data with split leakage.
  const double xqp = num(n, "xqp", kNaN), tq0p = num(n, "tq0p", kNaN);
  if (!std::isnan(xqp) && !std::isnan(tq0p)) {
    e.xl1q = e.xmq * (xqp - e.xl) / (e.xmq - xqp + e.xl);
    e.r1q = (e.xmq + e.xl1q) / (wb * tq0p);
  } else {
    e.xl1q = 10.0 * e.xmq;
    e.r1q = (e.xmq + e.xl1q) / (wb * 10.0 * tq0pp);
  }
  const double b = xqpp - e.xl;
  e.xl2q = e.xmq * e.xl1q * b / (e.xmq * e.xl1q - b * (e.xmq + e.xl1q));
  e.r2q = (e.xl2q + e.xmq * e.xl1q / (e.xmq + e.xl1q)) / (wb * tq0pp);
  for (double v : {e.xlfd, e.xl1d, e.xl1q, e.xl2q, e.rfd, e.r1d, e.r1q, e.r2q})
    if (!(v > 0) || !std::isfinite(v))
      throw CaseError(fmt::format("{}: operational data gives a non-physical equivalent circuit", who));
  return e;
}

MachineEquivalent from_equivalent(const YAML::Node& n, const std::string& who) {
  MachineEquivalent e{};
  e.ra = num(n, "ra", 0.0);
  e.xl = need(n, "xl", who);
  e.xmd = need(n, "xmd", who);
  e.xmq = need(n, "xmq", who);
  e.xlfd = need(n, "xlfd", who);
  e.xl1d = need(n, "xl1d", who);
  e.xl1q = need(n, "xl1q", who);
  e.xl2q = need(n, "xl2q", who);
  e.rfd = need(n, "rfd", who);
  e.r1d = need(n, "r1d", who);
  e.r1q = need(n, "r1q", who);
  e.r2q = need(n, "r2q", who);
  return e;
}

// Series branch impedance in pu: r and inductance (pu*s).
void branch_impedance(const YAML::Node& n, double zb, double w0, const std::string& who, double& r,
                      double& l) {
  if (has(n, "r_pu") || has(n, "x_pu")) {
    r = num(n, "r_pu", 0.0);
    l = need(n, "x_pu", who) / w0;
  } else {
    r = num(n, "r_ohm", 0.0) / zb;
    if (has(n, "l_h"))
      l = num(n, "l_h") / zb;
    else
      l = need(n, "x_ohm", who) / zb / w0;
  }
}

// Shunt capacitance (pu*s) and conductance (pu) from pu or SI keys.
void shunt_values(const YAML::Node& n, double zb, double w0, double& cap, double& cond) {
  cap = 0.0;
  cond = 0.0;
  if (has(n, "b_pu")) cap += num(n, "b_pu") / w0;
  if (has(n, "capacitance_f")) cap += num(n, "capacitance_f") * zb;
  if (has(n, "b_s")) cap += num(n, "b_s") * zb / w0;
  if (has(n, "g_pu")) cond += num(n, "g_pu");
  if (has(n, "conductance_s")) cond += num(n, "conductance_s") * zb;
}

}  // namespace

PowerSystemCase parse_case(const std::string& document) {
  const YAML::Node root = parse_yaml(document);
  if (!root || !root.IsMap()) throw CaseError("parse error: case document must be a mapping");
  PowerSystemCase c;
  const YAML::Node sys = root["system"];
  if (sys) {
    c.name = str(sys, "name", "case");
    c.frequency_hz = num(sys, "frequency_hz", 60.0);
    c.base_mva = num(sys, "base_mva", 100.0);
    c.default_fault_conductance_siemens = num(sys, "fault_conductance_siemens", 1.0e4);
  }
  c.omega0 = 2.0 * kPi * c.frequency_hz;
  const double w0 = c.omega0;

  const YAML::Node buses = root["buses"];
  if (buses)
    for (const auto& n : buses) {
      Bus b;
      b.id = need_int(n, "id", "bus");
      const std::string who = fmt::format("bus {}", b.id);
      b.nominal_kv = need(n, "kv", who);
      const double zb = b.nominal_kv * b.nominal_kv / c.base_mva;
      shunt_values(n, zb, w0, b.shunt_capacitance, b.shunt_conductance);
      c.buses.push_back(b);
    }
  if (c.buses.empty()) throw CaseError("empty network");
  std::sort(c.buses.begin(), c.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  auto zbase = [&](int bus, const std::string& who) {
    for (const auto& b : c.buses)
      if (b.id == bus) return b.nominal_kv * b.nominal_kv / c.base_mva;
    throw CaseError(fmt::format("{} references unknown bus {}", who, bus));
  };

  if (const YAML::Node lines = root["lines"])
    for (const auto& n : lines) {
      Line l;
      l.id = need_int(n, "id", "line");
      const std::string who = fmt::format("line {}", l.id);
      l.from_bus = need_int(n, "from", who);
      l.to_bus = need_int(n, "to", who);
      l.name = str(n, "name");
      const double zb = zbase(l.from_bus, who);
      zbase(l.to_bus, who);
      branch_impedance(n, zb, w0, who, l.resistance, l.inductance);
      double cond = 0.0;
      shunt_values(n, zb, w0, l.charging, cond);
      c.lines.push_back(l);
    }

  if (const YAML::Node loads = root["loads"])
    for (const auto& n : loads) {
      Load ld;
      ld.id = need_int(n, "id", "load");
      const std::string who = fmt::format("load {}", ld.id);
      ld.bus = need_int(n, "bus", who);
      ld.name = str(n, "name");
      const double zb = zbase(ld.bus, who);
      const std::string type = str(n, "type", "");
      if (has(n, "p_mw")) {
        // Constant-impedance equivalent at 1 pu voltage.
        const double p = num(n, "p_mw") / c.base_mva, q = num(n, "q_mvar", 0.0) / c.base_mva;
        if (q > 0) {
          const double s2 = p * p + q * q;
          ld.kind = LoadKind::rl;
          ld.resistance = p / s2;
          ld.inductance = q / s2 / w0;
        } else {
          ld.kind = LoadKind::rc;
          ld.conductance = p;
          ld.capacitance = -q / w0;
        }
      } else if (type == "rl") {
        ld.kind = LoadKind::rl;
        branch_impedance(n, zb, w0, who, ld.resistance, ld.inductance);
      } else if (type == "rc") {
        ld.kind = LoadKind::rc;
        shunt_values(n, zb, w0, ld.capacitance, ld.conductance);
      } else {
        throw CaseError(fmt::format("{}: give p_mw/q_mvar or type rl/rc", who));
      }
      c.loads.push_back(ld);
    }

  if (const YAML::Node gens = root["generators"])
    for (const auto& n : gens) {
      SynchronousGenerator g;
      g.id = need_int(n, "id", "generator");
      const std::string who = fmt::format("generator {}", g.id);
      g.name = str(n, "name", fmt::format("G{}", g.id));
      g.bus = need_int(n, "bus", who);
      zbase(g.bus, who);
      g.mva = num(n, "mva", c.base_mva);
      const double to_sys = c.base_mva / g.mva;  // machine-base impedance -> system base
      g.h = need(n, "h", who) / to_sys;
      g.d = num(n, "d", 0.0) / to_sys;
      g.p_set = num(n, "p_mw", 0.0) / c.base_mva;
      g.v_set = num(n, "v_pu", 1.0);
      g.slack = n["slack"] && n["slack"].as<bool>();
      MachineEquivalent e{};
      if (n["operational"])
        e = from_operational(n["operational"], w0, who);
      else if (n["equivalent"])
        e = from_equivalent(n["equivalent"], who);
      else
        throw CaseError(fmt::format("{}: missing 'operational' or 'equivalent' machine data", who));
      auto L = [&](double x) { return x * to_sys / w0; };
      g.ra = e.ra * to_sys;
      g.lls = L(e.xl);
      g.lmd = L(e.xmd);
      g.lmq = L(e.xmq);
      g.llfd = L(e.xlfd);
      g.ll1d = L(e.xl1d);
      g.ll1q = L(e.xl1q);
      g.ll2q = L(e.xl2q);
      g.rfd = e.rfd * to_sys;
      g.r1d = e.r1d * to_sys;
      g.r1q = e.r1q * to_sys;
      g.r2q = e.r2q * to_sys;
      if (const YAML::Node gv = n["governor"]) {
        g.gov.r = num(gv, "r", 0.05) * to_sys;
        g.gov.t1 = num(gv, "t1", 0.5);
        g.gov.t2 = num(gv, "t2", 1.0);
        g.gov.t3 = num(gv, "t3", 2.0);
        g.gov.dt = num(gv, "dt", 0.0) / to_sys;
        g.gov.vmin = num(gv, "vmin", 0.0) / to_sys;
        g.gov.vmax = num(gv, "vmax", 1.2) / to_sys;
      } else {
        g.has_governor = false;
      }
      if (const YAML::Node ex = n["exciter"]) {
        g.exc.ta = num(ex, "ta", 1.0);
        g.exc.tb = num(ex, "tb", 10.0);
        g.exc.k = num(ex, "k", 100.0);
        g.exc.te = num(ex, "te", 0.05);
        g.exc.emin = num(ex, "emin", -10.0);
        g.exc.emax = num(ex, "emax", 10.0);
      } else {
        g.has_exciter = false;
      }
      g.finalize(w0);
      c.generators.push_back(g);
    }

  if (const YAML::Node ibrs = root["ibrs"])
    for (const auto& n : ibrs) {
      GridFollowingIbr d;
      d.id = need_int(n, "id", "ibr");
      const std::string who = fmt::format("ibr {}", d.id);
      d.name = str(n, "name", fmt::format("IBR{}", d.id));
      d.bus = need_int(n, "bus", who);
      zbase(d.bus, who);
      d.mva = num(n, "mva", c.base_mva);
      const double to_sys = c.base_mva / d.mva;
      d.p_ref = num(n, "p_mw", 0.0) / c.base_mva;
      d.q_ref = num(n, "q_mvar", 0.0) / c.base_mva;
      d.v_set = num(n, "v_pu", -1.0);
      const YAML::Node f = n["filter"];
      if (!f) throw CaseError(fmt::format("{}: missing 'filter'", who));
      d.rf = num(f, "r_pu", 0.0) * to_sys;
      d.lf = need(f, "x_pu", who) * to_sys / w0;
      if (const YAML::Node p = n["pll"]) {
        d.kp_pll = num(p, "kp", d.kp_pll);
        d.ki_pll = num(p, "ki", d.ki_pll);
      }
      if (const YAML::Node p = n["power"]) {
        d.kp_p = num(p, "kp_p", num(p, "kp", d.kp_p));
        d.ki_p = num(p, "ki_p", num(p, "ki", d.ki_p));
        d.kp_q = num(p, "kp_q", num(p, "kp", d.kp_q));
        d.ki_q = num(p, "ki_q", num(p, "ki", d.ki_q));
      }
      const YAML::Node cur = n["current"];
      if (cur && has(cur, "bandwidth_rad_s")) {
        const double wc = num(cur, "bandwidth_rad_s");
        d.kp_c = d.lf * wc;
        d.ki_c = d.rf * wc;
      } else if (cur) {
        d.kp_c = need(cur, "kp", who) * to_sys;
        d.ki_c = need(cur, "ki", who) * to_sys;
      } else {
        d.kp_c = d.lf * 1000.0;
        d.ki_c = d.rf * 1000.0;
      }
      if (const YAML::Node dr = n["droop"]) {
        d.kf = num(dr, "kf", 0.0) / to_sys;
        d.kv = num(dr, "kv", 0.0) / to_sys;
      }
      c.ibrs.push_back(d);
    }

  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::sort(c.lines.begin(), c.lines.end(), by_id);
  std::sort(c.loads.begin(), c.loads.end(), by_id);
  std::sort(c.generators.begin(), c.generators.end(), by_id);
  std::sort(c.ibrs.begin(), c.ibrs.end(), by_id);

  const YAML::Node ref = sys ? sys["reference"] : YAML::Node();
  if (ref && ref["ibr"]) {
    c.reference = {ReferenceSelection::Kind::ibr, ref["ibr"].as<int>()};
  } else if (ref && ref["generator"]) {
    c.reference = {ReferenceSelection::Kind::generator, ref["generator"].as<int>()};
  } else if (!c.generators.empty()) {
    c.reference = {ReferenceSelection::Kind::generator, c.generators.front().id};
  } else if (!c.ibrs.empty()) {
    c.reference = {ReferenceSelection::Kind::ibr, c.ibrs.front().id};
  }
  c.validate();
  return c;
}

PowerSystemCase load_case(const std::string& path) { return parse_case(read_text_file(path)); }

EventSchedule parse_schedule(const std::string& document, const PowerSystemCase& c) {
  const YAML::Node root = parse_yaml(document);
  EventSchedule s;
  s.horizon = num(root, "horizon_s", 0.0);
  const YAML::Node events = root["events"];
  if (!events) return s;
  for (const auto& n : events) {
    ScheduledEvent e;
    e.time = need(n, "time", "event");
    const std::string type = str(n, "type");
    const std::string who = fmt::format("event '{}' at t={}", type, e.time);
    TopologyEvent& ev = e.event;
    double clear_after = kNaN;
    if (type == "fault") {
      ev.kind = EventKind::apply_fault;
      ev.target = need_int(n, "bus", who);
      const double zb = c.impedance_base(ev.target);
      if (has(n, "g_pu"))
        ev.conductance = num(n, "g_pu");
      else if (has(n, "conductance_s"))
        ev.conductance = num(n, "conductance_s") * zb;
      if (has(n, "duration_cycles")) clear_after = num(n, "duration_cycles") / c.frequency_hz;
      if (has(n, "duration_s")) clear_after = num(n, "duration_s");
    } else if (type == "clear_fault") {
      ev.kind = EventKind::clear_fault;
      ev.target = need_int(n, "bus", who);
    } else if (type == "trip_generator") {
      ev.kind = EventKind::trip_generator;
      ev.target = need_int(n, "generator", who);
    } else if (type == "trip_ibr") {
      ev.kind = EventKind::trip_ibr;
      ev.target = need_int(n, "ibr", who);
    } else if (type == "trip_line") {
      ev.kind = EventKind::trip_line;
      ev.target = need_int(n, "line", who);
    } else if (type == "disconnect_load") {
      ev.kind = EventKind::disconnect_load;
      ev.target = need_int(n, "load", who);
    } else if (type == "reconnect_load") {
      ev.kind = EventKind::reconnect_load;
      ev.target = need_int(n, "load", who);
    } else if (type == "injection") {
      ev.kind = EventKind::start_injection;
      ev.target = need_int(n, "bus", who);
      ev.amplitude = need(n, "amplitude_pu", who);
      ev.frequency_hz = need(n, "frequency_hz", who);
      ev.phase = num(n, "phase_deg", 0.0) * kPi / 180.0;
      ev.three_phase = n["three_phase"] && n["three_phase"].as<bool>();
      if (has(n, "duration_s")) clear_after = num(n, "duration_s");
    } else if (type == "stop_injection") {
      ev.kind = EventKind::stop_injection;
      ev.target = need_int(n, "bus", who);
    } else {
      throw CaseError(fmt::format("unknown event type '{}'", type));
    }
    s.events.push_back(e);
    if (!std::isnan(clear_after)) {
      ScheduledEvent off;
      off.time = e.time + clear_after;
      off.event.kind =
          ev.kind == EventKind::apply_fault ? EventKind::clear_fault : EventKind::stop_injection;
      off.event.target = ev.target;
      s.events.push_back(off);
    }
  }
  // Validate element references against the case.
  for (const auto& e : s.events) {
    const auto& ev = e.event;
    switch (ev.kind) {
      case EventKind::trip_generator: c.generator_index(ev.target); break;
      case EventKind::trip_ibr: c.ibr_index(ev.target); break;
      case EventKind::trip_line: c.line_index(ev.target); break;
      case EventKind::disconnect_load:
      case EventKind::reconnect_load: c.load_index(ev.target); break;
      default: c.bus_index(ev.target); break;
    }
  }
  s.normalize();
  return s;
}

EventSchedule load_schedule(const std::string& path, const PowerSystemCase& c) {
  return parse_schedule(read_text_file(path), c);
}

void EventSchedule::normalize() {
  std::stable_sort(events.begin(), events.end(),
                   [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.time < b.time; });
  std::set<int> faults, loads_off;
  std::map<int, int> injections;  // active injections per bus
  for (const auto& e : events) {
    if (!(e.time >= 0) || !std::isfinite(e.time))
      throw CaseError(fmt::format("event time {} must be finite and >= 0", e.time));
    const int id = e.event.target;
    switch (e.event.kind) {
      case EventKind::apply_fault:
        if (!faults.insert(id).second)
          throw CaseError(fmt::format("fault at bus {} applied twice without clearing", id));
        break;
      case EventKind::clear_fault:
        if (!faults.erase(id)) throw CaseError(fmt::format("clear_fault at bus {} without a fault", id));
        break;
      case EventKind::disconnect_load:
        loads_off.insert(id);
        break;
      case EventKind::reconnect_load:
        if (!loads_off.erase(id))
          throw CaseError(fmt::format("reconnect_load {} without a disconnect", id));
        break;
      case EventKind::start_injection:
        ++injections[id];
        break;
      case EventKind::stop_injection:
        if (injections[id]-- <= 0)
          throw CaseError(fmt::format("stop_injection at bus {} without an injection", id));
        break;
      default:
        break;
    }
  }
}

std::string EventSchedule::describe(const ScheduledEvent& e) const {
  return fmt::format("t={:.6f} {} {}", e.time, to_string(e.event.kind), e.event.target);
}

}  // namespace hmm
