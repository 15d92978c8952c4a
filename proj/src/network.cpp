#include "hmm/network.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace hmm {

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::apply_fault: return "fault";
    case EventKind::clear_fault: return "clear_fault";
    case EventKind::trip_generator: return "trip_generator";
    case EventKind::trip_ibr: return "trip_ibr";
    case EventKind::trip_line: return "trip_line";
    case EventKind::disconnect_load: return "disconnect_load";
    case EventKind::reconnect_load: return "reconnect_load";
    case EventKind::start_injection: return "injection";
    case EventKind::stop_injection: return "stop_injection";
  }
  return "unknown";
}

IncidenceMatrix build_incidence(const PowerSystemCase& c) {
  const std::size_t n = c.buses.size(), e = c.lines.size();
  IncidenceMatrix inc;
  inc.b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(e));
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < e; ++k) {
    const auto& l = c.lines[k];
    const int lo = std::min(l.from_bus, l.to_bus), hi = std::max(l.from_bus, l.to_bus);
    const std::size_t f = c.bus_index(lo), t = c.bus_index(hi);
    inc.edges.emplace_back(f, t);
    inc.b(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) = 1.0;
    inc.b(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = -1.0;
    parent[find(f)] = find(t);
    for (int p = 0; p < 3; ++p) {
      trip.emplace_back(static_cast<int>(3 * f + p), static_cast<int>(3 * k + p), 1.0);
      trip.emplace_back(static_cast<int>(3 * t + p), static_cast<int>(3 * k + p), -1.0);
    }
  }
  for (std::size_t i = 1; i < n; ++i)
    if (find(i) != find(0))
      throw CaseError(fmt::format("disconnected network: bus {} unreachable", c.buses[i].id));
  inc.b3.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(3 * e));
  inc.b3.setFromTriplets(trip.begin(), trip.end());
  return inc;
}

NetworkTopology default_topology(const PowerSystemCase& c) {
  NetworkTopology t;
  t.source_active.assign(c.source_count(), true);
  return t;
}

SparseMatrix NetworkMatrices::drift() const {
  const auto n3 = c.size(), e3 = l.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < n3; ++i) trip.emplace_back(i, i, -g[i]);
  for (Eigen::Index i = 0; i < e3; ++i) trip.emplace_back(n3 + i, n3 + i, -r[i]);
  for (Eigen::Index row = 0; row < b3.outerSize(); ++row)
    for (SparseMatrix::InnerIterator it(b3, row); it; ++it) {
      trip.emplace_back(row, n3 + it.col(), -it.value());
      trip.emplace_back(n3 + it.col(), row, it.value());
    }
  SparseMatrix d(n3 + e3, n3 + e3);
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

SparseMatrix NetworkMatrices::b_eq_matrix() const {
  SparseMatrix m(b_eq.size(), b_eq.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < b_eq.size(); ++i) trip.emplace_back(i, i, b_eq[i]);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

namespace {

bool sparse_equal(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  for (Eigen::Index row = 0; row < a.outerSize(); ++row) {
    SparseMatrix::InnerIterator ia(a, row), ib(b, row);
    for (; ia && ib; ++ia, ++ib)
      if (ia.col() != ib.col() || ia.value() != ib.value()) return false;
    if (ia || ib) return false;
  }
  return true;
}

}  // namespace

bool NetworkMatrices::operator==(const NetworkMatrices& o) const {
  return topology == o.topology && c == o.c && g == o.g && l == o.l && r == o.r &&
         b_eq == o.b_eq && edge_active == o.edge_active && source_node == o.source_node &&
         sparse_equal(b3, o.b3) && sparse_equal(a_eq, o.a_eq);
}

NetworkMatrices assemble(const PowerSystemCase& c, const IncidenceMatrix& inc) {
  return assemble(c, inc, default_topology(c));
}

NetworkMatrices assemble(const PowerSystemCase& c, const IncidenceMatrix& inc,
                         const NetworkTopology& topo) {
  const std::size_t n = c.buses.size();
  std::vector<int> rl_loads;
  for (const auto& ld : c.loads)
    if (ld.kind == LoadKind::rl) rl_loads.push_back(ld.id);
  const std::size_t nl = c.lines.size(), e = nl + rl_loads.size();

  NetworkMatrices m;
  m.topology = topo;
  std::vector<double> cap(n, 0.0), cond(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    cap[i] = c.buses[i].shunt_capacitance;
    cond[i] = c.buses[i].shunt_conductance;
  }
  for (std::size_t k = 0; k < nl; ++k) {
    const double half = 0.5 * c.lines[k].charging;
    cap[inc.edges[k].first] += half;
    cap[inc.edges[k].second] += half;
  }
  for (const auto& ld : c.loads) {
    if (ld.kind != LoadKind::rc || topo.disconnected_loads.count(ld.id)) continue;
    const std::size_t b = c.bus_index(ld.bus);
    cap[b] += ld.capacitance;
    cond[b] += ld.conductance;
  }
  for (const auto& [bus, gf] : topo.faults) cond[c.bus_index(bus)] += gf;

  m.c.resize(static_cast<Eigen::Index>(3 * n));
  m.g.resize(static_cast<Eigen::Index>(3 * n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cap[i] > 0))
      throw CaseError(fmt::format("bus {}: zero node capacitance", c.buses[i].id));
    for (int p = 0; p < 3; ++p) {
      m.c[static_cast<Eigen::Index>(3 * i + p)] = cap[i];
      m.g[static_cast<Eigen::Index>(3 * i + p)] = cond[i];
    }
  }
  m.l.resize(static_cast<Eigen::Index>(3 * e));
  m.r.resize(static_cast<Eigen::Index>(3 * e));
  m.edge_active.assign(e, true);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < e; ++k) {
    double lk, rk;
    std::size_t from;
    std::size_t to = n;  // n marks ground
    bool active;
    if (k < nl) {
      const auto& ln = c.lines[k];
      lk = ln.inductance;
      rk = ln.resistance;
      from = inc.edges[k].first;
      to = inc.edges[k].second;
      active = !topo.tripped_lines.count(ln.id);
    } else {
      const auto& ld = c.loads[c.load_index(rl_loads[k - nl])];
      lk = ld.inductance;
      rk = ld.resistance;
      from = c.bus_index(ld.bus);
      active = !topo.disconnected_loads.count(ld.id);
    }
    if (!(lk > 0)) throw CaseError(fmt::format("branch {}: zero inductance", k));
    m.edge_active[k] = active;
    for (int p = 0; p < 3; ++p) {
      m.l[static_cast<Eigen::Index>(3 * k + p)] = lk;
      m.r[static_cast<Eigen::Index>(3 * k + p)] = active ? rk : 0.0;
      if (!active) continue;
      trip.emplace_back(static_cast<int>(3 * from + p), static_cast<int>(3 * k + p), 1.0);
      if (to < n) trip.emplace_back(static_cast<int>(3 * to + p), static_cast<int>(3 * k + p), -1.0);
    }
  }
  m.b3.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(3 * e));
  m.b3.setFromTriplets(trip.begin(), trip.end());

  const Eigen::Index dim = static_cast<Eigen::Index>(3 * (n + e));
  m.b_eq.resize(dim);
  m.b_eq.head(m.c.size()) = m.c.cwiseInverse();
  m.b_eq.tail(m.l.size()) = m.l.cwiseInverse();
  m.a_eq = m.b_eq_matrix() * m.drift();
  m.a_eq.makeCompressed();

  for (std::size_t k = 0; k < c.source_count(); ++k) m.source_node.push_back(c.bus_index(c.source_bus(k)));
  return m;
}

Vector network_rhs(const NetworkMatrices& m, const Vector& psi, const Vector& lambda) {
  Vector out(psi.size());
  network_rhs_into(m, psi, lambda, out);
  return out;
}

void network_rhs_into(const NetworkMatrices& m, const Eigen::Ref<const Vector>& psi,
                      const Eigen::Ref<const Vector>& lambda, Eigen::Ref<Vector> out) {
  out.noalias() = m.a_eq * psi;
  out += m.b_eq.cwiseProduct(lambda);
}

NetworkMatrices apply_topology_event(const PowerSystemCase& c, const IncidenceMatrix& inc,
                                     const NetworkMatrices& m, const TopologyEvent& e) {
  NetworkTopology t = m.topology;
  switch (e.kind) {
    case EventKind::apply_fault: {
      c.bus_index(e.target);
      const double gf = e.conductance >= 0
                            ? e.conductance
                            : c.default_fault_conductance_siemens * c.impedance_base(e.target);
      t.faults[e.target] = gf;
      break;
    }
    case EventKind::clear_fault:
      if (!t.faults.erase(e.target))
        throw CaseError(fmt::format("clear_fault: no fault applied at bus {}", e.target));
      break;
    case EventKind::trip_generator:
      t.source_active.at(c.generator_index(e.target)) = false;
      break;
    case EventKind::trip_ibr:
      t.source_active.at(c.generators.size() + c.ibr_index(e.target)) = false;
      break;
    case EventKind::trip_line:
      c.line_index(e.target);
      t.tripped_lines.insert(e.target);
      break;
    case EventKind::disconnect_load:
      c.load_index(e.target);
      t.disconnected_loads.insert(e.target);
      break;
    case EventKind::reconnect_load:
      c.load_index(e.target);
      if (!t.disconnected_loads.erase(e.target))
        throw CaseError(fmt::format("reconnect_load: load {} is connected", e.target));
      break;
    case EventKind::start_injection:
      c.bus_index(e.target);
      t.injections.push_back(
          {e.target, e.amplitude, 2.0 * kPi * e.frequency_hz, e.phase, e.three_phase});
      break;
    case EventKind::stop_injection: {
      auto it = std::find_if(t.injections.begin(), t.injections.end(),
                             [&](const CurrentInjection& j) { return j.bus == e.target; });
      if (it == t.injections.end())
        throw CaseError(fmt::format("stop_injection: no injection at bus {}", e.target));
      t.injections.erase(it);
      break;
    }
  }
  return assemble(c, inc, t);
}

void injection_vector(const PowerSystemCase& c, const StateLayout& layout,
                      const NetworkMatrices& m, const Vector& x, double t, Eigen::Ref<Vector> lambda) {
  lambda.setZero();
  for (std::size_t k = 0; k < m.source_node.size(); ++k) {
    if (!m.topology.source_active[k]) continue;
    lambda.segment(static_cast<Eigen::Index>(3 * m.source_node[k]), 3) +=
        x.segment(static_cast<Eigen::Index>(layout.source_offset(k)), 3);
  }
  for (const auto& j : m.topology.injections) {
    const auto b = static_cast<Eigen::Index>(3 * c.bus_index(j.bus));
    const double arg = j.omega * t + j.phase;
    lambda[b] += j.amplitude * std::sin(arg);
    if (j.three_phase) {
      lambda[b + 1] += j.amplitude * std::sin(arg - kTwoPiOver3);
      lambda[b + 2] += j.amplitude * std::sin(arg + kTwoPiOver3);
    }
  }
}

void write_matrix_dump(const NetworkMatrices& m, std::ostream& os) {
  auto dump_sparse = [&](const char* name, const SparseMatrix& s) {
    os << name << ' ' << s.rows() << ' ' << s.cols() << '\n';
    for (Eigen::Index row = 0; row < s.outerSize(); ++row)
      for (SparseMatrix::InnerIterator it(s, row); it; ++it)
        os << fmt::format("{} {} {:.17g}\n", row, it.col(), it.value());
  };
  auto dump_diag = [&](const char* name, const Vector& v) {
    os << name << ' ' << v.size() << ' ' << v.size() << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) os << fmt::format("{} {} {:.17g}\n", i, i, v[i]);
  };
  dump_diag("C", m.c);
  dump_diag("G", m.g);
  dump_diag("L", m.l);
  dump_diag("R", m.r);
  dump_sparse("B3", m.b3);
  dump_sparse("A_eq", m.a_eq);
  dump_diag("B_eq", m.b_eq);
}

}  // namespace hmm
