#include "hmm/network.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <random>
#include <sstream>

using namespace hmm;

namespace {

PowerSystemCase chain(int buses) {
  PowerSystemCase c;
  for (int i = 1; i <= buses; ++i) {
    Bus b;
    b.id = i;
    b.shunt_capacitance = 1.0;
    c.buses.push_back(b);
  }
  for (int i = 1; i < buses; ++i) {
    Line l;
    l.id = i;
    l.from_bus = i + 1;  // reversed on purpose: orientation is by id
    l.to_bus = i;
    l.inductance = 1.0;
    c.lines.push_back(l);
  }
  return c;
}

}  // namespace

TEST_CASE("incidence of a single edge") {
  const IncidenceMatrix inc = build_incidence(chain(2));
  CHECK(inc.b(0, 0) == 1.0);
  CHECK(inc.b(1, 0) == -1.0);
  const Eigen::MatrixXd b3 = Eigen::MatrixXd(inc.b3);
  Eigen::MatrixXd expect(6, 3);
  expect << Eigen::Matrix3d::Identity(), -Eigen::Matrix3d::Identity();
  CHECK(b3 == expect);
}

TEST_CASE("ring incidence columns sum to zero") {
  PowerSystemCase c = chain(3);
  Line l;
  l.id = 3;
  l.from_bus = 1;
  l.to_bus = 3;
  l.inductance = 1.0;
  c.lines.push_back(l);
  const IncidenceMatrix inc = build_incidence(c);
  for (Eigen::Index k = 0; k < inc.b.cols(); ++k) {
    CHECK(inc.b.col(k).sum() == 0.0);
    CHECK(inc.b.col(k).cwiseAbs().sum() == 2.0);
  }
}

TEST_CASE("disconnected network is rejected") {
  PowerSystemCase c = chain(2);
  Bus b;
  b.id = 9;
  b.shunt_capacitance = 1.0;
  c.buses.push_back(b);
  CHECK_THROWS_AS(build_incidence(c), CaseError);
}

TEST_CASE("one node reduces to the scalar RC equation") {
  PowerSystemCase c;
  Bus b;
  b.id = 1;
  b.shunt_capacitance = 0.4;
  b.shunt_conductance = 2.0;
  c.buses.push_back(b);
  const NetworkMatrices m = assemble(c, build_incidence(c));
  const Eigen::MatrixXd a = Eigen::MatrixXd(m.a_eq);
  for (int p = 0; p < 3; ++p) {
    CHECK(a(p, p) == doctest::Approx(-2.0 / 0.4));
    CHECK(m.b_eq[p] == doctest::Approx(1.0 / 0.4));
  }
  Vector psi(3), lam(3);
  psi << 1.0, -0.5, 0.25;
  lam << 0.3, 0.0, -1.0;
  const Vector d = network_rhs(m, psi, lam);
  for (int p = 0; p < 3; ++p) CHECK(d[p] == doctest::Approx((-2.0 * psi[p] + lam[p]) / 0.4));
}

TEST_CASE("zero capacitance or inductance is rejected") {
  PowerSystemCase c = chain(2);
  c.buses[1].shunt_capacitance = 0.0;
  CHECK_THROWS_AS(assemble(c, build_incidence(c)), CaseError);
  c = chain(2);
  c.lines[0].inductance = 0.0;
  CHECK_THROWS_AS(assemble(c, build_incidence(c)), CaseError);
}

TEST_CASE("drift matrix structure and passivity") {
  std::mt19937_64 rng(11);
  for (int draw = 0; draw < 5; ++draw) {
    const PowerSystemCase c = test::random_rlc_case(rng, 4 + draw % 3);
    const NetworkMatrices m = assemble(c, build_incidence(c));
    const Eigen::MatrixXd d = Eigen::MatrixXd(m.drift());
    const Eigen::Index nv = m.c.size(), nw = m.l.size();
    CHECK(d.block(0, nv, nv, nw) == -d.block(nv, 0, nw, nv).transpose());
    CHECK(m.dim() == static_cast<std::size_t>(nv + nw));
    const Eigen::MatrixXd a = Eigen::MatrixXd(m.a_eq);
    CHECK((a - m.b_eq.asDiagonal() * d).lpNorm<Eigen::Infinity>() == 0.0);
    const auto ev = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) CHECK(ev[i].real() <= 1e-12);
  }
}

TEST_CASE("energy balance of the assembled network") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int draw = 0; draw < 10; ++draw) {
    const PowerSystemCase c = test::random_rlc_case(rng);
    const NetworkMatrices m = assemble(c, build_incidence(c));
    const Eigen::Index dim = static_cast<Eigen::Index>(m.dim()), nv = m.c.size();
    Vector psi(dim), lam = Vector::Zero(dim);
    for (auto& v : psi) v = n(rng);
    for (Eigen::Index i = 0; i < nv; ++i) lam[i] = n(rng);
    Vector storage(dim), loss(dim);
    storage << m.c, m.l;
    loss << m.g, m.r;
    const Vector dpsi = network_rhs(m, psi, lam);
    const double lhs = psi.dot(storage.cwiseProduct(dpsi));
    const double rhs = -psi.dot(loss.cwiseProduct(psi)) + psi.head(nv).dot(lam.head(nv));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("network rhs is linear and vanishes at rest") {
  std::mt19937_64 rng(5);
  const PowerSystemCase c = test::random_rlc_case(rng);
  const NetworkMatrices m = assemble(c, build_incidence(c));
  const auto dim = static_cast<Eigen::Index>(m.dim());
  CHECK(network_rhs(m, Vector::Zero(dim), Vector::Zero(dim)).isZero(0.0));
  const Vector p1 = Vector::Random(dim), p2 = Vector::Random(dim);
  const Vector l1 = Vector::Random(dim), l2 = Vector::Random(dim);
  const Vector lhs = network_rhs(m, 2.0 * p1 - 0.5 * p2, 2.0 * l1 - 0.5 * l2);
  const Vector rhs = 2.0 * network_rhs(m, p1, l1) - 0.5 * network_rhs(m, p2, l2);
  CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("lossless LC pair follows the analytic oscillation") {
  // Two equal capacitors joined by an inductor oscillate at sqrt(2 / (L C)).
  PowerSystemCase c = chain(2);
  const double w0 = 2 * kPi * 60, cap = 1e-3, ind = 2.0 / (w0 * w0 * cap);
  for (auto& b : c.buses) b.shunt_capacitance = cap;
  c.lines[0].inductance = ind;
  const NetworkMatrices m = assemble(c, build_incidence(c));
  const double amp = 1.3;
  for (double t : {0.0, 0.0011, 0.0057}) {
    Vector psi(9), dpsi(9);
    for (int p = 0; p < 3; ++p) {
      const double ph = w0 * t - p * kTwoPiOver3;
      psi[p] = amp * std::cos(ph);
      psi[3 + p] = -amp * std::cos(ph);
      psi[6 + p] = cap * amp * w0 * std::sin(ph);
      dpsi[p] = -amp * w0 * std::sin(ph);
      dpsi[3 + p] = amp * w0 * std::sin(ph);
      dpsi[6 + p] = cap * amp * w0 * w0 * std::cos(ph);
    }
    CHECK((network_rhs(m, psi, Vector::Zero(9)) - dpsi).lpNorm<Eigen::Infinity>() < 1e-9 * w0);
  }
}

TEST_CASE("fault apply and clear") {
  const PowerSystemCase c = load_case(test::case_path("desk.yaml"));
  const IncidenceMatrix inc = build_incidence(c);
  const NetworkMatrices m0 = assemble(c, inc);
  TopologyEvent f;
  f.kind = EventKind::apply_fault;
  f.target = 3;
  f.conductance = 7.5;
  const NetworkMatrices m1 = apply_topology_event(c, inc, m0, f);
  const auto node = static_cast<Eigen::Index>(3 * c.bus_index(3));
  CHECK(m1.a_eq.coeff(node, node) - m0.a_eq.coeff(node, node) == doctest::Approx(-7.5 / m0.c[node]));
  f.kind = EventKind::clear_fault;
  const NetworkMatrices m2 = apply_topology_event(c, inc, m1, f);
  CHECK(m2 == m0);
  CHECK_THROWS_AS(apply_topology_event(c, inc, m0, f), CaseError);

  // default fault conductance is 1e4 S converted to the bus base
  TopologyEvent d;
  d.target = 3;
  const NetworkMatrices m3 = apply_topology_event(c, inc, m0, d);
  CHECK(m3.topology.faults.at(3) == doctest::Approx(1e4 * c.impedance_base(3)));
}

TEST_CASE("element removal and reconnection") {
  const PowerSystemCase c = load_case(test::case_path("desk.yaml"));
  const IncidenceMatrix inc = build_incidence(c);
  const NetworkMatrices m0 = assemble(c, inc);
  TopologyEvent e;
  e.kind = EventKind::disconnect_load;
  e.target = 1;
  const NetworkMatrices m1 = apply_topology_event(c, inc, m0, e);
  CHECK(m1.b3.nonZeros() < m0.b3.nonZeros());
  e.kind = EventKind::reconnect_load;
  CHECK(apply_topology_event(c, inc, m1, e) == m0);
  e.kind = EventKind::trip_line;
  e.target = 4;
  const NetworkMatrices m2 = apply_topology_event(c, inc, m0, e);
  CHECK(!m2.edge_active[3]);
  e.kind = EventKind::trip_generator;
  e.target = 1;
  CHECK(!apply_topology_event(c, inc, m0, e).topology.source_active[0]);
  e.target = 42;
  CHECK_THROWS(apply_topology_event(c, inc, m0, e));
  // same events in the same order give identical matrices
  CHECK(apply_topology_event(c, inc, m0, {EventKind::trip_line, 4}) == m2);
}

TEST_CASE("injection adds a sinusoid on phase a") {
  PowerSystemCase c = load_case(test::case_path("desk.yaml"));
  System sys(c);
  const IncidenceMatrix& inc = sys.incidence();
  TopologyEvent e;
  e.kind = EventKind::start_injection;
  e.target = 2;
  e.amplitude = 0.32;
  e.frequency_hz = 1.0;
  const NetworkMatrices m = apply_topology_event(c, inc, sys.network(), e);
  const Vector x = Vector::Zero(static_cast<Eigen::Index>(sys.size()));
  Vector lam(static_cast<Eigen::Index>(m.dim()));
  const double t = 0.37;
  injection_vector(c, sys.layout(), m, x, t, lam);
  const auto b = static_cast<Eigen::Index>(3 * c.bus_index(2));
  CHECK(lam[b] == doctest::Approx(0.32 * std::sin(2 * kPi * t)));
  CHECK(lam[b + 1] == 0.0);
  CHECK(lam.cwiseAbs().sum() == doctest::Approx(std::abs(lam[b])));
}

TEST_CASE("matrix dump lists every block") {
  const PowerSystemCase c = load_case(test::case_path("desk.yaml"));
  const NetworkMatrices m = assemble(c, build_incidence(c));
  std::ostringstream os;
  write_matrix_dump(m, os);
  const std::string s = os.str();
  for (const char* name : {"C ", "G ", "L ", "R ", "B3 ", "A_eq ", "B_eq "})
    CHECK(("\n" + s).find(std::string("\n") + name) != std::string::npos);
}

TEST_CASE("two-area network dimension") {
  const PowerSystemCase c = load_case(test::case_path("two_area_ibr.yaml"));
  const NetworkMatrices m = assemble(c, build_incidence(c));
  std::size_t rl = 0;
  for (const auto& ld : c.loads) rl += ld.kind == LoadKind::rl;
  CHECK(m.dim() == 3 * (11 + c.lines.size() + rl));
}
