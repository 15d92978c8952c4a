#include "support.hpp"

#include <doctest.h>

#include <map>

using namespace hmm;
using namespace hmm::test;

TEST_CASE("single-source power flow matches a direct nodal solve") {
  const PowerSystemCase c = load_case(case_path("desk.yaml"));
  const System sys(c);
  const PowerFlowResult pf = solve_power_flow(c, sys.network());

  // Admittances built from the case data alone.
  const double w0 = c.omega0;
  const auto n = static_cast<Eigen::Index>(c.buses.size());
  std::map<int, Eigen::Index> at;
  for (Eigen::Index k = 0; k < n; ++k) at[c.buses[static_cast<std::size_t>(k)].id] = k;
  ComplexMatrix y = ComplexMatrix::Zero(n, n);
  for (const auto& b : c.buses) y(at[b.id], at[b.id]) += Complex(b.shunt_conductance, w0 * b.shunt_capacitance);
  for (const auto& l : c.lines) {
    const Complex ys = 1.0 / Complex(l.resistance, w0 * l.inductance);
    const Complex ysh(0.0, w0 * l.charging / 2.0);
    const auto i = at[l.from_bus], j = at[l.to_bus];
    y(i, i) += ys + ysh;
    y(j, j) += ys + ysh;
    y(i, j) -= ys;
    y(j, i) -= ys;
  }
  for (const auto& ld : c.loads) {
    const auto i = at[ld.bus];
    if (ld.kind == LoadKind::rl)
      y(i, i) += 1.0 / Complex(ld.resistance, w0 * ld.inductance);
    else
      y(i, i) += Complex(ld.conductance, w0 * ld.capacitance);
  }
  const auto s = at[c.generators[0].bus];
  REQUIRE(s == 0);
  const Complex v1 = pf.voltage[0];
  CHECK(std::abs(v1) == doctest::Approx(c.generators[0].v_set).epsilon(1e-10));
  const ComplexVector rest = -y.bottomRightCorner(n - 1, n - 1).lu().solve(y.bottomLeftCorner(n - 1, 1) * v1);
  for (Eigen::Index k = 1; k < n; ++k) CHECK(std::abs(rest[k - 1] - pf.voltage[k]) < 1e-9);
  const Complex s_gen = v1 * std::conj((y.row(0) * pf.voltage)(0));
  CHECK(std::abs(s_gen - pf.source_power[0]) < 1e-9);
}

TEST_CASE("two-area power flow meets its setpoints") {
  const PowerSystemCase c = load_case(case_path("two_area_ibr.yaml"));
  const System sys(c);
  const PowerFlowResult pf = solve_power_flow(c, sys.network());
  CHECK(pf.mismatch < 1e-9);
  for (std::size_t g = 0; g < c.generators.size(); ++g) {
    const auto b = static_cast<Eigen::Index>(c.bus_index(c.generators[g].bus));
    CHECK(std::abs(pf.voltage[b]) == doctest::Approx(c.generators[g].v_set).epsilon(1e-9));
    if (!c.generators[g].slack) CHECK(pf.source_power[static_cast<Eigen::Index>(g)].real() == doctest::Approx(c.generators[g].p_set).epsilon(1e-9));
  }
  const ComplexMatrix y = admittance_matrix(sys.network(), c.omega0);
  const ComplexVector inj = pf.voltage.cwiseProduct((y * pf.voltage).conjugate());
  ComplexVector expected = ComplexVector::Zero(inj.size());
  for (std::size_t k = 0; k < c.source_count(); ++k)
    expected[static_cast<Eigen::Index>(c.bus_index(c.source_bus(k)))] += pf.source_power[static_cast<Eigen::Index>(k)];
  CHECK((inj - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("initialization reaches a small residual") {
  for (const char* name : {"desk.yaml", "two_area_ibr.yaml"}) {
    CAPTURE(name);
    System sys(load_case(case_path(name)));
    const InitResult r = initialize(sys);
    CHECK(r.residual < 1e-6);
    CHECK(r.x.size() == static_cast<Eigen::Index>(sys.size()));
    for (std::size_t g = 0; g < sys.power_case().generators.size(); ++g)
      CHECK(std::abs(r.x[static_cast<Eigen::Index>(sys.layout().generator_offset[g] + gen_state::dw)]) < 1e-8);
  }
}

TEST_CASE("a second initialization needs no settling") {
  System sys(load_case(case_path("desk.yaml")));
  const InitResult a = initialize(sys);
  const InitResult b = initialize(sys);
  CHECK_FALSE(b.settled);
  CHECK(b.settle_time == 0.0);
  CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("infeasible loading is reported") {
  PowerSystemCase c = load_case(case_path("desk.yaml"));
  for (auto& ld : c.loads) {
    ld.resistance /= 20.0;
    ld.inductance /= 20.0;
  }
  System sys(c);
  CHECK_THROWS_AS(initialize(sys), InitializationError);
}

TEST_CASE("the equilibrium stays flat under micro integration") {
  Loaded s = load_initialized("desk.yaml");
  MicroConfig mc;
  mc.order = 12;
  MicroSolver solver(s.sys, mc);
  Vector x = s.x0;
  double t = 0.0;
  solver.advance(t, x, 0.2);
  CHECK(t == 0.2);
  const std::size_t iw = s.sys.layout().generator_offset[0] + gen_state::dw;
  CHECK(std::abs(x[static_cast<Eigen::Index>(iw)]) < 1e-8);
  const Vector res = rotating_frame_residual(s.sys, x, 0.2);
  CHECK(res.lpNorm<Eigen::Infinity>() < 1e-5);
}
