#pragma once

#include "hmm/case_io.hpp"
#include "hmm/initialize.hpp"
#include "hmm/system.hpp"

#include <random>
#include <string>

namespace hmm::test {

inline std::string case_path(const std::string& name) {
  return std::string(HMM_SOURCE_DIR) + "/cases/" + name;
}

// One bus with C = G = 1 and nothing else, so dv/dt = -v on every phase.
inline PowerSystemCase unit_rc_case() {
  PowerSystemCase c;
  c.name = "unit_rc";
  Bus b;
  b.id = 1;
  b.nominal_kv = 1.0;
  b.shunt_capacitance = 1.0;
  b.shunt_conductance = 1.0;
  c.buses.push_back(b);
  return c;
}

// Random passive network with `buses` nodes and a ring of `buses` edges.
// Values are O(1) pu*s so the spectral radius of A_eq stays near 1..10.
inline PowerSystemCase random_rlc_case(std::mt19937_64& rng, int buses = 4) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  PowerSystemCase c;
  c.name = "random_rlc";
  for (int i = 1; i <= buses; ++i) {
    Bus b;
    b.id = i;
    b.shunt_capacitance = u(rng);
    b.shunt_conductance = 0.2 * u(rng);
    c.buses.push_back(b);
  }
  for (int i = 1; i <= buses; ++i) {
    Line l;
    l.id = i;
    l.from_bus = i;
    l.to_bus = i % buses + 1;
    l.resistance = 0.2 * u(rng);
    l.inductance = u(rng);
    l.charging = 0.1 * u(rng);
    c.lines.push_back(l);
  }
  return c;
}

struct Loaded {
  System sys;
  Vector x0;
};

inline Loaded load_initialized(const std::string& name) {
  System sys(load_case(case_path(name)));
  const InitResult init = initialize(sys);
  return {std::move(sys), init.x};
}

}  // namespace hmm::test
