#pragma once

#include "hmm/model.hpp"

#include <iosfwd>
#include <map>
#include <set>

namespace hmm {

// Bus-line incidence. Column e has +1 at the lower-id bus and -1 at the
// higher-id bus of line e; B3 expands each entry to a signed 3x3 identity.
struct IncidenceMatrix {
  Eigen::MatrixXd b;
  SparseMatrix b3;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (from, to) bus indices
};

IncidenceMatrix build_incidence(const PowerSystemCase& c);

enum class EventKind {
  apply_fault,
  clear_fault,
  trip_generator,
  trip_ibr,
  trip_line,
  disconnect_load,
  reconnect_load,
  start_injection,
  stop_injection,
};

std::string to_string(EventKind k);

struct TopologyEvent {
  EventKind kind = EventKind::apply_fault;
  int target = 0;              // bus, generator, ibr, line or load id
  double conductance = -1.0;   // fault conductance in pu; negative selects the case default
  double amplitude = 0.0;      // injection peak, pu current
  double frequency_hz = 0.0;
  double phase = 0.0;          // rad
  bool three_phase = false;    // injection on all phases (balanced) or phase a only
};

struct CurrentInjection {
  int bus = 0;
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  bool three_phase = false;

  bool operator==(const CurrentInjection&) const = default;
};

struct NetworkTopology {
  std::map<int, double> faults;  // bus id -> added conductance (pu)
  std::set<int> tripped_lines;
  std::set<int> disconnected_loads;
  std::vector<bool> source_active;
  std::vector<CurrentInjection> injections;

  bool operator==(const NetworkTopology&) const = default;
};

struct NetworkMatrices {
  NetworkTopology topology;
  Vector c;  // 3N node capacitances
  Vector g;  // 3N node conductances
  Vector l;  // 3E edge inductances
  Vector r;  // 3E edge resistances
  SparseMatrix b3;    // 3N x 3E, lines then R-L load branches
  SparseMatrix a_eq;  // diag(C, L)^-1 * drift
  Vector b_eq;        // diagonal of diag(C, L)^-1
  std::vector<bool> edge_active;
  std::vector<std::size_t> source_node;  // bus index of every source

  std::size_t dim() const { return static_cast<std::size_t>(b_eq.size()); }
  // [[-G, -B3], [B3^T, -R]] with removed branches zeroed.
  SparseMatrix drift() const;
  SparseMatrix b_eq_matrix() const;
  bool operator==(const NetworkMatrices& o) const;
};

NetworkTopology default_topology(const PowerSystemCase& c);

NetworkMatrices assemble(const PowerSystemCase& c, const IncidenceMatrix& inc);
NetworkMatrices assemble(const PowerSystemCase& c, const IncidenceMatrix& inc,
                         const NetworkTopology& topo);

// A_eq psi + B_eq lambda.
Vector network_rhs(const NetworkMatrices& m, const Vector& psi, const Vector& lambda);
void network_rhs_into(const NetworkMatrices& m, const Eigen::Ref<const Vector>& psi,
                      const Eigen::Ref<const Vector>& lambda, Eigen::Ref<Vector> out);

NetworkMatrices apply_topology_event(const PowerSystemCase& c, const IncidenceMatrix& inc,
                                     const NetworkMatrices& m, const TopologyEvent& e);

// Injection vector lambda = [i_node, 0] built from source currents in x and
// the registered external injections at time t.
void injection_vector(const PowerSystemCase& c, const StateLayout& layout,
                      const NetworkMatrices& m, const Vector& x, double t, Eigen::Ref<Vector> lambda);

// Plain-text dump: one block per matrix, "name rows cols" followed by
// "row col value" triplets of the nonzero entries.
void write_matrix_dump(const NetworkMatrices& m, std::ostream& os);

}  // namespace hmm
