#include "hmm/system.hpp"

namespace hmm {

System::System(PowerSystemCase c) : case_(std::move(c)) {
  for (auto& g : case_.generators) g.finalize(case_.omega0);
  case_.validate();
  layout_ = build_layout(case_);
  incidence_ = build_incidence(case_);
  network_ = assemble(case_, incidence_);
  status_ = default_device_status(case_);
  lambda_scratch_ = Vector::Zero(static_cast<Eigen::Index>(layout_.network_size()));
}

void System::apply_event(const TopologyEvent& e, Vector& x) {
  network_ = apply_topology_event(case_, incidence_, network_, e);
  status_.source_active = network_.topology.source_active;
  project(x);
}

void System::rhs(const Vector& x, double t, Vector& dx) const {
  ++rhs_calls_;
  dx.resize(x.size());
  device_rhs(case_, layout_, x, t, status_, dx);
  const auto off = static_cast<Eigen::Index>(layout_.v_offset());
  const auto nn = static_cast<Eigen::Index>(layout_.network_size());
  injection_vector(case_, layout_, network_, x, t, lambda_scratch_);
  network_rhs_into(network_, x.segment(off, nn), lambda_scratch_, dx.segment(off, nn));
}

Vector System::rhs(const Vector& x, double t) const {
  Vector dx(x.size());
  rhs(x, t, dx);
  return dx;
}

Vector System::slow_rhs(const Vector& x, double t) const {
  Vector dx(x.size());
  ++rhs_calls_;
  device_rhs(case_, layout_, x, t, status_, dx);
  return dx.head(static_cast<Eigen::Index>(layout_.slow_size));
}

void System::project(Vector& x) const {
  clamp_states(case_, layout_, status_, x);
  for (std::size_t k = 0; k < layout_.n_edge; ++k)
    if (!network_.edge_active[k])
      x.segment(static_cast<Eigen::Index>(layout_.w_offset() + 3 * k), 3).setZero();
}

}  // namespace hmm
