#pragma once

#include "hmm/network.hpp"
#include "hmm/transforms.hpp"

namespace hmm {

// A case together with its layout and the current network condition. This
// is the unit every solver works on; events produce a modified copy.
class System {
 public:
  explicit System(PowerSystemCase c);

  const PowerSystemCase& power_case() const { return case_; }
  PowerSystemCase& mutable_case() { return case_; }
  const StateLayout& layout() const { return layout_; }
  const IncidenceMatrix& incidence() const { return incidence_; }
  const NetworkMatrices& network() const { return network_; }
  const DeviceStatus& status() const { return status_; }
  std::size_t size() const { return layout_.size(); }

  void set_extra_damping(double d) { status_.extra_damping = d; }

  // Re-assembles the network for the event and resets states that the event
  // disconnects (tripped source currents, removed branch currents).
  void apply_event(const TopologyEvent& e, Vector& x);

  // Full vector field: device equations plus A_eq psi + B_eq lambda.
  void rhs(const Vector& x, double t, Vector& dx) const;
  Vector rhs(const Vector& x, double t) const;
  // Slow block of the vector field only.
  Vector slow_rhs(const Vector& x, double t) const;

  // Applies limiter clamps and keeps disconnected elements at zero.
  void project(Vector& x) const;

  std::size_t rhs_calls() const { return rhs_calls_; }
  std::size_t series_calls() const { return series_calls_; }
  void count_series_call() const { ++series_calls_; }

 private:
  PowerSystemCase case_;
  StateLayout layout_;
  IncidenceMatrix incidence_;
  NetworkMatrices network_;
  DeviceStatus status_;
  mutable std::size_t rhs_calls_ = 0;
  mutable std::size_t series_calls_ = 0;
  mutable Vector lambda_scratch_;
};

}  // namespace hmm
