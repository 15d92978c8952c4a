#pragma once

#include "hmm/network.hpp"

namespace hmm {

struct ScheduledEvent {
  double time = 0.0;
  TopologyEvent event;
};

// Time-ordered disturbance list.
struct EventSchedule {
  std::vector<ScheduledEvent> events;
  double horizon = 0.0;  // simulated seconds requested by the scenario, 0 if unset

  // Sorts stably by time and checks that every clear/reconnect/stop pairs
  // with an earlier apply/disconnect/start.
  void normalize();
  bool empty() const { return events.empty(); }
  std::string describe(const ScheduledEvent& e) const;
};

}  // namespace hmm
