#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prt/demand.hpp"
#include "prt/management.hpp"
#include "prt/metrics.hpp"
#include "prt/network.hpp"
#include "prt/time.hpp"

namespace prt {

struct FleetConfig {
  std::size_t size = 0;
  /// Vehicles per station at t = 0; empty means round-robin over berths.
  std::vector<std::size_t> initial;
  double speed = 10.0;          // m/s
  double boarding_time = 20.0;  // s
  double alighting_time = 20.0; // s
  int capacity = kMaxGroupSize;

  friend bool operator==(const FleetConfig&, const FleetConfig&) = default;
};

struct RunConfig {
  SimTime drain_window = std::chrono::hours{2};
  std::uint64_t seed = 1;
  Scope scope;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// A fully validated simulation setup.
struct Scenario {
  std::string name = "scenario";
  Network network;
  std::optional<StationIndex> event_station;
  FleetConfig fleet;
  /// Named transport task the phases were built from, if any.
  std::optional<ScenarioKind> kind;
  std::vector<DemandPhase> phases;
  /// Fixed orders in addition to the Poisson phases (ids are reassigned).
  std::vector<TransitOrder> orders;
  ManagementParams management;
  RunConfig run;

  SimTime heavy_end() const {
    SimTime end = heavy_phase_end(phases);
    for (const auto& o : orders) end = std::max(end, o.created_at + SimTime{1});
    return end;
  }
  SimTime run_end() const { return heavy_end() + run.drain_window; }

  /// Same scenario with every link length and the cruise speed multiplied
  /// by factor, which leaves all travel times unchanged.
  Scenario scaled(double factor) const {
    Scenario s = *this;
    s.network = network.scaled(factor);
    s.fleet.speed *= factor;
    return s;
  }
};

}  // namespace prt
