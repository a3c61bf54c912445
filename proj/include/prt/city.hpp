#pragma once

#include <string>
#include <vector>

#include "prt/config.hpp"
#include "prt/demand.hpp"
#include "prt/network.hpp"

namespace prt {

/// Twelve-station benchmark city: two one-way loops (A-F west, G-L east)
/// joined by four connectors. Station I, the event station, sits on the
/// east edge. Link lengths are illustrative, not surveyed.
inline Network city_network(int berths = 10) {
  std::vector<StationDescriptor> stations;
  for (char c = 'A'; c <= 'L'; ++c) stations.push_back({std::string(1, c), berths});
  const std::vector<LinkDescriptor> links = {
      {"A", "B", 600}, {"B", "C", 500}, {"C", "D", 700}, {"D", "E", 600}, {"E", "F", 500}, {"F", "A", 700},
      {"G", "H", 500}, {"H", "I", 800}, {"I", "J", 800}, {"J", "K", 500}, {"K", "L", 600}, {"L", "G", 600},
      {"C", "G", 400}, {"L", "D", 400}, {"B", "H", 900}, {"K", "E", 900},
  };
  return Network(std::move(stations), links);
}

inline constexpr const char* kCityEventStation = "I";

/// City scenario for one of the named transport tasks with default fleet,
/// management and run settings.
inline Scenario city_scenario(ScenarioKind kind, int berths = 10, std::size_t fleet = 96) {
  Scenario sc;
  sc.name = "city_" + to_string(kind);
  sc.network = city_network(berths);
  sc.event_station = sc.network.index_of(kCityEventStation);
  sc.kind = kind;
  sc.fleet.size = fleet;
  sc.phases = build_scenario(kind, sc.network, sc.event_station,
                             from_seconds(EventTask{}.travel_window_h * 3600.0) + sc.run.drain_window);
  if (kind == ScenarioKind::event_outbound) sc.run.scope = Scope::at(*sc.event_station);
  return sc;
}

}  // namespace prt
