#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "prt/demand.hpp"
#include "prt/error.hpp"
#include "prt/network.hpp"
#include "prt/time.hpp"

namespace prt {

/// Report scope: the whole network or a single station.
struct Scope {
  std::optional<StationIndex> station;

  static Scope network() { return {}; }
  static Scope at(StationIndex s) { return {s}; }
  bool is_network() const noexcept { return !station.has_value(); }
  friend bool operator==(const Scope&, const Scope&) = default;
};

struct DispatchCounts {
  std::uint64_t calls = 0;
  std::uint64_t expels = 0;
  std::uint64_t balance = 0;
  friend bool operator==(const DispatchCounts&, const DispatchCounts&) = default;
};

struct MetricsReport {
  std::string scenario;
  std::string horizon = "inf";
  std::uint64_t seed = 0;
  std::string scope = "network";
  double awt_s = 0.0;
  double aql_groups = 0.0;
  std::uint64_t maxql_groups = 0;
  /// Minutes after the heavy phase until every order created during it has
  /// boarded; nullopt when that did not happen within the drain window.
  std::optional<double> rest_min;
  std::uint64_t served = 0;
  std::uint64_t generated = 0;
  DispatchCounts dispatches;
  std::uint64_t messages = 0;
  std::size_t fleet = 0;
  double duration_s = 0.0;

  bool rest_censored() const noexcept { return !rest_min.has_value(); }
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline const char* kCsvHeader =
    "scenario,horizon,seed,scope,awt_s,aql_groups,maxql_groups,rest_min,rest_censored,served,generated,"
    "dispatch_calls,dispatch_expels,dispatch_balance,messages";

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string to_csv_row(const MetricsReport& r) {
  std::string row;
  row += r.scenario + ',' + r.horizon + ',' + std::to_string(r.seed) + ',' + r.scope + ',';
  row += format_fixed(r.awt_s, 3) + ',' + format_fixed(r.aql_groups, 4) + ',' + std::to_string(r.maxql_groups) + ',';
  row += (r.rest_min ? format_fixed(*r.rest_min, 2) : std::string{}) + ',' + (r.rest_censored() ? "1" : "0") + ',';
  row += std::to_string(r.served) + ',' + std::to_string(r.generated) + ',';
  row += std::to_string(r.dispatches.calls) + ',' + std::to_string(r.dispatches.expels) + ',' +
         std::to_string(r.dispatches.balance) + ',' + std::to_string(r.messages);
  return row;
}

/// Online accumulation of waits, time-weighted queue lengths and the drain
/// time after the heavy phase.
class MetricsAccumulator {
 public:
  MetricsAccumulator(std::size_t stations, SimTime heavy_end, SimTime drain_window)
      : stations_(stations), heavy_end_(heavy_end), drain_window_(drain_window) {}

  void order_created(const TransitOrder& o) {
    auto& s = stations_.at(o.origin);
    ++s.generated;
    if (o.created_at < heavy_end_) ++s.outstanding;
  }

  void record_wait(const TransitOrder& o, SimTime boarding_start) {
    if (boarding_start < o.created_at)
      throw NegativeWait("order " + std::to_string(o.id) + " boards before it was created");
    auto& s = stations_.at(o.origin);
    const double w = to_seconds(boarding_start - o.created_at);
    s.wait_sum.add(w);
    ++s.served;
    if (o.created_at < heavy_end_) {
      --s.outstanding;
      s.last_heavy_boarding = std::max(s.last_heavy_boarding, boarding_start);
    }
  }

  void observe_queue(StationIndex station, SimTime t, std::size_t len) {
    auto& s = stations_.at(station);
    if (t < s.last_t) throw TimeRegression("queue observation goes back in time");
    s.integral.add(static_cast<double>(s.last_len) * to_seconds(t - s.last_t));
    s.last_t = t;
    s.last_len = len;
    s.max_len = std::max<std::uint64_t>(s.max_len, len);
  }

  DispatchCounts& dispatches() noexcept { return dispatches_; }
  void add_messages(std::uint64_t n) noexcept { messages_ += n; }

  std::size_t queue_length(StationIndex s) const { return stations_.at(s).last_len; }
  std::uint64_t outstanding(StationIndex s) const { return stations_.at(s).outstanding; }

  /// Rest in minutes for the given stations, nullopt when censored.
  std::optional<double> compute_rest(std::span<const StationIndex> scope) const {
    SimTime last = heavy_end_;
    for (StationIndex i : scope) {
      const auto& s = stations_.at(i);
      if (s.outstanding > 0) return std::nullopt;
      last = std::max(last, s.last_heavy_boarding);
    }
    const SimTime rest = last - heavy_end_;
    if (rest > drain_window_) return std::nullopt;
    return to_minutes(rest);
  }

  MetricsReport finalize(const Scope& scope, SimTime end) const {
    std::vector<StationIndex> members;
    if (scope.is_network()) {
      for (StationIndex i = 0; i < stations_.size(); ++i) members.push_back(i);
    } else {
      if (*scope.station >= stations_.size()) throw UnknownStation("scope station out of range");
      members.push_back(*scope.station);
    }
    MetricsReport r;
    detail::CompensatedSum waits;
    double integral = 0.0;
    for (StationIndex i : members) {
      const auto& s = stations_[i];
      waits.add(s.wait_sum.value());
      r.served += s.served;
      r.generated += s.generated;
      r.maxql_groups = std::max(r.maxql_groups, s.max_len);
      // Close the last open interval up to the end of the run.
      integral += s.integral.value() + static_cast<double>(s.last_len) * to_seconds(end - s.last_t);
    }
    r.awt_s = r.served > 0 ? waits.value() / static_cast<double>(r.served) : 0.0;
    const double span = to_seconds(end) * static_cast<double>(members.size());
    r.aql_groups = span > 0.0 ? integral / span : 0.0;
    r.rest_min = compute_rest(members);
    r.dispatches = dispatches_;
    r.messages = messages_;
    r.duration_s = to_seconds(end);
    return r;
  }

 private:
  struct PerStation {
    detail::CompensatedSum wait_sum;
    std::uint64_t served = 0;
    std::uint64_t generated = 0;
    std::uint64_t outstanding = 0;
    SimTime last_heavy_boarding{0};
    detail::CompensatedSum integral;
    SimTime last_t{0};
    std::size_t last_len = 0;
    std::uint64_t max_len = 0;
  };

  std::vector<PerStation> stations_;
  SimTime heavy_end_;
  SimTime drain_window_;
  DispatchCounts dispatches_;
  std::uint64_t messages_ = 0;
};

}  // namespace prt
