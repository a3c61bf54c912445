#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "prt/error.hpp"
#include "prt/network.hpp"
#include "prt/rng.hpp"
#include "prt/time.hpp"

namespace prt {

inline constexpr int kMaxGroupSize = 4;

/// Probabilities of passenger groups of 1..4 people.
class GroupSizeDistribution {
 public:
  GroupSizeDistribution() : p_{0.25, 0.25, 0.25, 0.25} {}

  explicit GroupSizeDistribution(std::array<double, kMaxGroupSize> p) : p_(p) {
    double sum = 0.0;
    for (double x : p_) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw ValidationError("group_sizes", "group-size probabilities must be nonnegative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("group_sizes", "group-size probabilities must sum to 1, got " + std::to_string(sum));
  }

  /// Default: 1..4 equally likely.
  static GroupSizeDistribution uniform() { return GroupSizeDistribution{}; }
  /// Travelling to the event: 10/20/40/30 %.
  static GroupSizeDistribution inbound() { return GroupSizeDistribution({0.10, 0.20, 0.40, 0.30}); }
  /// Leaving the event: 5/5/30/60 %.
  static GroupSizeDistribution outbound() { return GroupSizeDistribution({0.05, 0.05, 0.30, 0.60}); }

  double probability(int size) const { return p_.at(static_cast<std::size_t>(size - 1)); }
  const std::array<double, kMaxGroupSize>& probabilities() const noexcept { return p_; }

  double mean() const {
    double m = 0.0;
    for (int k = 1; k <= kMaxGroupSize; ++k) m += k * p_[static_cast<std::size_t>(k - 1)];
    return m;
  }

  friend bool operator==(const GroupSizeDistribution&, const GroupSizeDistribution&) = default;

 private:
  std::array<double, kMaxGroupSize> p_;
};

struct TransitOrder {
  std::uint64_t id = 0;
  StationIndex origin = 0;
  StationIndex destination = 0;
  int size = 1;
  SimTime created_at{0};
};

/// A time window of Poisson order streams. Overlapping phases superpose.
struct DemandPhase {
  std::string name;
  SimTime start{0};
  SimTime end{0};
  /// Mean inter-arrival time in minutes per origin station; nullopt means
  /// the station generates no orders in this phase.
  std::vector<std::optional<double>> mean_interarrival_min;
  /// destination_weights[origin][dest]; the diagonal is zero.
  std::vector<std::vector<double>> destination_weights;
  GroupSizeDistribution group_dist;
  /// Heavy phases define the deadline that Rest is measured from.
  bool heavy = false;
};

/// Exponential inter-arrival time in seconds for a mean given in minutes.
inline double sample_interarrival(double mean_minutes, Rng& rng) {
  if (!(mean_minutes > 0.0)) throw NonPositiveMean("mean inter-arrival time must be positive");
  return -mean_minutes * 60.0 * std::log1p(-rng.uniform());
}

inline int sample_group_size(const GroupSizeDistribution& dist, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int k = 1; k < kMaxGroupSize; ++k) {
    acc += dist.probability(k);
    if (u < acc) return k;
  }
  // Last bucket; skip trailing zero-probability sizes.
  for (int k = kMaxGroupSize; k > 1; --k)
    if (dist.probability(k) > 0.0) return k;
  return 1;
}

inline StationIndex sample_destination(StationIndex origin, std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (j != origin) total += weights[j];
  if (!(total > 0.0)) throw AllZeroWeights("all destination weights are zero for origin " + std::to_string(origin));
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::optional<StationIndex> last;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (j == origin || weights[j] <= 0.0) continue;
    acc += weights[j];
    last = j;
    if (u < acc) return j;
  }
  return *last;
}

inline void validate_phase(const DemandPhase& ph, std::size_t n, const std::string& path) {
  if (!(ph.start < ph.end)) throw ValidationError(path, "phase start must precede its end");
  if (ph.mean_interarrival_min.size() != n)
    throw ValidationError(path + ".arrivals", "expected one entry per station");
  if (ph.destination_weights.size() != n)
    throw ValidationError(path + ".destinations", "expected one row per station");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string rp = path + ".destinations[" + std::to_string(i) + "]";
    const auto& row = ph.destination_weights[i];
    if (row.size() != n) throw ValidationError(rp, "expected one weight per station");
    if (row[i] != 0.0) throw ValidationError(rp, "weight of the origin itself must be 0");
    double sum = 0.0;
    for (double w : row) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError(rp, "weights must be nonnegative");
      sum += w;
    }
    const auto& mean = ph.mean_interarrival_min[i];
    if (mean) {
      if (!(*mean > 0.0))
        throw ValidationError(path + ".arrivals[" + std::to_string(i) + "]", "mean inter-arrival must be positive");
      if (!(sum > 0.0)) throw ValidationError(rp, "row sum must be positive for an active origin");
    }
  }
}

/// Fixed quantities of the social-event transport task.
struct EventTask {
  int participants = 4219;
  double travel_window_h = 2.0;
  double background_orders_per_h = 4.0;
  double uniform_mean_interarrival_min = 0.856;

  double inbound_persons_per_station_h(std::size_t stations) const {
    return participants / (travel_window_h * static_cast<double>(stations - 1));
  }
  double inbound_groups_per_station_h(std::size_t stations) const {
    return inbound_persons_per_station_h(stations) / GroupSizeDistribution::inbound().mean();
  }
  double outbound_groups_per_h() const {
    return participants / travel_window_h / GroupSizeDistribution::outbound().mean();
  }
  /// Combined event + background ordering interval at the event station.
  double outbound_mean_interarrival_min() const {
    return 60.0 / (outbound_groups_per_h() + background_orders_per_h);
  }
  double background_mean_interarrival_min() const { return 60.0 / background_orders_per_h; }
};

enum class ScenarioKind { uniform, event_inbound, event_outbound };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::uniform: return "uniform";
    case ScenarioKind::event_inbound: return "event_inbound";
    case ScenarioKind::event_outbound: return "event_outbound";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(const std::string& s) {
  if (s == "uniform") return ScenarioKind::uniform;
  if (s == "event_inbound") return ScenarioKind::event_inbound;
  if (s == "event_outbound") return ScenarioKind::event_outbound;
  throw ValidationError("demand.kind", "unknown scenario kind '" + s + "'");
}

namespace detail {

inline std::vector<std::vector<double>> uniform_destinations(std::size_t n) {
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) w[i][i] = 0.0;
  return w;
}

inline std::vector<std::vector<double>> single_destination(std::size_t n, StationIndex target) {
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    if (i != target) w[i][target] = 1.0;
  return w;
}

}  // namespace detail

/// Demand phases of one of the three named transport tasks. The heavy
/// phase lasts the travel window; background traffic continues to
/// `run_end` so the drain period still sees 4 orders/h per station.
inline std::vector<DemandPhase> build_scenario(ScenarioKind kind, const Network& net,
                                               std::optional<StationIndex> event_station, SimTime run_end,
                                               const EventTask& task = {}) {
  const std::size_t n = net.size();
  if (n < 2) throw ValidationError("network", "at least two stations are required");
  if (kind != ScenarioKind::uniform && (!event_station || *event_station >= n))
    throw UnknownEventStation("scenario '" + to_string(kind) + "' needs a valid event station");
  const SimTime heavy_end = from_seconds(task.travel_window_h * 3600.0);
  if (run_end < heavy_end) throw ValidationError("run", "run must cover the heavy phase");

  auto background = [&](SimTime start) {
    DemandPhase p;
    p.name = "background";
    p.start = start;
    p.end = run_end;
    p.mean_interarrival_min.assign(n, task.background_mean_interarrival_min());
    p.destination_weights = detail::uniform_destinations(n);
    p.group_dist = GroupSizeDistribution::uniform();
    return p;
  };

  std::vector<DemandPhase> phases;
  switch (kind) {
    case ScenarioKind::uniform: {
      DemandPhase p;
      p.name = "uniform";
      p.end = heavy_end;
      p.mean_interarrival_min.assign(n, task.uniform_mean_interarrival_min);
      p.destination_weights = detail::uniform_destinations(n);
      p.heavy = true;
      phases.push_back(std::move(p));
      if (heavy_end < run_end) phases.push_back(background(heavy_end));
      break;
    }
    case ScenarioKind::event_inbound: {
      DemandPhase p;
      p.name = "event_inbound";
      p.end = heavy_end;
      p.mean_interarrival_min.assign(n, 60.0 / task.inbound_groups_per_station_h(n));
      p.mean_interarrival_min[*event_station] = std::nullopt;
      p.destination_weights = detail::single_destination(n, *event_station);
      p.group_dist = GroupSizeDistribution::inbound();
      p.heavy = true;
      phases.push_back(std::move(p));
      phases.push_back(background(SimTime{0}));
      break;
    }
    case ScenarioKind::event_outbound: {
      DemandPhase p;
      p.name = "event_outbound";
      p.end = heavy_end;
      p.mean_interarrival_min.assign(n, std::nullopt);
      p.mean_interarrival_min[*event_station] = 60.0 / task.outbound_groups_per_h();
      p.destination_weights = detail::uniform_destinations(n);
      p.group_dist = GroupSizeDistribution::outbound();
      p.heavy = true;
      phases.push_back(std::move(p));
      phases.push_back(background(SimTime{0}));
      break;
    }
  }
  return phases;
}

/// End of the latest heavy phase, or of the latest phase when none is heavy.
inline SimTime heavy_phase_end(std::span<const DemandPhase> phases) {
  SimTime end{0};
  bool any_heavy = false;
  for (const auto& p : phases)
    if (p.heavy) {
      end = std::max(end, p.end);
      any_heavy = true;
    }
  if (!any_heavy)
    for (const auto& p : phases) end = std::max(end, p.end);
  return end;
}

/// Open-loop Poisson order generation. Each (phase, origin) pair draws from
/// its own stream derived from the master seed.
inline std::vector<TransitOrder> generate_orders(std::span<const DemandPhase> phases, std::size_t stations,
                                                 std::uint64_t seed) {
  struct Keyed {
    TransitOrder order;
    std::size_t phase;
    std::size_t seq;
  };
  std::vector<Keyed> all;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const auto& ph = phases[p];
    validate_phase(ph, stations, "demand.phases[" + std::to_string(p) + "]");
    const double start_s = to_seconds(ph.start);
    const double end_s = to_seconds(ph.end);
    for (StationIndex s = 0; s < stations; ++s) {
      if (!ph.mean_interarrival_min[s]) continue;
      Rng rng = Rng::stream(seed, s, p);
      double t = start_s;
      std::size_t seq = 0;
      for (;;) {
        t += sample_interarrival(*ph.mean_interarrival_min[s], rng);
        if (t >= end_s) break;
        TransitOrder o;
        o.origin = s;
        o.size = sample_group_size(ph.group_dist, rng);
        o.destination = sample_destination(s, ph.destination_weights[s], rng);
        o.created_at = from_seconds(t);
        all.push_back({o, p, seq++});
      }
    }
  }
  std::sort(all.begin(), all.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.order.created_at, a.order.origin, a.phase, a.seq) <
           std::tie(b.order.created_at, b.order.origin, b.phase, b.seq);
  });
  std::vector<TransitOrder> out;
  out.reserve(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].order.id = i;
    out.push_back(all[i].order);
  }
  return out;
}

}  // namespace prt
