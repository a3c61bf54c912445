#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prt/error.hpp"
#include "prt/network.hpp"
#include "prt/time.hpp"

namespace prt {

/// State of one station as exchanged between station agents.
struct StationSnapshot {
  StationIndex station = 0;
  std::uint32_t standing_empty = 0;
  std::uint32_t free_berths = 0;
  std::uint32_t queue_len = 0;
  std::uint32_t inbound_empty = 0;
  std::uint32_t inbound_full = 0;
  /// Vehicles waiting off-berth for a free berth.
  std::uint32_t holding = 0;
  SimTime timestamp{0};

  friend bool operator==(const StationSnapshot&, const StationSnapshot&) = default;
};

/// Coefficients of the linear target functions.
struct ScoreWeights {
  double standing = 1.0;
  double dist = 1.0;
  double queue = 1.0;
  double inbound = 0.5;
  double berth = 1.0;

  friend bool operator==(const ScoreWeights&, const ScoreWeights&) = default;
};

/// Queue-driven horizon controller settings.
struct AdaptiveParams {
  double q_up = 8.0;
  double q_down = 2.0;
  double step = 0.5;
  double h_min = 0.5;
  double h_max = 1.5;
  SimTime period = std::chrono::seconds{300};

  friend bool operator==(const AdaptiveParams&, const AdaptiveParams&) = default;
};

struct ManagementParams {
  Horizon horizon = Horizon::unlimited();
  ScoreWeights weights;
  double call_threshold = 1.0;
  double surplus_threshold = 4.0;
  double deficit_threshold = 1.0;
  SimTime tick_period = std::chrono::seconds{10};
  SimTime balance_period = std::chrono::seconds{60};
  std::optional<AdaptiveParams> adaptive;

  void validate() const {
    auto finite = [](double x, const char* name) {
      if (!std::isfinite(x)) throw ValidationError(std::string("management.") + name, "must be finite");
    };
    finite(weights.standing, "weights.standing");
    finite(weights.dist, "weights.dist");
    finite(weights.queue, "weights.queue");
    finite(weights.inbound, "weights.inbound");
    finite(weights.berth, "weights.berth");
    finite(call_threshold, "call_threshold");
    finite(surplus_threshold, "surplus_threshold");
    finite(deficit_threshold, "deficit_threshold");
    if (tick_period <= SimTime{0}) throw ValidationError("management.tick_period", "must be positive");
    if (balance_period <= SimTime{0}) throw ValidationError("management.balance_period", "must be positive");
    if (adaptive) {
      const auto& a = *adaptive;
      if (!(a.h_min >= 0.0)) throw ValidationError("management.adaptive.h_min", "must be nonnegative");
      if (!(a.h_min <= a.h_max)) throw ValidationError("management.adaptive", "h_min must not exceed h_max");
      if (!(a.q_down < a.q_up)) throw ValidationError("management.adaptive", "q_down must be below q_up");
      if (!(a.step > 0.0) || !std::isfinite(a.step)) throw ValidationError("management.adaptive.step", "must be positive");
      if (a.period <= SimTime{0}) throw ValidationError("management.adaptive.period", "must be positive");
    }
  }

  friend bool operator==(const ManagementParams&, const ManagementParams&) = default;
};

enum class DispatchReason { call, expel, balance };

inline const char* to_string(DispatchReason r) {
  switch (r) {
    case DispatchReason::call: return "call";
    case DispatchReason::expel: return "expel";
    case DispatchReason::balance: return "balance";
  }
  return "?";
}

inline constexpr std::size_t kNoVehicle = static_cast<std::size_t>(-1);

/// Order to move one idle empty vehicle. `issuer` is the station whose
/// agent took the decision; the other end always lies in its horizon.
struct Dispatch {
  std::size_t vehicle = kNoVehicle;
  StationIndex from = 0;
  StationIndex to = 0;
  DispatchReason reason = DispatchReason::call;
  StationIndex issuer = 0;

  friend bool operator==(const Dispatch&, const Dispatch&) = default;
};

/// Attractiveness of `candidate` as a source of an empty vehicle for the
/// requester; `dist` is the travel distance candidate -> requester.
inline double score_donor(const StationSnapshot& /*requester*/, const StationSnapshot& candidate, double dist,
                          double aisd, const ManagementParams& p) {
  const auto& w = p.weights;
  return w.standing * candidate.standing_empty - w.dist * (dist / aisd) - w.queue * candidate.queue_len -
         w.inbound * candidate.inbound_full;
}

/// Attractiveness of `candidate` as the target of an expelled vehicle.
inline double score_recipient(const StationSnapshot& candidate, double dist, double aisd, const ManagementParams& p) {
  const auto& w = p.weights;
  return w.berth * candidate.free_berths - w.dist * (dist / aisd) - w.standing * candidate.standing_empty;
}

namespace detail {

inline bool score_tie(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

struct Candidate {
  StationIndex station;
  double score;
  double dist;
};

// Highest score; ties go to the smaller distance, then the lower index.
inline bool better(const Candidate& a, const Candidate& b) {
  if (!score_tie(a.score, b.score)) return a.score > b.score;
  if (a.dist != b.dist) return a.dist < b.dist;
  return a.station < b.station;
}

}  // namespace detail

/// Whether a station's own state warrants calling an empty vehicle.
inline bool needs_call(const StationSnapshot& self, const ManagementParams& p) {
  return self.queue_len >= p.call_threshold && self.queue_len > 0 && self.standing_empty == 0 &&
         self.inbound_empty < self.queue_len;
}

/// Donor choice for a call: the visible station with standing empties and
/// the highest score.
inline std::optional<Dispatch> choose_call(const StationSnapshot& self, std::span<const StationSnapshot> visible,
                                           const DistanceMatrix& dm, const ManagementParams& p) {
  if (!needs_call(self, p)) return std::nullopt;
  std::optional<detail::Candidate> best;
  for (const auto& c : visible) {
    if (c.station == self.station || c.standing_empty == 0) continue;
    const double dist = dm(c.station, self.station);
    detail::Candidate cand{c.station, score_donor(self, c, dist, dm.aisd(), p), dist};
    if (!best || detail::better(cand, *best)) best = cand;
  }
  if (!best) return std::nullopt;
  return Dispatch{kNoVehicle, best->station, self.station, DispatchReason::call, self.station};
}

/// Recipient choice for expelling one idle empty from a full station.
inline std::optional<Dispatch> choose_expel(const StationSnapshot& self, std::span<const StationSnapshot> visible,
                                            const DistanceMatrix& dm, const ManagementParams& p) {
  if (self.standing_empty == 0) return std::nullopt;
  std::optional<detail::Candidate> best;
  std::optional<detail::Candidate> nearest;
  for (const auto& c : visible) {
    if (c.station == self.station || c.free_berths == 0) continue;
    const double dist = dm(self.station, c.station);
    detail::Candidate cand{c.station, score_recipient(c, dist, dm.aisd(), p), dist};
    if (cand.score > 0.0 && (!best || detail::better(cand, *best))) best = cand;
    if (!nearest || dist < nearest->dist || (dist == nearest->dist && c.station < nearest->station)) nearest = cand;
  }
  const auto& pick = best ? best : nearest;
  if (!pick) return std::nullopt;
  return Dispatch{kNoVehicle, self.station, pick->station, DispatchReason::expel, self.station};
}

/// Next horizon from the largest queue seen during the last period.
inline Horizon adapt_horizon(const Horizon& current, double observed_max_queue, const AdaptiveParams& a) {
  if (observed_max_queue > a.q_up) return Horizon::of(std::min(current.ratio() + a.step, a.h_max));
  if (observed_max_queue < a.q_down) return Horizon::of(std::max(std::min(current.ratio(), a.h_max) - a.step, a.h_min));
  return current;
}

/// Access the management layer has to the engine: station state and the
/// ability to move idle empties.
class StationPort {
 public:
  virtual ~StationPort() = default;
  virtual StationSnapshot snapshot(StationIndex station) const = 0;
  virtual void dispatch(const Dispatch& d) = 0;
};

/// The station agents. Every decision is taken by one station from its own
/// state and the snapshots of the stations within its horizon; reads go
/// through gather_snapshots() and own() only.
class Manager {
 public:
  using ReadObserver = std::function<void(StationIndex reader, StationIndex target)>;

  Manager(const DistanceMatrix& dm, ManagementParams params)
      : dm_(&dm), params_(std::move(params)), table_(dm, params_.horizon), period_max_(dm.size(), 0) {
    params_.validate();
  }

  const ManagementParams& params() const noexcept { return params_; }
  const HorizonTable& table() const noexcept { return table_; }
  std::uint64_t messages() const noexcept { return messages_; }

  void set_read_observer(ReadObserver obs) { observer_ = std::move(obs); }

  /// Snapshots of exactly the stations in the horizon of `station`.
  std::vector<StationSnapshot> gather_snapshots(StationIndex station, const StationPort& port) {
    std::vector<StationSnapshot> out;
    for (StationIndex j : table_.neighbors(station)) out.push_back(read(station, j, port));
    messages_ += out.size();
    return out;
  }

  StationSnapshot own(StationIndex station, const StationPort& port) const { return read(station, station, port); }

  std::optional<Dispatch> call_empty(StationIndex station, StationPort& port) {
    const auto self = own(station, port);
    if (!needs_call(self, params_)) return std::nullopt;
    const auto visible = gather_snapshots(station, port);
    auto d = choose_call(self, visible, *dm_, params_);
    if (d) port.dispatch(*d);
    return d;
  }

  std::optional<Dispatch> expel(StationIndex station, StationPort& port) {
    const auto self = own(station, port);
    if (self.standing_empty == 0) return std::nullopt;
    const auto visible = gather_snapshots(station, port);
    auto d = choose_expel(self, visible, *dm_, params_);
    if (d) port.dispatch(*d);
    return d;
  }

  /// One balancing round: starved stations (below the deficit threshold
  /// with a queue) pull one vehicle each from visible surplus stations,
  /// longest queue first. A donor gives at most one vehicle per round.
  std::vector<Dispatch> balance(StationPort& port) {
    const std::size_t n = dm_->size();
    std::vector<StationSnapshot> selves;
    for (StationIndex i = 0; i < n; ++i) selves.push_back(own(i, port));
    std::vector<StationIndex> requesters;
    for (const auto& s : selves)
      if (s.standing_empty < params_.deficit_threshold && s.queue_len > 0) requesters.push_back(s.station);
    std::stable_sort(requesters.begin(), requesters.end(), [&](StationIndex a, StationIndex b) {
      return selves[a].queue_len > selves[b].queue_len;
    });
    std::vector<bool> used(n, false);
    std::vector<Dispatch> out;
    for (StationIndex r : requesters) {
      const auto visible = gather_snapshots(r, port);
      std::optional<detail::Candidate> best;
      for (const auto& c : visible) {
        if (used[c.station] || c.standing_empty <= params_.surplus_threshold) continue;
        const double dist = (*dm_)(c.station, r);
        detail::Candidate cand{c.station, score_donor(selves[r], c, dist, dm_->aisd(), params_), dist};
        if (!best || detail::better(cand, *best)) best = cand;
      }
      if (!best) continue;
      used[best->station] = true;
      Dispatch d{kNoVehicle, best->station, r, DispatchReason::balance, r};
      port.dispatch(d);
      out.push_back(d);
    }
    return out;
  }

  /// Calls for every station until its call gate closes or no donor is
  /// visible, then expels where vehicles are held off-berth.
  void tick(StationPort& port) {
    for (StationIndex i = 0; i < dm_->size(); ++i)
      while (call_empty(i, port)) {
      }
    for (StationIndex i = 0; i < dm_->size(); ++i) {
      auto self = own(i, port);
      for (std::uint32_t k = 0; k < self.holding; ++k)
        if (!expel(i, port)) break;
    }
  }

  /// Local queue observation feeding the adaptive controller.
  void observe_queue(StationIndex station, std::size_t len) {
    period_max_[station] = std::max<std::size_t>(period_max_[station], len);
  }

  /// Close an adaptation period: each station moves its own horizon.
  void adapt(StationPort& port) {
    if (!params_.adaptive) return;
    for (StationIndex i = 0; i < dm_->size(); ++i) {
      const auto next = adapt_horizon(table_.horizon(i), static_cast<double>(period_max_[i]), *params_.adaptive);
      if (!(next == table_.horizon(i))) table_.set_horizon(*dm_, i, next);
      period_max_[i] = own(i, port).queue_len;
    }
  }

 private:
  StationSnapshot read(StationIndex reader, StationIndex target, const StationPort& port) const {
    if (observer_) observer_(reader, target);
    return port.snapshot(target);
  }

  const DistanceMatrix* dm_;
  ManagementParams params_;
  HorizonTable table_;
  std::vector<std::size_t> period_max_;
  std::uint64_t messages_ = 0;
  ReadObserver observer_;
};

}  // namespace prt
