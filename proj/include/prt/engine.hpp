#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "prt/config.hpp"
#include "prt/demand.hpp"
#include "prt/error.hpp"
#include "prt/management.hpp"
#include "prt/metrics.hpp"
#include "prt/network.hpp"
#include "prt/time.hpp"

namespace prt {

/// Raised when an internal consistency audit fails.
class AuditFailure : public std::logic_error {
  using std::logic_error::logic_error;
};

enum class EventKind {
  phase_change,
  vehicle_arrival,
  alighting_complete,
  boarding_complete,
  order_arrival,
  management_tick,
  balance_tick,
  adapt_tick,
  end_of_run,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::phase_change: return "PhaseChange";
    case EventKind::vehicle_arrival: return "VehicleArrival";
    case EventKind::alighting_complete: return "AlightingComplete";
    case EventKind::boarding_complete: return "BoardingComplete";
    case EventKind::order_arrival: return "OrderArrival";
    case EventKind::management_tick: return "ManagementTick";
    case EventKind::balance_tick: return "BalanceTick";
    case EventKind::adapt_tick: return "AdaptTick";
    case EventKind::end_of_run: return "EndOfRun";
  }
  return "?";
}

enum class VehicleState { idle, boarding, alighting, en_route, holding };

struct Vehicle {
  std::size_t id = 0;
  VehicleState state = VehicleState::idle;
  /// Station the vehicle stands at, or is travelling to.
  StationIndex station = 0;
  bool occupied = false;
  std::optional<std::size_t> order;
  SimTime departed{0};
  SimTime arrives{0};
};

struct StationState {
  int berth_count = 0;
  int occupied_berths = 0;
  std::deque<std::size_t> queue;    // order indices, FIFO
  std::deque<std::size_t> idle;     // vehicle ids, longest idle first
  std::deque<std::size_t> holding;  // vehicle ids waiting for a berth
  std::uint32_t inbound_empty = 0;
  std::uint32_t inbound_full = 0;
};

/// Hooks for tests and tracing. All callbacks run inside the event loop.
class RunObserver {
 public:
  virtual ~RunObserver() = default;
  virtual void on_event(SimTime, EventKind, std::optional<StationIndex>, std::optional<std::size_t> /*vehicle*/,
                        std::optional<std::size_t> /*order*/) {}
  virtual void on_queue(SimTime, StationIndex, std::size_t /*len*/) {}
  virtual void on_dispatch(SimTime, const Dispatch&) {}
  virtual void on_wait(const TransitOrder&, SimTime /*boarding_start*/) {}
};

/// CSV event trace: time,kind,station,vehicle,order.
class TraceWriter : public RunObserver {
 public:
  explicit TraceWriter(std::ostream& os, const Network& net) : os_(os), net_(net) { os_ << "time,kind,station,vehicle,order\n"; }

  void on_event(SimTime t, EventKind k, std::optional<StationIndex> s, std::optional<std::size_t> v,
                std::optional<std::size_t> o) override {
    os_ << format_fixed(to_seconds(t), 6) << ',' << to_string(k) << ',' << (s ? net_.station(*s).id : "") << ','
        << (v ? std::to_string(*v) : "") << ',' << (o ? std::to_string(*o) : "") << '\n';
  }

 private:
  std::ostream& os_;
  const Network& net_;
};

struct SimulationOptions {
  RunObserver* observer = nullptr;
  /// Run the conservation/berth audit after every event.
  bool audit = false;
};

/// Order-flow totals; generated == delivered + queued + boarding + in_transit.
struct OrderCounts {
  std::uint64_t generated = 0;
  std::uint64_t queued = 0;
  std::uint64_t boarding = 0;
  std::uint64_t in_transit = 0;
  std::uint64_t delivered = 0;
};

/// Sequential discrete-event simulation of one run.
class Simulation : private StationPort {
 public:
  Simulation(const Scenario& scenario, std::uint64_t seed, SimulationOptions options = {})
      : sc_(scenario),
        seed_(seed),
        opts_(options),
        dm_(build_distance_matrix(sc_.network)),
        manager_(dm_, sc_.management),
        metrics_(sc_.network.size(), sc_.heavy_end(), sc_.run.drain_window) {
    if (!(sc_.fleet.speed > 0.0)) throw ValidationError("fleet.speed", "must be positive");
    build_routes();
    place_fleet();
    orders_ = generate_orders(sc_.phases, sc_.network.size(), seed_);
    if (!sc_.orders.empty()) merge_fixed_orders();
    for (const auto& o : orders_) {
      if (o.origin >= n() || o.destination >= n() || o.origin == o.destination)
        throw ValidationError("orders", "order " + std::to_string(o.id) + " has invalid stations");
      if (o.size < 1 || o.size > sc_.fleet.capacity)
        throw ValidationError("orders", "order " + std::to_string(o.id) + " exceeds vehicle capacity");
    }
    if (vehicles_.empty() && !orders_.empty())
      throw DeadlockDetected("orders are generated but the fleet is empty; no vehicle can ever move");
    schedule_initial();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  /// Processes one event; false once EndOfRun has been handled.
  bool step() {
    if (finished_ || events_.empty()) return false;
    Event e = events_.top();
    events_.pop();
    if (e.time < now_) throw AuditFailure("event scheduled in the past");
    now_ = e.time;
    handle(e);
    if (opts_.audit) audit();
    return !finished_;
  }

  void run_until(SimTime t) {
    while (!finished_ && !events_.empty() && events_.top().time <= t) step();
  }

  MetricsReport run() {
    while (step()) {
    }
    return report(sc_.run.scope);
  }

  MetricsReport report(const Scope& scope) const {
    auto r = metrics_.finalize(scope, now_);
    r.scenario = sc_.name;
    r.horizon = sc_.management.horizon.to_string();
    if (sc_.management.adaptive) r.horizon += "+adaptive";
    r.seed = seed_;
    r.scope = scope.is_network() ? "network" : sc_.network.station(*scope.station).id;
    r.fleet = vehicles_.size();
    r.messages = manager_.messages();
    return r;
  }

  /// Sends idle vehicle `vehicle` empty from `from` to `to`.
  void dispatch_empty(std::size_t vehicle, StationIndex from, StationIndex to,
                      DispatchReason reason = DispatchReason::balance) {
    if (from == to) throw SameStation("dispatch to the station the vehicle stands at");
    Vehicle& v = vehicles_.at(vehicle);
    if (v.state != VehicleState::idle || v.station != from || v.occupied)
      throw VehicleNotIdle("vehicle " + std::to_string(vehicle) + " is not idle at " + sc_.network.station(from).id);
    auto& st = stations_[from];
    st.idle.erase(std::find(st.idle.begin(), st.idle.end(), vehicle));
    --st.occupied_berths;
    v.state = VehicleState::en_route;
    v.station = to;
    v.departed = now_;
    v.arrives = now_ + travel_[from * n() + to];
    ++stations_[to].inbound_empty;
    schedule(v.arrives, EventKind::vehicle_arrival, vehicle);
    switch (reason) {
      case DispatchReason::call: ++metrics_.dispatches().calls; break;
      case DispatchReason::expel: ++metrics_.dispatches().expels; break;
      case DispatchReason::balance: ++metrics_.dispatches().balance; break;
    }
    admit_holding(from);
  }

  SimTime now() const noexcept { return now_; }
  bool finished() const noexcept { return finished_; }
  const Scenario& scenario() const noexcept { return sc_; }
  const DistanceMatrix& distances() const noexcept { return dm_; }
  const Manager& manager() const noexcept { return manager_; }
  const std::vector<Vehicle>& vehicles() const noexcept { return vehicles_; }
  const std::vector<TransitOrder>& orders() const noexcept { return orders_; }
  const StationState& station(StationIndex i) const { return stations_.at(i); }
  const Path& path(StationIndex from, StationIndex to) const { return paths_.at(from * n() + to); }
  SimTime travel_time(StationIndex from, StationIndex to) const { return travel_[from * n() + to]; }
  StationSnapshot snapshot_of(StationIndex i) const { return snapshot(i); }

  OrderCounts order_counts() const {
    OrderCounts c;
    c.generated = arrived_;
    c.delivered = delivered_;
    for (const auto& s : stations_) c.queued += s.queue.size();
    for (const auto& v : vehicles_) {
      if (!v.order) continue;
      if (v.state == VehicleState::boarding)
        ++c.boarding;
      else
        ++c.in_transit;
    }
    return c;
  }

  /// Checks vehicle, order and berth conservation; throws AuditFailure.
  void audit() const {
    std::size_t counted = 0;
    std::vector<int> at_berth(n(), 0);
    std::vector<std::uint32_t> in_empty(n(), 0), in_full(n(), 0);
    for (const auto& v : vehicles_) {
      switch (v.state) {
        case VehicleState::idle:
        case VehicleState::boarding:
        case VehicleState::alighting: ++at_berth[v.station]; break;
        case VehicleState::en_route: (v.occupied ? in_full : in_empty)[v.station]++; break;
        case VehicleState::holding: break;
      }
      if (v.occupied != v.order.has_value() && v.state != VehicleState::boarding)
        throw AuditFailure("vehicle " + std::to_string(v.id) + " occupancy disagrees with its order");
      ++counted;
    }
    std::size_t in_stations = 0;
    for (StationIndex i = 0; i < n(); ++i) {
      const auto& s = stations_[i];
      if (s.occupied_berths != at_berth[i]) throw AuditFailure("berth count mismatch at " + sc_.network.station(i).id);
      if (s.occupied_berths > s.berth_count) throw AuditFailure("berth capacity exceeded at " + sc_.network.station(i).id);
      if (s.inbound_empty != in_empty[i] || s.inbound_full != in_full[i])
        throw AuditFailure("inbound counters mismatch at " + sc_.network.station(i).id);
      if (!s.queue.empty() && !s.idle.empty()) throw AuditFailure("idle vehicle next to a waiting queue");
      in_stations += static_cast<std::size_t>(at_berth[i]) + s.holding.size();
      in_stations += in_empty[i] + in_full[i];
    }
    if (counted != fleet_size_ || in_stations != fleet_size_) throw AuditFailure("vehicle conservation violated");
    const auto c = order_counts();
    if (c.generated != c.delivered + c.queued + c.boarding + c.in_transit)
      throw AuditFailure("order conservation violated");
  }

 private:
  struct Event {
    SimTime time;
    EventKind kind;
    std::uint64_t seq;
    std::size_t arg;

    // Min-heap on (time, kind, seq).
    bool operator>(const Event& o) const {
      if (time != o.time) return time > o.time;
      if (kind != o.kind) return kind > o.kind;
      return seq > o.seq;
    }
  };

  std::size_t n() const noexcept { return sc_.network.size(); }

  void schedule(SimTime t, EventKind k, std::size_t arg = 0) { events_.push(Event{t, k, seq_++, arg}); }

  void build_routes() {
    paths_.resize(n() * n());
    travel_.assign(n() * n(), SimTime{0});
    for (StationIndex i = 0; i < n(); ++i)
      for (StationIndex j = 0; j < n(); ++j) {
        if (i == j) continue;
        auto& p = paths_[i * n() + j];
        p = route(sc_.network, dm_, i, j);
        travel_[i * n() + j] = from_seconds(p.length() / sc_.fleet.speed);
      }
  }

  void place_fleet() {
    stations_.resize(n());
    std::size_t total_berths = 0;
    for (StationIndex i = 0; i < n(); ++i) {
      stations_[i].berth_count = sc_.network.station(i).berth_count;
      total_berths += static_cast<std::size_t>(stations_[i].berth_count);
    }
    std::vector<std::size_t> count(n(), 0);
    if (!sc_.fleet.initial.empty()) {
      if (sc_.fleet.initial.size() != n()) throw ValidationError("fleet.initial", "expected one count per station");
      std::size_t sum = 0;
      for (StationIndex i = 0; i < n(); ++i) {
        if (sc_.fleet.initial[i] > static_cast<std::size_t>(stations_[i].berth_count))
          throw ValidationError("fleet.initial", "more vehicles than berths at " + sc_.network.station(i).id);
        count[i] = sc_.fleet.initial[i];
        sum += count[i];
      }
      if (sum != sc_.fleet.size) throw ValidationError("fleet.initial", "counts must add up to fleet.size");
    } else {
      if (sc_.fleet.size > total_berths) throw ValidationError("fleet.size", "fleet exceeds the total berth count");
      StationIndex s = 0;
      for (std::size_t k = 0; k < sc_.fleet.size; ++k) {
        while (count[s] >= static_cast<std::size_t>(stations_[s].berth_count)) s = (s + 1) % n();
        ++count[s];
        s = (s + 1) % n();
      }
    }
    for (StationIndex i = 0; i < n(); ++i)
      for (std::size_t k = 0; k < count[i]; ++k) {
        Vehicle v;
        v.id = vehicles_.size();
        v.station = i;
        stations_[i].idle.push_back(v.id);
        ++stations_[i].occupied_berths;
        vehicles_.push_back(v);
      }
    fleet_size_ = vehicles_.size();
  }

  void merge_fixed_orders() {
    orders_.insert(orders_.end(), sc_.orders.begin(), sc_.orders.end());
    std::stable_sort(orders_.begin(), orders_.end(), [](const TransitOrder& a, const TransitOrder& b) {
      return a.created_at < b.created_at;
    });
    for (std::size_t i = 0; i < orders_.size(); ++i) orders_[i].id = i;
  }

  void schedule_initial() {
    for (std::size_t i = 0; i < orders_.size(); ++i) schedule(orders_[i].created_at, EventKind::order_arrival, i);
    const SimTime end = sc_.run_end();
    for (std::size_t p = 0; p < sc_.phases.size(); ++p) {
      schedule(sc_.phases[p].start, EventKind::phase_change, p);
      if (sc_.phases[p].end <= end) schedule(sc_.phases[p].end, EventKind::phase_change, p);
    }
    const auto& mp = sc_.management;
    for (SimTime t = mp.tick_period; t < end; t += mp.tick_period) schedule(t, EventKind::management_tick);
    for (SimTime t = mp.balance_period; t < end; t += mp.balance_period) schedule(t, EventKind::balance_tick);
    if (mp.adaptive)
      for (SimTime t = mp.adaptive->period; t < end; t += mp.adaptive->period) schedule(t, EventKind::adapt_tick);
    schedule(end, EventKind::end_of_run);
  }

  void notify(EventKind k, std::optional<StationIndex> s, std::optional<std::size_t> v = std::nullopt,
              std::optional<std::size_t> o = std::nullopt) {
    if (opts_.observer) opts_.observer->on_event(now_, k, s, v, o);
  }

  void queue_changed(StationIndex s) {
    const auto len = stations_[s].queue.size();
    metrics_.observe_queue(s, now_, len);
    manager_.observe_queue(s, len);
    if (opts_.observer) opts_.observer->on_queue(now_, s, len);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::phase_change: notify(e.kind, std::nullopt); break;
      case EventKind::order_arrival: handle_order_arrival(e.arg); break;
      case EventKind::vehicle_arrival: handle_vehicle_arrival(e.arg); break;
      case EventKind::alighting_complete: handle_alighting_complete(e.arg); break;
      case EventKind::boarding_complete: handle_boarding_complete(e.arg); break;
      case EventKind::management_tick:
        notify(e.kind, std::nullopt);
        manager_.tick(*this);
        break;
      case EventKind::balance_tick:
        notify(e.kind, std::nullopt);
        manager_.balance(*this);
        break;
      case EventKind::adapt_tick:
        notify(e.kind, std::nullopt);
        manager_.adapt(*this);
        break;
      case EventKind::end_of_run:
        notify(e.kind, std::nullopt);
        finished_ = true;
        break;
    }
  }

  void handle_order_arrival(std::size_t idx) {
    const auto& o = orders_[idx];
    notify(EventKind::order_arrival, o.origin, std::nullopt, idx);
    ++arrived_;
    metrics_.order_created(o);
    stations_[o.origin].queue.push_back(idx);
    queue_changed(o.origin);
    serve_queue(o.origin);
    if (!stations_[o.origin].queue.empty()) manager_.call_empty(o.origin, *this);
  }

  // Pairs idle vehicles with queue heads, FIFO on both sides.
  void serve_queue(StationIndex s) {
    auto& st = stations_[s];
    bool changed = false;
    while (!st.queue.empty() && !st.idle.empty()) {
      const std::size_t idx = st.queue.front();
      st.queue.pop_front();
      const std::size_t vid = st.idle.front();
      st.idle.pop_front();
      Vehicle& v = vehicles_[vid];
      v.state = VehicleState::boarding;
      v.order = idx;
      metrics_.record_wait(orders_[idx], now_);
      if (opts_.observer) opts_.observer->on_wait(orders_[idx], now_);
      schedule(now_ + from_seconds(sc_.fleet.boarding_time), EventKind::boarding_complete, vid);
      changed = true;
    }
    if (changed) queue_changed(s);
  }

  void handle_boarding_complete(std::size_t vid) {
    Vehicle& v = vehicles_[vid];
    const auto& o = orders_[*v.order];
    const StationIndex from = v.station;
    notify(EventKind::boarding_complete, from, vid, *v.order);
    --stations_[from].occupied_berths;
    v.state = VehicleState::en_route;
    v.occupied = true;
    v.station = o.destination;
    v.departed = now_;
    v.arrives = now_ + travel_[from * n() + o.destination];
    ++stations_[o.destination].inbound_full;
    schedule(v.arrives, EventKind::vehicle_arrival, vid);
    admit_holding(from);
  }

  void handle_vehicle_arrival(std::size_t vid) {
    Vehicle& v = vehicles_[vid];
    const StationIndex s = v.station;
    notify(EventKind::vehicle_arrival, s, vid, v.order);
    auto& st = stations_[s];
    if (v.occupied)
      --st.inbound_full;
    else
      --st.inbound_empty;
    if (st.occupied_berths < st.berth_count) {
      ++st.occupied_berths;
      at_berth(vid);
      return;
    }
    v.state = VehicleState::holding;
    st.holding.push_back(vid);
    manager_.expel(s, *this);
  }

  // Frees berths at s for vehicles waiting off-berth.
  void admit_holding(StationIndex s) {
    auto& st = stations_[s];
    while (!st.holding.empty() && st.occupied_berths < st.berth_count) {
      const std::size_t vid = st.holding.front();
      st.holding.pop_front();
      ++st.occupied_berths;
      at_berth(vid);
    }
  }

  void at_berth(std::size_t vid) {
    Vehicle& v = vehicles_[vid];
    if (v.occupied) {
      v.state = VehicleState::alighting;
      schedule(now_ + from_seconds(sc_.fleet.alighting_time), EventKind::alighting_complete, vid);
      return;
    }
    v.state = VehicleState::idle;
    stations_[v.station].idle.push_back(vid);
    serve_queue(v.station);
  }

  void handle_alighting_complete(std::size_t vid) {
    Vehicle& v = vehicles_[vid];
    notify(EventKind::alighting_complete, v.station, vid, v.order);
    ++delivered_;
    v.occupied = false;
    v.order.reset();
    v.state = VehicleState::idle;
    stations_[v.station].idle.push_back(vid);
    serve_queue(v.station);
  }

  // StationPort
  StationSnapshot snapshot(StationIndex i) const override {
    const auto& st = stations_[i];
    StationSnapshot s;
    s.station = i;
    s.standing_empty = static_cast<std::uint32_t>(st.idle.size());
    s.free_berths = static_cast<std::uint32_t>(st.berth_count - st.occupied_berths);
    s.queue_len = static_cast<std::uint32_t>(st.queue.size());
    s.inbound_empty = st.inbound_empty;
    s.inbound_full = st.inbound_full;
    s.holding = static_cast<std::uint32_t>(st.holding.size());
    s.timestamp = now_;
    return s;
  }

  void dispatch(const Dispatch& d) override {
    const StationIndex other = d.issuer == d.to ? d.from : d.to;
    if (!manager_.table().contains(d.issuer, other))
      throw AuditFailure("dispatch outside the horizon of station " + sc_.network.station(d.issuer).id);
    const auto& st = stations_[d.from];
    if (st.idle.empty()) throw VehicleNotIdle("no idle vehicle at " + sc_.network.station(d.from).id);
    Dispatch done = d;
    done.vehicle = st.idle.front();
    dispatch_empty(done.vehicle, d.from, d.to, d.reason);
    if (opts_.observer) opts_.observer->on_dispatch(now_, done);
  }

  Scenario sc_;
  std::uint64_t seed_;
  SimulationOptions opts_;
  DistanceMatrix dm_;
  Manager manager_;
  MetricsAccumulator metrics_;
  std::vector<Path> paths_;
  std::vector<SimTime> travel_;
  std::vector<StationState> stations_;
  std::vector<Vehicle> vehicles_;
  std::size_t fleet_size_ = 0;
  std::vector<TransitOrder> orders_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  SimTime now_{0};
  bool finished_ = false;
  std::uint64_t arrived_ = 0;
  std::uint64_t delivered_ = 0;
};

/// One complete run with `params` in place of the scenario's management
/// section.
inline MetricsReport run(const Scenario& scenario, const ManagementParams& params, std::uint64_t seed,
                         SimulationOptions options = {}) {
  Scenario sc = scenario;
  sc.management = params;
  Simulation sim(sc, seed, options);
  return sim.run();
}

}  // namespace prt
