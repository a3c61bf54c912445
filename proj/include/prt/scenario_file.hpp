#pragma once

// Scenario files are YAML documents with the sections network, fleet,
// demand, management and run. Every setting has a default except the
// network itself; emit_scenario() writes the fully resolved configuration
// so that load_scenario(emit_scenario(s)) reproduces s.

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prt/config.hpp"
#include "prt/error.hpp"

namespace prt {

struct LoadedScenario {
  Scenario scenario;
  /// Defaults that were filled in and deserve a mention.
  std::vector<std::string> notices;
};

namespace detail {

class YamlField {
 public:
  YamlField(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {}

  const YAML::Node& node() const { return node_; }
  const std::string& path() const { return path_; }
  bool defined() const { return node_.IsDefined() && !node_.IsNull(); }

  [[noreturn]] void fail(const std::string& what) const {
    std::string p = path_;
    if (node_.IsDefined() && node_.Mark().line >= 0) p += " (line " + std::to_string(node_.Mark().line + 1) + ")";
    throw ValidationError(p, what);
  }

  YamlField operator[](const std::string& key) const {
    if (defined() && !node_.IsMap()) fail("expected a mapping");
    YAML::Node child = defined() ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
    return YamlField(child, path_.empty() ? key : path_ + "." + key);
  }

  YamlField at(std::size_t i) const { return YamlField(node_[i], path_ + "[" + std::to_string(i) + "]"); }

  std::size_t size() const {
    if (!defined()) return 0;
    if (!node_.IsSequence()) fail("expected a list");
    return node_.size();
  }

  template <typename T>
  T as() const {
    if (!defined()) fail("missing required field");
    try {
      return node_.as<T>();
    } catch (const YAML::Exception&) {
      fail("cannot convert value '" + scalar() + "'");
    }
  }

  template <typename T>
  T get(const T& fallback) const {
    return defined() ? as<T>() : fallback;
  }

  double number(double fallback) const {
    const double v = get<double>(fallback);
    if (!std::isfinite(v)) fail("must be finite");
    return v;
  }

  std::string scalar() const { return node_.IsScalar() ? node_.Scalar() : std::string{}; }

  void allow_only(std::initializer_list<const char*> keys) const {
    if (!defined()) return;
    if (!node_.IsMap()) fail("expected a mapping");
    for (const auto& kv : node_) {
      const auto k = kv.first.as<std::string>();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        YamlField(kv.first, path_.empty() ? k : path_ + "." + k).fail("unknown field");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
};

inline StationIndex station_ref(const Network& net, const YamlField& f) {
  const auto id = f.as<std::string>();
  auto i = net.find(id);
  if (!i) f.fail("unknown station '" + id + "'");
  return *i;
}

inline SimTime seconds_field(const YamlField& f, SimTime fallback) {
  if (!f.defined()) return fallback;
  const double v = f.number(0.0);
  return from_seconds(v);
}

inline Network load_network(const YamlField& nf) {
  if (!nf.defined()) nf.fail("missing network section");
  nf.allow_only({"stations", "links", "event_station"});
  const auto stations = nf["stations"];
  if (stations.size() == 0) stations.fail("at least one station is required");
  std::vector<StationDescriptor> ss;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    const auto s = stations.at(i);
    s.allow_only({"id", "berths"});
    StationDescriptor d;
    d.id = s["id"].as<std::string>();
    d.berth_count = s["berths"].get<int>(4);
    if (d.berth_count <= 0) s["berths"].fail("berths must be positive");
    ss.push_back(d);
  }
  const auto links = nf["links"];
  std::vector<LinkDescriptor> ls;
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto l = links.at(i);
    l.allow_only({"from", "to", "length"});
    ls.push_back({l["from"].as<std::string>(), l["to"].as<std::string>(), l["length"].as<double>()});
  }
  try {
    Network net(std::move(ss), ls);
    build_distance_matrix(net);
    return net;
  } catch (const ValidationError& e) {
    // Re-anchor the error on the offending YAML node.
    const std::string& p = e.path();
    const auto open = p.find('[');
    if (open != std::string::npos) {
      const auto idx = static_cast<std::size_t>(std::stoul(p.substr(open + 1)));
      const auto list = p.rfind("links", open) != std::string::npos ? links : stations;
      if (idx < list.size()) list.at(idx).fail(std::string(e.what()).substr(p.size() + 2));
    }
    throw;
  } catch (const UnreachablePair& e) {
    nf["links"].fail(std::string("network is not strongly connected: ") + e.what());
  }
}

inline GroupSizeDistribution load_group_sizes(const YamlField& f) {
  if (!f.defined()) return GroupSizeDistribution::uniform();
  if (f.size() != kMaxGroupSize) f.fail("expected 4 probabilities for group sizes 1..4");
  std::array<double, kMaxGroupSize> p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = f.at(i).as<double>();
  try {
    return GroupSizeDistribution(p);
  } catch (const ValidationError& e) {
    f.fail(std::string(e.what()).substr(e.path().size() + 2));
  }
}

inline DemandPhase load_phase(const YamlField& f, const Network& net) {
  f.allow_only({"name", "start_min", "end_min", "heavy", "arrivals", "destinations", "group_sizes"});
  const std::size_t n = net.size();
  DemandPhase p;
  p.name = f["name"].get<std::string>("phase");
  p.start = from_minutes(f["start_min"].number(0.0));
  p.end = from_minutes(f["end_min"].as<double>());
  p.heavy = f["heavy"].get<bool>(false);
  p.group_dist = load_group_sizes(f["group_sizes"]);
  p.mean_interarrival_min.assign(n, std::nullopt);
  const auto arr = f["arrivals"];
  if (!arr.defined() || !arr.node().IsMap()) arr.fail("expected a mapping station -> mean inter-arrival minutes");
  for (const auto& kv : arr.node()) {
    const YamlField key(kv.first, arr.path());
    const YamlField val(kv.second, arr.path() + "." + kv.first.as<std::string>());
    const double mean = val.as<double>();
    if (!(mean > 0.0)) val.fail("mean inter-arrival must be positive");
    if (key.as<std::string>() == "all")
      std::fill(p.mean_interarrival_min.begin(), p.mean_interarrival_min.end(), mean);
    else
      p.mean_interarrival_min[station_ref(net, key)] = mean;
  }
  const auto dst = f["destinations"];
  p.destination_weights.assign(n, std::vector<double>(n, 0.0));
  if (!dst.defined() || dst.scalar() == "uniform") {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) p.destination_weights[i][j] = i == j ? 0.0 : 1.0;
  } else if (dst.node().IsMap() && dst["only"].defined()) {
    dst.allow_only({"only"});
    const auto target = station_ref(net, dst["only"]);
    for (std::size_t i = 0; i < n; ++i)
      if (i != target) p.destination_weights[i][target] = 1.0;
  } else if (dst.node().IsMap()) {
    for (const auto& row : dst.node()) {
      const YamlField rk(row.first, dst.path());
      const auto i = station_ref(net, rk);
      const YamlField rv(row.second, dst.path() + "." + rk.as<std::string>());
      if (!rv.node().IsMap()) rv.fail("expected a mapping station -> weight");
      for (const auto& cell : rv.node()) {
        const auto j = station_ref(net, YamlField(cell.first, rv.path()));
        const YamlField w(cell.second, rv.path() + "." + cell.first.as<std::string>());
        if (i == j && w.as<double>() != 0.0) w.fail("weight of the origin itself must be 0");
        p.destination_weights[i][j] = w.as<double>();
      }
    }
  } else {
    dst.fail("expected 'uniform', {only: STATION} or a weight matrix");
  }
  try {
    validate_phase(p, n, f.path());
  } catch (const ValidationError& e) {
    f.fail(e.what());
  }
  return p;
}

inline Horizon load_horizon(const YamlField& f) {
  try {
    if (f.node().IsScalar()) return Horizon::parse(f.scalar());
  } catch (const Error& e) {
    f.fail(e.what());
  }
  f.fail("expected a number or 'inf'");
}

inline ManagementParams load_management(const YamlField& f, std::vector<std::string>& notices) {
  f.allow_only({"horizon", "weights", "call_threshold", "surplus_threshold", "deficit_threshold", "tick_period_s",
                "balance_period_s", "adaptive"});
  ManagementParams m;
  if (f["horizon"].defined()) {
    m.horizon = load_horizon(f["horizon"]);
  } else {
    notices.push_back("management.horizon not set; using no horizon (inf)");
  }
  const auto w = f["weights"];
  w.allow_only({"standing", "dist", "queue", "inbound", "berth"});
  m.weights.standing = w["standing"].number(m.weights.standing);
  m.weights.dist = w["dist"].number(m.weights.dist);
  m.weights.queue = w["queue"].number(m.weights.queue);
  m.weights.inbound = w["inbound"].number(m.weights.inbound);
  m.weights.berth = w["berth"].number(m.weights.berth);
  m.call_threshold = f["call_threshold"].number(m.call_threshold);
  m.surplus_threshold = f["surplus_threshold"].number(m.surplus_threshold);
  m.deficit_threshold = f["deficit_threshold"].number(m.deficit_threshold);
  m.tick_period = seconds_field(f["tick_period_s"], m.tick_period);
  m.balance_period = seconds_field(f["balance_period_s"], m.balance_period);
  const auto a = f["adaptive"];
  a.allow_only({"enabled", "q_up", "q_down", "step", "h_min", "h_max", "period_s"});
  if (a["enabled"].get<bool>(false)) {
    AdaptiveParams ap;
    ap.q_up = a["q_up"].number(ap.q_up);
    ap.q_down = a["q_down"].number(ap.q_down);
    ap.step = a["step"].number(ap.step);
    ap.h_min = a["h_min"].number(ap.h_min);
    ap.h_max = a["h_max"].get<double>(ap.h_max);
    ap.period = seconds_field(a["period_s"], ap.period);
    m.adaptive = ap;
  }
  try {
    m.validate();
  } catch (const ValidationError& e) {
    f.fail(e.what());
  }
  return m;
}

}  // namespace detail

/// Parses and validates a scenario document.
inline LoadedScenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  using detail::YamlField;
  const YamlField doc(root, "");
  if (!doc.defined() || !root.IsMap()) throw ParseError(1, 1, "scenario must be a YAML mapping");
  doc.allow_only({"name", "network", "fleet", "demand", "management", "run"});

  LoadedScenario out;
  Scenario& sc = out.scenario;
  sc.name = doc["name"].get<std::string>("scenario");
  sc.network = detail::load_network(doc["network"]);
  const std::size_t n = sc.network.size();
  if (doc["network"]["event_station"].defined())
    sc.event_station = detail::station_ref(sc.network, doc["network"]["event_station"]);

  const auto fleet = doc["fleet"];
  fleet.allow_only({"size", "speed", "boarding_time", "alighting_time", "capacity", "initial"});
  sc.fleet.size = fleet["size"].get<std::size_t>(3 * n);
  sc.fleet.speed = fleet["speed"].number(sc.fleet.speed);
  sc.fleet.boarding_time = fleet["boarding_time"].number(sc.fleet.boarding_time);
  sc.fleet.alighting_time = fleet["alighting_time"].number(sc.fleet.alighting_time);
  sc.fleet.capacity = fleet["capacity"].get<int>(sc.fleet.capacity);
  if (!(sc.fleet.speed > 0.0)) fleet["speed"].fail("must be positive");
  if (sc.fleet.boarding_time < 0.0) fleet["boarding_time"].fail("must be nonnegative");
  if (sc.fleet.alighting_time < 0.0) fleet["alighting_time"].fail("must be nonnegative");
  if (sc.fleet.capacity < kMaxGroupSize) fleet["capacity"].fail("must hold the largest group (4)");
  if (fleet["initial"].defined()) {
    const auto init = fleet["initial"];
    if (!init.node().IsMap()) init.fail("expected a mapping station -> vehicle count");
    sc.fleet.initial.assign(n, 0);
    std::size_t sum = 0;
    for (const auto& kv : init.node()) {
      const auto i = detail::station_ref(sc.network, YamlField(kv.first, init.path()));
      const YamlField c(kv.second, init.path() + "." + kv.first.as<std::string>());
      sc.fleet.initial[i] = c.as<std::size_t>();
      if (sc.fleet.initial[i] > static_cast<std::size_t>(sc.network.station(i).berth_count))
        c.fail("more vehicles than berths");
      sum += sc.fleet.initial[i];
    }
    if (!fleet["size"].defined()) sc.fleet.size = sum;
    if (sum != sc.fleet.size) init.fail("counts must add up to fleet.size");
  } else {
    std::size_t berths = 0;
    for (const auto& s : sc.network.stations()) berths += static_cast<std::size_t>(s.berth_count);
    if (sc.fleet.size > berths) fleet["size"].fail("fleet exceeds the total berth count");
  }

  const auto run = doc["run"];
  run.allow_only({"drain_window_min", "seed", "scope"});
  sc.run.drain_window = from_minutes(run["drain_window_min"].number(120.0));
  if (sc.run.drain_window < SimTime{0}) run["drain_window_min"].fail("must be nonnegative");
  sc.run.seed = run["seed"].get<std::uint64_t>(1);
  if (run["scope"].defined() && run["scope"].as<std::string>() != "network")
    sc.run.scope = Scope::at(detail::station_ref(sc.network, run["scope"]));

  const auto demand = doc["demand"];
  demand.allow_only({"kind", "phases", "orders"});
  if (demand["kind"].defined()) {
    if (demand["phases"].defined()) demand["phases"].fail("give either a named kind or explicit phases");
    try {
      sc.kind = parse_scenario_kind(demand["kind"].as<std::string>());
      sc.phases = build_scenario(*sc.kind, sc.network, sc.event_station,
                                 from_seconds(EventTask{}.travel_window_h * 3600.0) + sc.run.drain_window);
    } catch (const UnknownEventStation& e) {
      demand["kind"].fail(e.what());
    } catch (const ValidationError& e) {
      demand["kind"].fail(e.what());
    }
  }
  const auto phases = demand["phases"];
  for (std::size_t i = 0; i < phases.size(); ++i) sc.phases.push_back(detail::load_phase(phases.at(i), sc.network));
  const auto orders = demand["orders"];
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto o = orders.at(i);
    o.allow_only({"origin", "destination", "size", "time_s"});
    TransitOrder t;
    t.origin = detail::station_ref(sc.network, o["origin"]);
    t.destination = detail::station_ref(sc.network, o["destination"]);
    if (t.origin == t.destination) o.fail("origin and destination must differ");
    t.size = o["size"].get<int>(1);
    if (t.size < 1 || t.size > sc.fleet.capacity) o["size"].fail("group size out of range");
    t.created_at = from_seconds(o["time_s"].number(0.0));
    if (t.created_at < SimTime{0}) o["time_s"].fail("must be nonnegative");
    t.id = i;
    sc.orders.push_back(t);
  }

  sc.management = detail::load_management(doc["management"], out.notices);
  return out;
}

inline LoadedScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path, "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

namespace detail {

inline void emit_phase(YAML::Emitter& out, const DemandPhase& p, const Network& net) {
  const std::size_t n = net.size();
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << p.name;
  out << YAML::Key << "start_min" << YAML::Value << to_minutes(p.start);
  out << YAML::Key << "end_min" << YAML::Value << to_minutes(p.end);
  out << YAML::Key << "heavy" << YAML::Value << p.heavy;
  out << YAML::Key << "arrivals" << YAML::Value << YAML::BeginMap;
  for (std::size_t i = 0; i < n; ++i)
    if (p.mean_interarrival_min[i]) out << YAML::Key << net.station(i).id << YAML::Value << *p.mean_interarrival_min[i];
  out << YAML::EndMap;
  out << YAML::Key << "destinations" << YAML::Value << YAML::BeginMap;
  for (std::size_t i = 0; i < n; ++i) {
    out << YAML::Key << net.station(i).id << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (std::size_t j = 0; j < n; ++j)
      if (p.destination_weights[i][j] != 0.0)
        out << YAML::Key << net.station(j).id << YAML::Value << p.destination_weights[i][j];
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "group_sizes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double x : p.group_dist.probabilities()) out << x;
  out << YAML::EndSeq;
  out << YAML::EndMap;
}

}  // namespace detail

/// Fully resolved YAML for a scenario, defaults included.
inline std::string emit_scenario(const Scenario& sc) {
  const auto& net = sc.network;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << sc.name;

  out << YAML::Key << "network" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "stations" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : net.stations())
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << s.id << YAML::Key << "berths"
        << YAML::Value << s.berth_count << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : net.links())
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "from" << YAML::Value << net.station(l.from).id << YAML::Key
        << "to" << YAML::Value << net.station(l.to).id << YAML::Key << "length" << YAML::Value << l.length
        << YAML::EndMap;
  out << YAML::EndSeq;
  if (sc.event_station) out << YAML::Key << "event_station" << YAML::Value << net.station(*sc.event_station).id;
  out << YAML::EndMap;

  out << YAML::Key << "fleet" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "size" << YAML::Value << sc.fleet.size;
  out << YAML::Key << "speed" << YAML::Value << sc.fleet.speed;
  out << YAML::Key << "boarding_time" << YAML::Value << sc.fleet.boarding_time;
  out << YAML::Key << "alighting_time" << YAML::Value << sc.fleet.alighting_time;
  out << YAML::Key << "capacity" << YAML::Value << sc.fleet.capacity;
  if (!sc.fleet.initial.empty()) {
    out << YAML::Key << "initial" << YAML::Value << YAML::Flow << YAML::BeginMap;
    for (std::size_t i = 0; i < net.size(); ++i)
      out << YAML::Key << net.station(i).id << YAML::Value << sc.fleet.initial[i];
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "demand" << YAML::Value << YAML::BeginMap;
  if (sc.kind) {
    out << YAML::Key << "kind" << YAML::Value << to_string(*sc.kind);
  } else if (!sc.phases.empty()) {
    out << YAML::Key << "phases" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : sc.phases) detail::emit_phase(out, p, net);
    out << YAML::EndSeq;
  }
  if (!sc.orders.empty()) {
    out << YAML::Key << "orders" << YAML::Value << YAML::BeginSeq;
    for (const auto& o : sc.orders)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "origin" << YAML::Value << net.station(o.origin).id
          << YAML::Key << "destination" << YAML::Value << net.station(o.destination).id << YAML::Key << "size"
          << YAML::Value << o.size << YAML::Key << "time_s" << YAML::Value << to_seconds(o.created_at)
          << YAML::EndMap;
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;

  const auto& m = sc.management;
  out << YAML::Key << "management" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << m.horizon.to_string();
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "standing" << YAML::Value << m.weights.standing;
  out << YAML::Key << "dist" << YAML::Value << m.weights.dist;
  out << YAML::Key << "queue" << YAML::Value << m.weights.queue;
  out << YAML::Key << "inbound" << YAML::Value << m.weights.inbound;
  out << YAML::Key << "berth" << YAML::Value << m.weights.berth;
  out << YAML::EndMap;
  out << YAML::Key << "call_threshold" << YAML::Value << m.call_threshold;
  out << YAML::Key << "surplus_threshold" << YAML::Value << m.surplus_threshold;
  out << YAML::Key << "deficit_threshold" << YAML::Value << m.deficit_threshold;
  out << YAML::Key << "tick_period_s" << YAML::Value << to_seconds(m.tick_period);
  out << YAML::Key << "balance_period_s" << YAML::Value << to_seconds(m.balance_period);
  if (m.adaptive) {
    const auto& a = *m.adaptive;
    out << YAML::Key << "adaptive" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "enabled" << YAML::Value << true;
    out << YAML::Key << "q_up" << YAML::Value << a.q_up;
    out << YAML::Key << "q_down" << YAML::Value << a.q_down;
    out << YAML::Key << "step" << YAML::Value << a.step;
    out << YAML::Key << "h_min" << YAML::Value << a.h_min;
    out << YAML::Key << "h_max" << YAML::Value << a.h_max;
    out << YAML::Key << "period_s" << YAML::Value << to_seconds(a.period);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "drain_window_min" << YAML::Value << to_minutes(sc.run.drain_window);
  out << YAML::Key << "seed" << YAML::Value << sc.run.seed;
  out << YAML::Key << "scope" << YAML::Value
      << (sc.run.scope.is_network() ? std::string("network") : net.station(*sc.run.scope.station).id);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return out.c_str();
}

}  // namespace prt
