#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prt/error.hpp"

namespace prt {

using StationIndex = std::size_t;

struct StationDescriptor {
  std::string id;
  int berth_count = 4;
};

/// One-way track segment between two stations, referenced by station id.
struct LinkDescriptor {
  std::string from;
  std::string to;
  double length = 0.0;  // meters
};

/// Resolved link with station indices.
struct Link {
  StationIndex from = 0;
  StationIndex to = 0;
  double length = 0.0;

  friend bool operator==(const Link&, const Link&) = default;
};

/// Directed track graph. Stations are indexed in declaration order; that
/// order is the "station id order" used by every tie-break in the library.
class Network {
 public:
  Network() = default;

  Network(std::vector<StationDescriptor> stations, const std::vector<LinkDescriptor>& links)
      : stations_(std::move(stations)) {
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      const auto& s = stations_[i];
      const std::string path = "network.stations[" + std::to_string(i) + "]";
      if (s.id.empty()) throw ValidationError(path, "station id must not be empty");
      if (s.berth_count <= 0) throw ValidationError(path, "berth_count must be positive");
      if (!index_.emplace(s.id, i).second)
        throw ValidationError(path, "duplicate station id '" + s.id + "'");
    }
    out_.resize(stations_.size());
    for (std::size_t k = 0; k < links.size(); ++k) {
      const auto& l = links[k];
      const std::string path = "network.links[" + std::to_string(k) + "]";
      auto f = index_.find(l.from);
      auto t = index_.find(l.to);
      if (f == index_.end())
        throw ValidationError(path, "link " + l.from + "->" + l.to + " references unknown station '" + l.from + "'");
      if (t == index_.end())
        throw ValidationError(path, "link " + l.from + "->" + l.to + " references unknown station '" + l.to + "'");
      if (f->second == t->second) throw ValidationError(path, "self-loop link on '" + l.from + "'");
      if (!(l.length > 0.0) || !std::isfinite(l.length))
        throw ValidationError(path, "link length must be positive and finite");
      Link link{f->second, t->second, l.length};
      out_[link.from].push_back(links_.size());
      links_.push_back(link);
    }
  }

  std::size_t size() const noexcept { return stations_.size(); }
  const std::vector<StationDescriptor>& stations() const noexcept { return stations_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const StationDescriptor& station(StationIndex i) const { return stations_.at(i); }

  /// Indices into links() of the links leaving station i.
  const std::vector<std::size_t>& outgoing(StationIndex i) const { return out_.at(i); }

  std::optional<StationIndex> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  StationIndex index_of(const std::string& id) const {
    auto i = find(id);
    if (!i) throw UnknownStation("unknown station '" + id + "'");
    return *i;
  }

  /// Copy with every link length multiplied by factor.
  Network scaled(double factor) const {
    Network n = *this;
    for (auto& l : n.links_) l.length *= factor;
    return n;
  }

 private:
  std::vector<StationDescriptor> stations_;
  std::vector<Link> links_;
  std::vector<std::vector<std::size_t>> out_;
  std::unordered_map<std::string, StationIndex> index_;
};

/// All-pairs shortest directed path lengths. Not symmetric in general.
///
/// AISD (average inter-station distance) is the mean of d(i, j) over all
/// ordered pairs i != j:  AISD = sum_{i != j} d(i, j) / (n (n - 1)).
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> d, double aisd)
      : n_(n), d_(std::move(d)), aisd_(aisd) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(StationIndex i, StationIndex j) const { return d_[i * n_ + j]; }
  double aisd() const noexcept { return aisd_; }

  /// Distance normalized by AISD; the unit horizons are expressed in.
  double relative(StationIndex i, StationIndex j) const { return (*this)(i, j) / aisd_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
  double aisd_ = 0.0;
};

namespace detail {

inline std::vector<double> dijkstra(const Network& net, StationIndex source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.size(), inf);
  using Item = std::pair<double, StationIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    for (std::size_t li : net.outgoing(u)) {
      const Link& l = net.links()[li];
      double nd = du + l.length;
      if (nd < dist[l.to]) {
        dist[l.to] = nd;
        pq.emplace(nd, l.to);
      }
    }
  }
  return dist;
}

// Kahan-Babuska summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace detail

inline DistanceMatrix build_distance_matrix(const Network& net) {
  const std::size_t n = net.size();
  std::vector<double> d(n * n, 0.0);
  detail::CompensatedSum total;
  for (StationIndex i = 0; i < n; ++i) {
    auto row = detail::dijkstra(net, i);
    for (StationIndex j = 0; j < n; ++j) {
      if (!std::isfinite(row[j]))
        throw UnreachablePair("station '" + net.station(j).id + "' is unreachable from '" +
                              net.station(i).id + "'");
      d[i * n + j] = row[j];
      if (i != j) total.add(row[j]);
    }
  }
  double aisd = n > 1 ? total.value() / static_cast<double>(n * (n - 1)) : 0.0;
  return DistanceMatrix(n, std::move(d), aisd);
}

/// Communication range as a multiple of AISD, or unlimited.
class Horizon {
 public:
  static Horizon unlimited() { return Horizon{}; }

  static Horizon of(double ratio) {
    if (std::isnan(ratio) || ratio < 0.0)
      throw NegativeHorizon("horizon must be nonnegative, got " + std::to_string(ratio));
    if (std::isinf(ratio)) return unlimited();
    Horizon h;
    h.ratio_ = ratio;
    return h;
  }

  /// Accepts "inf" (any case), "none", "unlimited" or a nonnegative number.
  static Horizon parse(const std::string& text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "inf" || t == "none" || t == "unlimited" || t == "no horizon") return unlimited();
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      throw ValidationError("horizon", "cannot parse horizon '" + text + "'");
    }
    if (pos != t.size()) throw ValidationError("horizon", "cannot parse horizon '" + text + "'");
    return of(v);
  }

  bool is_unlimited() const noexcept { return !ratio_.has_value(); }
  double ratio() const noexcept {
    return ratio_ ? *ratio_ : std::numeric_limits<double>::infinity();
  }

  std::string to_string() const {
    if (is_unlimited()) return "inf";
    std::ostringstream os;
    os << *ratio_;
    return os.str();
  }

  friend bool operator==(const Horizon&, const Horizon&) = default;
  friend bool operator<(const Horizon& a, const Horizon& b) { return a.ratio() < b.ratio(); }

 private:
  std::optional<double> ratio_;
};

/// Relative slack on the inclusive boundary d <= h * AISD so that the
/// comparison is stable when all lengths are rescaled.
inline constexpr double kHorizonBoundarySlack = 1e-12;

inline bool within_horizon(const DistanceMatrix& dm, StationIndex i, StationIndex j, const Horizon& h) {
  if (i == j) return false;
  if (h.is_unlimited()) return true;
  return dm(i, j) <= h.ratio() * dm.aisd() * (1.0 + kHorizonBoundarySlack);
}

/// Per-station neighborhoods: j is a neighbor of i iff j != i and
/// d(i, j) <= horizon(i) * AISD. Stations normally share one horizon; the
/// adaptive controller may give each its own.
class HorizonTable {
 public:
  HorizonTable() = default;

  HorizonTable(const DistanceMatrix& dm, const Horizon& h) {
    horizons_.assign(dm.size(), h);
    neighbors_.resize(dm.size());
    for (StationIndex i = 0; i < dm.size(); ++i) rebuild(dm, i);
  }

  std::size_t size() const noexcept { return neighbors_.size(); }
  const std::vector<StationIndex>& neighbors(StationIndex i) const { return neighbors_.at(i); }
  const Horizon& horizon(StationIndex i) const { return horizons_.at(i); }

  bool contains(StationIndex i, StationIndex j) const {
    const auto& n = neighbors_.at(i);
    return std::binary_search(n.begin(), n.end(), j);
  }

  void set_horizon(const DistanceMatrix& dm, StationIndex i, const Horizon& h) {
    horizons_.at(i) = h;
    rebuild(dm, i);
  }

 private:
  void rebuild(const DistanceMatrix& dm, StationIndex i) {
    auto& n = neighbors_[i];
    n.clear();
    for (StationIndex j = 0; j < dm.size(); ++j)
      if (within_horizon(dm, i, j, horizons_[i])) n.push_back(j);
  }

  std::vector<Horizon> horizons_;
  std::vector<std::vector<StationIndex>> neighbors_;
};

inline HorizonTable horizon_table(const DistanceMatrix& dm, const Horizon& h) { return HorizonTable(dm, h); }

/// Ordered list of links from one station to another.
struct Path {
  std::vector<Link> links;

  double length() const {
    double s = 0.0;
    for (const auto& l : links) s += l.length;
    return s;
  }
  StationIndex origin() const { return links.front().from; }
  StationIndex destination() const { return links.back().to; }
};

/// Shortest directed path. Among equally short continuations the next
/// station with the lowest index is taken.
inline Path route(const Network& net, const DistanceMatrix& dm, StationIndex from, StationIndex to) {
  if (from == to) throw SameStation("route from a station to itself ('" + net.station(from).id + "')");
  Path p;
  StationIndex cur = from;
  while (cur != to) {
    const double remaining = dm(cur, to);
    const double tol = 1e-9 * std::max(1.0, remaining);
    std::optional<Link> best;
    for (std::size_t li : net.outgoing(cur)) {
      const Link& l = net.links()[li];
      if (std::abs(l.length + dm(l.to, to) - remaining) > tol) continue;
      if (!best || l.to < best->to || (l.to == best->to && l.length < best->length)) best = l;
    }
    if (!best) throw UnreachablePair("no route from '" + net.station(from).id + "' to '" + net.station(to).id + "'");
    p.links.push_back(*best);
    cur = best->to;
    if (p.links.size() > net.links().size())
      throw UnreachablePair("route construction did not converge");
  }
  return p;
}

inline Path route(const Network& net, StationIndex from, StationIndex to) {
  return route(net, build_distance_matrix(net), from, to);
}

}  // namespace prt
