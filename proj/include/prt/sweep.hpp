#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prt/config.hpp"
#include "prt/engine.hpp"
#include "prt/metrics.hpp"
#include "prt/scenario_file.hpp"

namespace prt {

struct SweepRow {
  Horizon horizon;
  std::uint64_t seed = 0;
  std::optional<MetricsReport> report;
  std::string error;

  bool ok() const noexcept { return report.has_value(); }
};

struct SweepOptions {
  /// Worker threads; 1 runs sequentially in the calling thread.
  unsigned threads = 1;
  /// Turn on the adaptive horizon controller (default settings unless the
  /// scenario already configures it).
  bool adaptive = false;
};

/// Rows ordered by horizon (widest first, as in the result tables) and then
/// by seed, independent of execution order.
inline std::vector<SweepRow> sweep(const Scenario& scenario, std::vector<Horizon> horizons,
                                   std::vector<std::uint64_t> seeds, const SweepOptions& opts = {}) {
  if (horizons.empty() || seeds.empty()) throw ValidationError("sweep", "horizon and seed lists must be nonempty");
  std::stable_sort(horizons.begin(), horizons.end(), [](const Horizon& a, const Horizon& b) { return b < a; });
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  std::vector<SweepRow> rows;
  for (const auto& h : horizons)
    for (auto s : seeds) rows.push_back(SweepRow{h, s, std::nullopt, {}});

  auto run_one = [&](SweepRow& row) {
    try {
      ManagementParams mp = scenario.management;
      mp.horizon = row.horizon;
      if (opts.adaptive && !mp.adaptive) mp.adaptive = AdaptiveParams{};
      row.report = run(scenario, mp, row.seed);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(rows.size())));
  if (threads == 1) {
    for (auto& r : rows) run_one(r);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) run_one(rows[i]);
    });
  for (auto& th : pool) th.join();
  return rows;
}

/// CSV with the resolved scenario echoed as '#' comment lines.
inline std::string sweep_csv(const Scenario& scenario, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "# run manifest\n";
  std::istringstream manifest(emit_scenario(scenario));
  for (std::string line; std::getline(manifest, line);) os << "# " << line << '\n';
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    if (r.ok())
      os << to_csv_row(*r.report) << '\n';
    else
      os << "# error," << scenario.name << ',' << r.horizon.to_string() << ',' << r.seed << ',' << r.error << '\n';
  }
  return os.str();
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  if (n % 2 == 1) return v[n / 2];
  const double a = v[n / 2 - 1];
  const double b = v[n / 2];
  if (std::isinf(a) || std::isinf(b)) return std::isinf(a) ? a : b;
  return 0.5 * (a + b);
}

}  // namespace detail

/// Cross-seed aggregate for one horizon. Censored Rest counts as +inf.
struct AggregateRow {
  std::string horizon;
  std::size_t runs = 0;
  double awt_median = 0, awt_min = 0, awt_max = 0;
  double aql_median = 0, aql_min = 0, aql_max = 0;
  double maxql_median = 0, maxql_min = 0, maxql_max = 0;
  double rest_median = 0, rest_min = 0, rest_max = 0;
};

inline std::vector<AggregateRow> aggregate(const std::vector<SweepRow>& rows) {
  std::vector<AggregateRow> out;
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricsReport*>> groups;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    if (!groups.count(r.report->horizon)) order.push_back(r.report->horizon);
    groups[r.report->horizon].push_back(&*r.report);
  }
  for (const auto& h : order) {
    const auto& g = groups[h];
    std::vector<double> awt, aql, mql, rest;
    for (const auto* r : g) {
      awt.push_back(r->awt_s);
      aql.push_back(r->aql_groups);
      mql.push_back(static_cast<double>(r->maxql_groups));
      rest.push_back(r->rest_min ? *r->rest_min : std::numeric_limits<double>::infinity());
    }
    AggregateRow a;
    a.horizon = h;
    a.runs = g.size();
    auto fill = [](const std::vector<double>& v, double& med, double& lo, double& hi) {
      med = detail::median(v);
      lo = *std::min_element(v.begin(), v.end());
      hi = *std::max_element(v.begin(), v.end());
    };
    fill(awt, a.awt_median, a.awt_min, a.awt_max);
    fill(aql, a.aql_median, a.aql_min, a.aql_max);
    fill(mql, a.maxql_median, a.maxql_min, a.maxql_max);
    fill(rest, a.rest_median, a.rest_min, a.rest_max);
    out.push_back(a);
  }
  return out;
}

inline std::string censored_label(SimTime drain_window) {
  const double m = to_minutes(drain_window);
  if (std::fmod(m, 60.0) == 0.0) return ">" + format_fixed(m / 60.0, 0) + "h";
  return ">" + format_fixed(m, 0) + "min";
}

/// Per-horizon medians with [min, max] ranges, result-table layout.
inline std::string emit_table(const std::vector<SweepRow>& rows, bool with_rest, SimTime drain_window) {
  const auto agg = aggregate(rows);
  const std::string censored = censored_label(drain_window);
  auto rest_text = [&](double v) { return std::isinf(v) ? censored : format_fixed(v, 1); };
  std::ostringstream os;
  os << "Horizon | AWT [s] | AQL [groups] | maxQL [groups]";
  if (with_rest) os << " | Rest [min]";
  os << '\n';
  for (const auto& a : agg) {
    const std::string label = a.horizon == "inf" ? "no horizon" : a.horizon;
    os << label << " | " << format_fixed(a.awt_median, 1) << " [" << format_fixed(a.awt_min, 1) << ", "
       << format_fixed(a.awt_max, 1) << "] | " << format_fixed(a.aql_median, 2) << " [" << format_fixed(a.aql_min, 2)
       << ", " << format_fixed(a.aql_max, 2) << "] | " << format_fixed(a.maxql_median, 0) << " ["
       << format_fixed(a.maxql_min, 0) << ", " << format_fixed(a.maxql_max, 0) << "]";
    if (with_rest)
      os << " | " << rest_text(a.rest_median) << " [" << rest_text(a.rest_min) << ", " << rest_text(a.rest_max) << "]";
    os << '\n';
  }
  return os.str();
}

}  // namespace prt
