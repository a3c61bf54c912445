// prtsim: run PRT scenarios, horizon sweeps and seed replications.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "prt/prt.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personal Rapid Transit empty-vehicle management simulator"};

  std::string scenario_path;
  std::string generate;
  std::string horizons_arg;
  std::string seeds_arg;
  std::string out_path;
  std::string trace_path;
  std::string scope_arg;
  bool table = false;
  bool adaptive = false;
  bool print_config = false;
  unsigned threads = 1;

  app.add_option("--scenario", scenario_path, "Scenario YAML file");
  app.add_option("--generate", generate, "Print the built-in City scenario of a kind and exit")
      ->check(CLI::IsMember({"uniform", "event_inbound", "event_outbound"}));
  app.add_option("--horizon", horizons_arg, "Horizon list, e.g. inf,1.5,1.0,0.5 (overrides the file)");
  app.add_option("--seed", seeds_arg, "Seed list, e.g. 1,2,3 (overrides the file)");
  app.add_option("--out", out_path, "Write per-run CSV rows here");
  app.add_option("--trace", trace_path, "Write the event trace CSV of a single run here");
  app.add_option("--scope", scope_arg, "Report scope: network or a station id (overrides the file)");
  app.add_option("--threads", threads, "Parallel runs")->check(CLI::Range(1u, 256u));
  app.add_flag("--table", table, "Print the per-horizon aggregate table");
  app.add_flag("--adaptive", adaptive, "Enable the queue-driven horizon controller");
  app.add_flag("--print-config", print_config, "Echo the resolved scenario and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!generate.empty()) {
      std::cout << prt::emit_scenario(prt::city_scenario(prt::parse_scenario_kind(generate)));
      return 0;
    }
    if (scenario_path.empty()) {
      std::cerr << "error: --scenario is required\n";
      return 2;
    }

    auto loaded = prt::load_scenario(scenario_path);
    for (const auto& n : loaded.notices) std::cerr << "notice: " << n << '\n';
    prt::Scenario sc = std::move(loaded.scenario);
    if (!scope_arg.empty())
      sc.run.scope = scope_arg == "network" ? prt::Scope::network() : prt::Scope::at(sc.network.index_of(scope_arg));
    if (adaptive && !sc.management.adaptive) sc.management.adaptive = prt::AdaptiveParams{};

    if (print_config) {
      std::cout << prt::emit_scenario(sc);
      return 0;
    }

    std::vector<prt::Horizon> horizons;
    for (const auto& h : split_list(horizons_arg)) horizons.push_back(prt::Horizon::parse(h));
    if (horizons.empty()) horizons.push_back(sc.management.horizon);
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(seeds_arg)) seeds.push_back(std::stoull(s));
    if (seeds.empty()) seeds.push_back(sc.run.seed);

    if (!trace_path.empty()) {
      if (horizons.size() != 1 || seeds.size() != 1) {
        std::cerr << "error: --trace needs exactly one horizon and one seed\n";
        return 2;
      }
      std::ofstream trace(trace_path);
      if (!trace) {
        std::cerr << "error: cannot write " << trace_path << '\n';
        return 1;
      }
      prt::Scenario one = sc;
      one.management.horizon = horizons.front();
      prt::TraceWriter writer(trace, one.network);
      prt::Simulation sim(one, seeds.front(), {&writer, false});
      sim.run();
    }

    prt::SweepOptions opts;
    opts.threads = threads;
    const auto rows = prt::sweep(sc, horizons, seeds, opts);
    const std::string csv = prt::sweep_csv(sc, rows);
    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << "error: cannot write " << out_path << '\n';
        return 1;
      }
      out << csv;
    }
    if (table) {
      const bool with_rest = !(sc.kind && *sc.kind == prt::ScenarioKind::uniform);
      std::cout << prt::emit_table(rows, with_rest, sc.run.drain_window);
    } else if (out_path.empty()) {
      std::cout << csv;
    }
    int failures = 0;
    for (const auto& r : rows)
      if (!r.ok()) {
        std::cerr << "error: horizon " << r.horizon.to_string() << " seed " << r.seed << ": " << r.error << '\n';
        ++failures;
      }
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
