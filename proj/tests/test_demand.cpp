#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "prt/city.hpp"
#include "prt/demand.hpp"

using namespace prt;

namespace {

double empirical_mean_seconds(double mean_min, std::uint64_t seed, int n) {
  Rng rng(seed);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += sample_interarrival(mean_min, rng);
  return s / n;
}

// Wilson-Hilferty approximation of the chi-square quantile.
double chi2_quantile(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace

TEST(Interarrival, MeanMatchesParameter) {
  EXPECT_NEAR(empirical_mean_seconds(0.856, 1, 1'000'000), 51.36, 0.01 * 51.36);
  EXPECT_NEAR(empirical_mean_seconds(15.0, 2, 1'000'000), 900.0, 0.01 * 900.0);
}

TEST(Interarrival, SeededSequenceRepeats) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_interarrival(0.856, a), sample_interarrival(0.856, b));
}

TEST(Interarrival, RejectsNonPositiveMean) {
  Rng rng(1);
  EXPECT_THROW(sample_interarrival(0.0, rng), NonPositiveMean);
  EXPECT_THROW(sample_interarrival(-1.0, rng), NonPositiveMean);
}

TEST(GroupSize, DistributionMeans) {
  EXPECT_NEAR(GroupSizeDistribution::inbound().mean(), 2.9, 1e-12);
  EXPECT_NEAR(GroupSizeDistribution::outbound().mean(), 3.45, 1e-12);
  EXPECT_NEAR(GroupSizeDistribution::uniform().mean(), 2.5, 1e-12);
}

TEST(GroupSize, PointMassAlwaysFour) {
  GroupSizeDistribution d({0, 0, 0, 1});
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_group_size(d, rng), 4);
}

TEST(GroupSize, InvalidDistributionRejected) {
  EXPECT_THROW(GroupSizeDistribution({0.5, 0.5, 0.5, 0}), ValidationError);
  EXPECT_THROW(GroupSizeDistribution({-0.1, 0.5, 0.5, 0.1}), ValidationError);
}

TEST(GroupSize, FrequenciesWithinHalfPercent) {
  for (const auto& d : {GroupSizeDistribution::inbound(), GroupSizeDistribution::outbound()}) {
    Rng rng(5);
    std::array<int, 4> count{};
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(sample_group_size(d, rng) - 1)];
    for (int k = 1; k <= 4; ++k)
      EXPECT_NEAR(static_cast<double>(count[static_cast<std::size_t>(k - 1)]) / n, d.probability(k), 0.005);
  }
}

TEST(Destination, UniformRowIsUniformOverOthers) {
  std::vector<double> w(12, 1.0);
  w[3] = 0.0;
  Rng rng(9);
  std::array<int, 12> count{};
  const int n = 220'000;
  for (int i = 0; i < n; ++i) ++count[sample_destination(3, w, rng)];
  EXPECT_EQ(count[3], 0);
  for (std::size_t j = 0; j < 12; ++j)
    if (j != 3) EXPECT_NEAR(count[j] / static_cast<double>(n), 1.0 / 11.0, 0.004);
}

TEST(Destination, EventRowIsDominatedByEventStation) {
  auto net = city_network();
  const auto I = net.index_of("I");
  auto phases = build_scenario(ScenarioKind::event_inbound, net, I, from_minutes(240));
  // Superpose the event and background streams of station A by rate.
  const auto A = net.index_of("A");
  const double event_rate = 1.0 / *phases[0].mean_interarrival_min[A];
  const double bg_rate = 1.0 / *phases[1].mean_interarrival_min[A];
  const double p_I = (event_rate + bg_rate / 11.0) / (event_rate + bg_rate);
  EXPECT_GT(p_I, 0.9);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_destination(A, phases[0].destination_weights[A], rng), I);
}

TEST(Destination, SingleWeightAndAllZero) {
  Rng rng(1);
  std::vector<double> w = {0, 0, 2.5, 0};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_destination(0, w, rng), 2u);
  std::vector<double> z = {1, 0, 0};  // only the origin itself
  EXPECT_THROW(sample_destination(0, z, rng), AllZeroWeights);
}

TEST(Scenario, EventArithmetic) {
  EventTask t;
  EXPECT_NEAR(t.inbound_persons_per_station_h(12), 191.8, 0.05);
  EXPECT_NEAR(t.inbound_groups_per_station_h(12), 66.13, 0.02);
  EXPECT_NEAR(t.outbound_groups_per_h(), 611.4, 0.1);
  EXPECT_NEAR(t.outbound_mean_interarrival_min(), 0.0976, 0.0002);
  EXPECT_DOUBLE_EQ(t.background_mean_interarrival_min(), 15.0);
}

TEST(Scenario, UniformTreatsEveryStationAlike) {
  auto net = city_network();
  auto phases = build_scenario(ScenarioKind::uniform, net, std::nullopt, from_minutes(240));
  ASSERT_EQ(phases.size(), 2u);
  EXPECT_TRUE(phases[0].heavy);
  for (StationIndex s = 0; s < 12; ++s) {
    EXPECT_DOUBLE_EQ(*phases[0].mean_interarrival_min[s], 0.856);
    EXPECT_DOUBLE_EQ(*phases[1].mean_interarrival_min[s], 15.0);
  }
  EXPECT_EQ(heavy_phase_end(phases), std::chrono::hours{2});
}

TEST(Scenario, OutboundCombinedRateAtEventStation) {
  auto net = city_network();
  const auto I = net.index_of("I");
  auto phases = build_scenario(ScenarioKind::event_outbound, net, I, from_minutes(240));
  const double combined = 1.0 / *phases[0].mean_interarrival_min[I] + 1.0 / *phases[1].mean_interarrival_min[I];
  EXPECT_NEAR(1.0 / combined, 0.0976, 0.0002);
  EXPECT_EQ(phases[0].group_dist, GroupSizeDistribution::outbound());
  for (StationIndex s = 0; s < 12; ++s)
    if (s != I) EXPECT_FALSE(phases[0].mean_interarrival_min[s].has_value());
}

TEST(Scenario, EventKindsNeedEventStation) {
  auto net = city_network();
  EXPECT_THROW(build_scenario(ScenarioKind::event_inbound, net, std::nullopt, from_minutes(240)),
               UnknownEventStation);
  EXPECT_THROW(build_scenario(ScenarioKind::event_outbound, net, StationIndex{99}, from_minutes(240)),
               UnknownEventStation);
}

TEST(Orders, PoissonCountsPerIntervalHaveUnitDispersion) {
  const std::size_t n = 3;
  DemandPhase p;
  p.start = SimTime{0};
  p.end = std::chrono::hours{200};
  p.mean_interarrival_min.assign(n, 0.856);
  p.destination_weights = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
  std::vector<DemandPhase> phases{p};
  auto orders = generate_orders(phases, n, 77);
  const std::size_t k = 2000;  // 6-minute bins
  const auto bin = p.end / k;
  for (StationIndex s = 0; s < n; ++s) {
    std::vector<double> counts(k, 0.0);
    for (const auto& o : orders)
      if (o.origin == s) counts[static_cast<std::size_t>(o.created_at / bin)] += 1.0;
    double mean = 0.0;
    for (double c : counts) mean += c;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double c : counts) ss += (c - mean) * (c - mean);
    const double dispersion = ss / mean;  // ~ chi2(k-1) under Poisson
    EXPECT_GT(dispersion, chi2_quantile(k - 1, -2.5758)) << "station " << s;
    EXPECT_LT(dispersion, chi2_quantile(k - 1, 2.5758)) << "station " << s;
  }
}

TEST(Orders, WellFormedAndOrdered) {
  auto net = city_network();
  auto phases = build_scenario(ScenarioKind::event_inbound, net, net.index_of("I"), from_minutes(240));
  auto orders = generate_orders(phases, net.size(), 3);
  ASSERT_FALSE(orders.empty());
  std::map<StationIndex, SimTime> last;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const auto& o = orders[i];
    EXPECT_EQ(o.id, i);
    EXPECT_NE(o.origin, o.destination);
    EXPECT_GE(o.size, 1);
    EXPECT_LE(o.size, 4);
    EXPECT_GE(o.created_at, last[o.origin]);
    last[o.origin] = o.created_at;
    if (i > 0) EXPECT_GE(o.created_at, orders[i - 1].created_at);
  }
}

TEST(Orders, AddingAStationLeavesOtherStreamsUntouched) {
  auto make = [](std::size_t n) {
    DemandPhase p;
    p.end = std::chrono::hours{1};
    p.mean_interarrival_min.assign(n, 2.0);
    p.destination_weights.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) p.destination_weights[i][i] = 0.0;
    return std::vector<DemandPhase>{p};
  };
  auto small = generate_orders(make(4), 4, 5);
  auto big = generate_orders(make(5), 5, 5);
  for (StationIndex s = 0; s < 4; ++s) {
    std::vector<std::pair<SimTime, int>> a, b;
    for (const auto& o : small)
      if (o.origin == s) a.emplace_back(o.created_at, o.size);
    for (const auto& o : big)
      if (o.origin == s) b.emplace_back(o.created_at, o.size);
    EXPECT_EQ(a, b) << "station " << s;
  }
}
