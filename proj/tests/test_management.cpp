#include <gtest/gtest.h>

#include <set>

#include "prt/city.hpp"
#include "prt/management.hpp"

using namespace prt;

namespace {

Network three_cycle(double scale = 1.0) {
  return Network({{"A", 4}, {"B", 4}, {"C", 4}},
                 {{"A", "B", 1000 * scale}, {"B", "C", 2000 * scale}, {"C", "A", 3000 * scale}});
}

// Station state held in plain snapshots; dispatches move one vehicle.
class FakePort : public StationPort {
 public:
  explicit FakePort(std::size_t n) : s_(n) {
    for (std::size_t i = 0; i < n; ++i) s_[i].station = i;
  }
  StationSnapshot& at(StationIndex i) { return s_[i]; }
  StationSnapshot snapshot(StationIndex i) const override { return s_.at(i); }
  void dispatch(const Dispatch& d) override {
    log.push_back(d);
    --s_[d.from].standing_empty;
    ++s_[d.from].free_berths;
    ++s_[d.to].inbound_empty;
  }
  std::vector<Dispatch> log;

 private:
  std::vector<StationSnapshot> s_;
};

ManagementParams with_horizon(Horizon h) {
  ManagementParams p;
  p.horizon = h;
  return p;
}

}  // namespace

TEST(ScoreDonor, DefaultFormula) {
  ManagementParams p;
  StationSnapshot req, cand;
  cand.standing_empty = 3;
  EXPECT_DOUBLE_EQ(score_donor(req, cand, 500.0, 1000.0, p), 2.5);
  cand.queue_len = 2;
  cand.inbound_full = 2;
  EXPECT_DOUBLE_EQ(score_donor(req, cand, 500.0, 1000.0, p), -0.5);
}

TEST(ScoreDonor, EmptyCandidateNeverBeatsOneVehicleAtEqualDistance) {
  ManagementParams p;
  StationSnapshot req, zero, one;
  one.standing_empty = 1;
  for (double d : {0.0, 100.0, 5000.0}) {
    EXPECT_LE(score_donor(req, zero, d, 1000.0, p), 0.0);
    EXPECT_GT(score_donor(req, one, d, 1000.0, p), score_donor(req, zero, d, 1000.0, p));
  }
}

TEST(GatherSnapshots, CountFollowsHorizon) {
  auto city_dm = build_distance_matrix(city_network());
  FakePort port(12);
  Manager unlimited(city_dm, with_horizon(Horizon::unlimited()));
  EXPECT_EQ(unlimited.gather_snapshots(0, port).size(), 11u);
  EXPECT_EQ(unlimited.messages(), 11u);
  Manager none(city_dm, with_horizon(Horizon::of(0.0)));
  EXPECT_TRUE(none.gather_snapshots(0, port).empty());

  auto dm = build_distance_matrix(three_cycle());
  FakePort p3(3);
  Manager half(dm, with_horizon(Horizon::of(0.5)));
  auto got = half.gather_snapshots(0, p3);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].station, 1u);
}

TEST(CallEmpty, InvisibleDonorIsNotCalled) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(0).queue_len = 1;
  port.at(2).standing_empty = 3;
  Manager half(dm, with_horizon(Horizon::of(0.5)));
  EXPECT_FALSE(half.call_empty(0, port).has_value());
  EXPECT_TRUE(port.log.empty());

  Manager all(dm, with_horizon(Horizon::unlimited()));
  auto d = all.call_empty(0, port);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->from, 2u);
  EXPECT_EQ(d->to, 0u);
  EXPECT_EQ(d->reason, DispatchReason::call);
  EXPECT_EQ(port.log.size(), 1u);
}

TEST(CallEmpty, GateStopsOverSending) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(0).queue_len = 2;
  port.at(0).inbound_empty = 2;
  port.at(2).standing_empty = 3;
  Manager all(dm, with_horizon(Horizon::unlimited()));
  EXPECT_FALSE(all.call_empty(0, port).has_value());
  port.at(0).inbound_empty = 1;
  EXPECT_TRUE(all.call_empty(0, port).has_value());
  EXPECT_FALSE(all.call_empty(0, port).has_value());
}

TEST(CallEmpty, NeverCallsFromStationWithoutEmpties) {
  auto dm = build_distance_matrix(three_cycle());
  StationSnapshot self{0, 0, 4, 1, 0, 0, 0, {}};
  std::vector<StationSnapshot> visible = {{1, 0, 4, 0, 0, 0, 0, {}}, {2, 0, 4, 0, 0, 0, 0, {}}};
  EXPECT_FALSE(choose_call(self, visible, dm, ManagementParams{}).has_value());
}

TEST(CallEmpty, TieBreaksOnDistanceThenIndex) {
  // Star: every station reaches every other in 100 m, except 1->0 at 300 m.
  Network net({{"H", 4}, {"X", 4}, {"Y", 4}, {"Z", 4}},
              {{"H", "X", 100}, {"X", "H", 300}, {"H", "Y", 100}, {"Y", "H", 100}, {"H", "Z", 100},
               {"Z", "H", 100}, {"X", "Y", 100}, {"Y", "X", 100}, {"Z", "Y", 100}, {"Y", "Z", 100}});
  auto dm = build_distance_matrix(net);
  ManagementParams p;
  p.weights.dist = 0.0;  // every donor scores the same
  StationSnapshot self{0, 0, 4, 1, 0, 0, 0, {}};
  std::vector<StationSnapshot> visible = {{1, 2, 2, 0, 0, 0, 0, {}}, {2, 2, 2, 0, 0, 0, 0, {}}, {3, 2, 2, 0, 0, 0, 0, {}}};
  auto d = choose_call(self, visible, dm, p);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->from, 2u);  // Y and Z tie at 100 m; Y has the lower index
}

TEST(Expel, ToStationWithFreeBerths) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(0).standing_empty = 2;
  port.at(0).free_berths = 0;
  port.at(1).free_berths = 3;
  Manager all(dm, with_horizon(Horizon::unlimited()));
  auto d = all.expel(0, port);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->from, 0u);
  EXPECT_EQ(d->to, 1u);
  EXPECT_EQ(d->reason, DispatchReason::expel);
}

TEST(Expel, NothingToExpelOrNowhereToGo) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(1).free_berths = 3;
  Manager all(dm, with_horizon(Horizon::unlimited()));
  EXPECT_FALSE(all.expel(0, port).has_value());
  port.at(0).standing_empty = 2;
  port.at(1).free_berths = 0;
  EXPECT_FALSE(all.expel(0, port).has_value());
}

TEST(Expel, FallsBackToNearestWhenNoPositiveScore) {
  auto dm = build_distance_matrix(three_cycle());
  StationSnapshot self{0, 2, 0, 0, 0, 0, 1, {}};
  // Both recipients score <= 0; B is nearer from A (1 km vs 3 km).
  std::vector<StationSnapshot> visible = {{1, 3, 1, 0, 0, 0, 0, {}}, {2, 3, 1, 0, 0, 0, 0, {}}};
  auto d = choose_expel(self, visible, dm, ManagementParams{});
  ASSERT_TRUE(d);
  EXPECT_EQ(d->to, 1u);
}

TEST(Expel, ScoreTieGoesToNearerThenLowerIndex) {
  Network net({{"H", 4}, {"X", 4}, {"Y", 4}},
              {{"H", "X", 200}, {"X", "H", 200}, {"H", "Y", 100}, {"Y", "H", 100}, {"X", "Y", 100}, {"Y", "X", 100}});
  auto dm = build_distance_matrix(net);
  ManagementParams p;
  p.weights.dist = 0.0;
  StationSnapshot self{0, 2, 0, 0, 0, 0, 1, {}};
  std::vector<StationSnapshot> visible = {{1, 0, 3, 0, 0, 0, 0, {}}, {2, 0, 3, 0, 0, 0, 0, {}}};
  auto d = choose_expel(self, visible, dm, p);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->to, 2u);
}

TEST(Balance, EquilibriumProducesNothing) {
  auto dm = build_distance_matrix(city_network());
  FakePort port(12);
  for (StationIndex i = 0; i < 12; ++i) port.at(i).standing_empty = 2;
  Manager m(dm, ManagementParams{});
  EXPECT_TRUE(m.balance(port).empty());
}

TEST(Balance, SurplusFeedsStarvedNeighbor) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(1).standing_empty = 6;
  port.at(0).queue_len = 2;
  Manager m(dm, with_horizon(Horizon::of(0.5)));  // A sees B only
  auto out = m.balance(port);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].from, 1u);
  EXPECT_EQ(out[0].to, 0u);
  EXPECT_EQ(out[0].reason, DispatchReason::balance);
}

TEST(Balance, IsolatedStationNeverReceives) {
  auto dm = build_distance_matrix(three_cycle());
  FakePort port(3);
  port.at(0).standing_empty = 6;
  port.at(2).queue_len = 3;  // C sees nobody at 0.5
  Manager m(dm, with_horizon(Horizon::of(0.5)));
  EXPECT_TRUE(m.balance(port).empty());
}

TEST(Balance, OneDispatchPerDonorPerRound) {
  auto dm = build_distance_matrix(city_network());
  FakePort port(12);
  port.at(0).standing_empty = 10;
  for (StationIndex i = 1; i < 12; ++i) port.at(i).queue_len = 1;
  Manager m(dm, ManagementParams{});
  EXPECT_EQ(m.balance(port).size(), 1u);
}

TEST(AdaptHorizon, RulesAndHysteresis) {
  AdaptiveParams a;  // q_up 8, q_down 2, step 0.5, [0.5, 1.5]
  auto h = Horizon::of(0.5);
  h = adapt_horizon(h, 50, a);
  EXPECT_DOUBLE_EQ(h.ratio(), 1.0);
  h = adapt_horizon(h, 50, a);
  EXPECT_DOUBLE_EQ(h.ratio(), 1.5);
  h = adapt_horizon(h, 50, a);
  EXPECT_DOUBLE_EQ(h.ratio(), 1.5);
  EXPECT_DOUBLE_EQ(adapt_horizon(h, 5, a).ratio(), 1.5);
  h = adapt_horizon(h, 0, a);
  h = adapt_horizon(h, 0, a);
  h = adapt_horizon(h, 0, a);
  EXPECT_DOUBLE_EQ(h.ratio(), 0.5);
}

TEST(ManagementParams, Validation) {
  ManagementParams p;
  p.balance_period = SimTime{0};
  EXPECT_THROW(p.validate(), ValidationError);
  ManagementParams q;
  q.adaptive = AdaptiveParams{};
  q.adaptive->h_min = 2.0;
  EXPECT_THROW(q.validate(), ValidationError);
}

TEST(ScaleInvariance, ArgmaxDonorUnchanged) {
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<std::uint32_t> cnt(0, 6);
  for (double c : {0.1, 3.0, 1000.0}) {
    auto dm1 = build_distance_matrix(city_network());
    auto dm2 = build_distance_matrix(city_network().scaled(c));
    for (int trial = 0; trial < 200; ++trial) {
      StationSnapshot self{static_cast<StationIndex>(trial % 12), 0, 4, 3, 0, 0, 0, {}};
      std::vector<StationSnapshot> vis;
      for (StationIndex j = 0; j < 12; ++j)
        if (j != self.station) vis.push_back({j, cnt(gen), 4, cnt(gen), 0, cnt(gen), 0, {}});
      auto a = choose_call(self, vis, dm1, ManagementParams{});
      auto b = choose_call(self, vis, dm2, ManagementParams{});
      ASSERT_EQ(a, b);
    }
  }
}
