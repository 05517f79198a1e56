#include "aim/sim.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

using namespace aim;

namespace {

constexpr double kmh = 1.0 / 3.6;

ScenarioConfig three_vehicles(std::size_t horizon) {
  ScenarioConfig c;
  c.mpc.horizon = horizon;
  c.duration = 4.0;
  c.vehicles = {
      {Approach::S, Maneuver::Right, 25.75, 51 * kmh, 51 * kmh},
      {Approach::S, Maneuver::Straight, 17.75, 44 * kmh, 44 * kmh},
      {Approach::W, Maneuver::Straight, 23.75, 53 * kmh, 53 * kmh},
  };
  return c;
}

ScenarioConfig lone(double v0, double v_ref) {
  ScenarioConfig c;
  c.mpc.horizon = 50;
  c.duration = 3.0;
  c.vehicles = {{Approach::N, Maneuver::Straight, 0.0, v0, v_ref}};
  return c;
}

VehicleInfo at(const Intersection& w, std::uint32_t id, Approach a, Maneuver m, double p) {
  return {AgentId{id}, w.path_id(a, m), {p, 10.0}, 0.0, 10.0};
}

} // namespace

TEST(Sim, EmptyWorldOnlyAdvancesTime) {
  ScenarioConfig c;
  c.duration = 0.3;
  const auto r = run(c);
  EXPECT_EQ(r.ticks, 10u);
  EXPECT_TRUE(r.traces.empty());
  EXPECT_TRUE(r.violations.empty());
}

TEST(Sim, ValidationRejectsCrowdedLane) {
  auto c = three_vehicles(20);
  c.vehicles.push_back({Approach::S, Maneuver::Straight, 20.0, 10.0, 10.0});
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.vehicles.back().arc = 21.5; // 3.75 m behind the leader
  EXPECT_NO_THROW(c.validate());
  c.vehicles.back().arc = 100.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Sim, MonitorIgnoresOppositeLanes) {
  const auto w = build_intersection({});
  // N and S straight lanes are one lane width apart.
  const std::vector<VehicleInfo> s{at(w, 1, Approach::N, Maneuver::Straight, 10.0),
                                   at(w, 2, Approach::S, Maneuver::Straight, 50.0)};
  EXPECT_TRUE(collision_monitor(w, s, 3.5).empty());
}

TEST(Sim, MonitorFlagsSameLane) {
  const auto w = build_intersection({});
  const std::vector<VehicleInfo> s{at(w, 1, Approach::N, Maneuver::Straight, 10.0),
                                   at(w, 2, Approach::N, Maneuver::Straight, 13.4)};
  const auto v = collision_monitor(w, s, 3.5);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0].distance, 3.4, 1e-12);
  const std::vector<VehicleInfo> ok{s[0], at(w, 2, Approach::N, Maneuver::Straight, 13.5)};
  EXPECT_TRUE(collision_monitor(w, ok, 3.5).empty());
}

TEST(Sim, MonitorFlagsMergingLaneAfterTheCorner) {
  const auto w = build_intersection({});
  // S-right ends on the lane W-straight leaves on.
  const auto merged = at(w, 1, Approach::S, Maneuver::Right, 40.0);
  const auto behind = at(w, 2, Approach::W, Maneuver::Straight, 44.0 - 1.0);
  const auto g1 = global_position(w, merged);
  const auto s2 = project(w.path(behind.path), g1);
  ASSERT_TRUE(s2.has_value());
  auto b = behind;
  b.state.p = *s2 - 2.0;
  const std::vector<VehicleInfo> s{merged, b};
  EXPECT_EQ(collision_monitor(w, s, 3.5).size(), 1u);
}

TEST(Sim, EntryGapGrowsWithClosingSpeed) {
  MpcConfig cfg;
  EXPECT_NEAR(entry_gap(10.0, 10.0, cfg), 3.5 + 1.0 + cfg.safety_backoff, 1e-12);
  EXPECT_NEAR(entry_gap(10.0, 0.0, cfg), 3.5 + 1.0 + 100.0 / 18.0 + cfg.safety_backoff, 1e-12);
}

TEST(Sim, LoneVehicleTracksReference) {
  const auto r = run(lone(20 * kmh, 40 * kmh));
  ASSERT_FALSE(r.traces.empty());
  EXPECT_NEAR(r.traces.back().v, 40 * kmh, 0.05);
  for (const auto& t : r.traces) {
    EXPECT_GE(t.u, -9.0 - 1e-6);
    EXPECT_LE(t.u, 5.0 + 1e-6);
  }
}

TEST(Sim, TraceHoldsStateBeforeTheStep) {
  const auto c = lone(10.0, 10.0);
  const auto r = run(c);
  ASSERT_GE(r.traces.size(), 2u);
  EXPECT_EQ(r.traces[0].k, 0u);
  EXPECT_DOUBLE_EQ(r.traces[0].p, 0.0);
  EXPECT_NEAR(r.traces[1].p, r.traces[0].p + c.step.sampling_time * r.traces[0].v, 1e-12);
  EXPECT_NEAR(r.traces[1].v, r.traces[0].v + c.step.sampling_time * r.traces[0].u, 1e-12);
}

TEST(Sim, VehicleLeavesAtPathEnd) {
  auto c = lone(10.0, 10.0);
  c.vehicles[0].arc = 66.0;
  const auto r = run(c);
  EXPECT_EQ(r.despawned, 1u);
  EXPECT_EQ(r.traces.size(), 4u); // 66 + 0.3 k >= 67 first at k = 4
}

TEST(Sim, RunsAreReproducible) {
  ScenarioConfig c;
  c.mode = ScenarioMode::Generated;
  c.mpc.horizon = 20;
  c.spawn.rate = 0.02;
  c.duration = 3.0;
  c.seed = 7;
  const auto a = run(c);
  const auto b = run(c);
  ASSERT_EQ(a.traces.size(), b.traces.size());
  EXPECT_GT(a.spawned, 0u);
  for (std::size_t i = 0; i < a.traces.size(); ++i) {
    EXPECT_EQ(a.traces[i].id, b.traces[i].id);
    EXPECT_EQ(a.traces[i].p, b.traces[i].p);
    EXPECT_EQ(a.traces[i].u, b.traces[i].u);
  }
  c.seed = 8;
  const auto d = run(c);
  EXPECT_NE(a.spawned == d.spawned && a.traces.size() == d.traces.size(), true);
}

TEST(Sim, ThreeVehicleCrossingIsSafeAndOrdered) {
  const auto r = run(three_vehicles(100));
  EXPECT_TRUE(r.violations.empty());
  std::map<std::uint32_t, std::size_t> at_point1;
  for (const auto& e : r.crossings)
    if (e.point == 1) at_point1[e.id.value] = e.k;
  ASSERT_EQ(at_point1.size(), 3u);
  EXPECT_LT(at_point1[1], at_point1[3]);
  EXPECT_LT(at_point1[3], at_point1[2]);
}

TEST(Sim, NoOvertakingOnASharedLane) {
  ScenarioConfig c;
  c.mpc.horizon = 40;
  c.duration = 5.0;
  // the follower is faster but can still brake in time
  c.vehicles = {{Approach::E, Maneuver::Straight, 10.0, 5.0, 5.0},
                {Approach::E, Maneuver::Straight, 0.0, 10.0, 15.0}};
  const auto r = run(c);
  EXPECT_TRUE(r.violations.empty());
  std::map<std::size_t, std::map<std::uint32_t, double>> p;
  for (const auto& t : r.traces) p[t.k][t.id.value] = t.p;
  for (const auto& [k, m] : p)
    if (m.size() == 2) EXPECT_GT(m.at(1), m.at(2) + 3.5);
}
