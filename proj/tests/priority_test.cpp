#include "aim/priority.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace aim;

namespace {

const Intersection& world() {
  static const Intersection w = build_intersection(LayoutConfig{3.5, 30.0});
  return w;
}

VehicleInfo vehicle(std::uint32_t id, Approach a, Maneuver m, double p, double v) {
  return VehicleInfo{AgentId{id}, world().path_id(a, m), VehicleState{p, v}, 0.0, v};
}

bool contains(const std::vector<AgentId>& ids, std::uint32_t id) {
  return std::find(ids.begin(), ids.end(), AgentId{id}) != ids.end();
}

// i1 turns right 6 m before the shared point, i2 follows on the same lane 14 m
// before it, i3 comes straight from the west 11.5 m before it.
std::vector<VehicleInfo> three_vehicle_snapshot() {
  return {vehicle(1, Approach::S, Maneuver::Right, 31.75 - 6.0, 51.0 / 3.6),
          vehicle(2, Approach::S, Maneuver::Straight, 31.75 - 14.0, 44.0 / 3.6),
          vehicle(3, Approach::W, Maneuver::Straight, 35.25 - 11.5, 53.0 / 3.6)};
}

} // namespace

TEST(Bid, Examples) {
  const BidParams p;
  EXPECT_NEAR(compute_bid(12.5, 10.0, p), 13.5 / 10.1, 1e-12);
  EXPECT_NEAR(compute_bid(0.0, 0.0, p), 10.0, 1e-12);
  EXPECT_GT(compute_bid(10.0, 5.0, p), compute_bid(10.0, 6.0, p));
}

TEST(Bid, RejectsNonPositiveParams) {
  EXPECT_THROW((BidParams{0.0, 1.0, 0.1}.validate()), std::invalid_argument);
  EXPECT_THROW((BidParams{1.0, 1.0, 0.0}.validate()), std::invalid_argument);
}

TEST(Bid, MonotoneInSpeedAndDistance) {
  const BidParams p{0.7, 1.3, 0.1};
  for (double v = 0.0; v < 40.0; v += 0.5) {
    for (double d = 0.0; d < 70.0; d += 0.5) {
      EXPECT_LT(compute_bid(v, d, p), compute_bid(v + 0.1, d, p));
      EXPECT_GT(compute_bid(v, d, p), compute_bid(v, d + 0.1, p));
    }
  }
}

TEST(Bid, RearVehicleBelowSpeedBoundBidsLower) {
  // rear i at d_zeta + gap behind the point, gap >= d_s
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> speed(0.0, 40.0), dist(0.0, 60.0), gap(0.0, 30.0), frac(0.0, 1.0),
      weight(0.1, 5.0);
  const double ds = 3.5;
  int counterexamples = 0;
  for (int n = 0; n < 100000; ++n) {
    const BidParams p{weight(rng), weight(rng), 0.1};
    const double vz = speed(rng), dz = dist(rng), di = dz + ds + gap(rng);
    const double bound = vz + ds * (vz + p.p_d / p.p_v) / (dz + p.epsilon);
    const double vi = bound * frac(rng);
    if (!(compute_bid(vi, di, p) < compute_bid(vz, dz, p))) ++counterexamples;
  }
  EXPECT_EQ(counterexamples, 0);
}

TEST(Frontal, SameLaneVehicleAhead) {
  const std::vector<VehicleInfo> snap{vehicle(1, Approach::N, Maneuver::Straight, 10.0, 10.0),
                                      vehicle(2, Approach::N, Maneuver::Straight, 20.0, 10.0)};
  EXPECT_EQ(frontal_set(world(), snap, snap[0]), std::vector<AgentId>{AgentId{2}});
  EXPECT_TRUE(frontal_set(world(), snap, snap[1]).empty());
}

TEST(Frontal, CrossingRoadIsNotFrontal) {
  const std::vector<VehicleInfo> snap{vehicle(1, Approach::N, Maneuver::Straight, 10.0, 10.0),
                                      vehicle(2, Approach::E, Maneuver::Straight, 20.0, 10.0)};
  EXPECT_TRUE(frontal_set(world(), snap, snap[0]).empty());
}

TEST(Frontal, MergedRightTurnerIsFrontal) {
  auto snap = three_vehicle_snapshot();
  EXPECT_FALSE(contains(frontal_set(world(), snap, snap[2]), 1));
  snap[0].state.p = 31.75 + 2.0; // past the corner, now on the west lane
  EXPECT_TRUE(contains(frontal_set(world(), snap, snap[2]), 1));
  EXPECT_FALSE(contains(frontal_set(world(), snap, snap[1]), 1));
}

TEST(CrossingMaps, RightTurnerHasOnePoint) {
  const auto snap = three_vehicle_snapshot();
  const auto maps = crossing_maps(world(), snap);
  EXPECT_EQ(maps.ahead.at(AgentId{1}).size(), 1u);
  EXPECT_EQ(maps.ahead.at(AgentId{2}).size(), 2u);
}

TEST(CrossingMaps, PastAllPointsIsAbsent) {
  const std::vector<VehicleInfo> snap{vehicle(1, Approach::S, Maneuver::Straight, 50.0, 10.0)};
  const auto maps = crossing_maps(world(), snap);
  EXPECT_TRUE(maps.ahead.at(AgentId{1}).empty());
  EXPECT_TRUE(maps.crossing.empty());
}

TEST(CrossingMaps, DualityOnRandomSnapshots) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<VehicleInfo> snap;
    for (std::uint32_t id = 1; id <= 6; ++id) {
      const PathId pid = rng() % world().paths.size();
      std::uniform_real_distribution<double> s(0.0, world().path(pid).total_length());
      snap.push_back(VehicleInfo{AgentId{id}, pid, VehicleState{s(rng), 10.0}, 0.0, 10.0});
    }
    const auto maps = crossing_maps(world(), snap);
    for (int h = 1; h <= 4; ++h) {
      for (const auto& v : snap) {
        const auto& ahead = maps.ahead.at(v.id);
        const bool in_g = std::any_of(ahead.begin(), ahead.end(), [&](const PointAhead& pa) { return pa.point.index == h; });
        const bool in_h = maps.crossing.count(h) && contains(maps.crossing.at(h), v.id.value);
        EXPECT_EQ(in_g, in_h);
      }
    }
  }
}

TEST(Negotiate, ThreeVehicleBidsAndOrder) {
  const auto snap = three_vehicle_snapshot();
  const auto view = negotiate(world(), snap, BidParams{});
  EXPECT_NEAR(view.of(AgentId{1}).bids.at(1), 2.4863, 1e-4);
  EXPECT_NEAR(view.of(AgentId{2}).bids.at(1), 0.9378, 1e-4);
  EXPECT_NEAR(view.of(AgentId{3}).bids.at(1), 1.3554, 1e-4);
  EXPECT_EQ(view.lists.at(1).order, (std::vector<AgentId>{AgentId{1}, AgentId{3}, AgentId{2}}));

  EXPECT_TRUE(view.of(AgentId{1}).higher.empty());
  EXPECT_EQ(view.of(AgentId{3}).higher, std::vector<AgentId>{AgentId{1}});
  EXPECT_EQ(view.of(AgentId{2}).higher, (std::vector<AgentId>{AgentId{1}, AgentId{3}}));
  EXPECT_EQ(view.of(AgentId{2}).frontal, std::vector<AgentId>{AgentId{1}});
  EXPECT_TRUE(view.diagnostics.empty());
}

TEST(Negotiate, FrontalRankedFirstWhenRearIsSlowEnough) {
  const BidParams p;
  const double vz = 10.0, dz = 5.0;
  const double bound = vz + 3.5 * (vz + p.p_d / p.p_v) / (dz + p.epsilon);
  const std::vector<VehicleInfo> snap{vehicle(1, Approach::E, Maneuver::Straight, 31.75 - dz - 4.0, bound - 0.1),
                                      vehicle(2, Approach::E, Maneuver::Straight, 31.75 - dz, vz)};
  const auto view = negotiate(world(), snap, p);
  const int first = world().path(Approach::E, Maneuver::Straight).collision_points().front().point;
  EXPECT_EQ(view.lists.at(first).order.front(), AgentId{2});
}

TEST(Negotiate, SharedPointsAreAsymmetricAndDeterministic) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<VehicleInfo> snap;
    for (std::uint32_t id = 1; id <= 5; ++id) {
      const PathId pid = rng() % world().paths.size();
      std::uniform_real_distribution<double> s(0.0, 30.0), v(1.0, 20.0);
      snap.push_back(VehicleInfo{AgentId{id}, pid, VehicleState{s(rng), v(rng)}, 0.0, 12.5});
    }
    const auto view = negotiate(world(), snap, BidParams{});
    const auto again = negotiate(world(), snap, BidParams{});
    const auto maps = crossing_maps(world(), snap);
    for (const auto& [h, list] : view.lists) {
      EXPECT_EQ(list.order, again.lists.at(h).order);
      // each list ranks exactly its members, once each
      auto sorted = list.order;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(sorted, maps.crossing.at(h));
      for (std::size_t a = 0; a < list.order.size(); ++a)
        for (std::size_t b = a + 1; b < list.order.size(); ++b)
          EXPECT_TRUE(contains(view.of(list.order[b]).higher, list.order[a].value));
    }
    for (const auto& [id, vp] : view.vehicles) {
      EXPECT_FALSE(contains(vp.higher, id.value));
      for (AgentId f : vp.frontal) EXPECT_TRUE(contains(vp.aware, f.value));
      for (AgentId l : vp.higher) EXPECT_TRUE(contains(vp.aware, l.value));
      EXPECT_EQ(vp.aware.size(), [&] {
        std::vector<AgentId> u(vp.frontal);
        u.insert(u.end(), vp.higher.begin(), vp.higher.end());
        std::sort(u.begin(), u.end());
        return static_cast<std::size_t>(std::unique(u.begin(), u.end()) - u.begin());
      }());
    }
  }
}
