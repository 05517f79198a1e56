#include "aim/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aim;

namespace {

const Intersection& world() {
  static const Intersection w = build_intersection({});
  return w;
}

TraceRecord rec(std::size_t k, std::uint32_t id, Approach a, Maneuver m, double p, double v, double v_ref) {
  TraceRecord t;
  t.k = k;
  t.id = AgentId{id};
  t.path = world().path_id(a, m);
  t.p = p;
  t.v = v;
  t.v_ref = v_ref;
  return t;
}

SpeedRatioCurve curve_of(std::vector<double> values) {
  SpeedRatioCurve c;
  for (double v : values) c.mean.emplace_back(v);
  c.samples.assign(values.size(), 1);
  return c;
}

} // namespace

TEST(Metrics, SpeedRatio) {
  EXPECT_DOUBLE_EQ(speed_ratio(10.0, 12.5), 0.8);
  EXPECT_DOUBLE_EQ(speed_ratio(7.0, 7.0), 1.0);
  EXPECT_DOUBLE_EQ(speed_ratio(0.0, 7.0), 0.0);
  EXPECT_THROW(speed_ratio(1.0, 0.0), std::invalid_argument);
}

TEST(Metrics, DensityIsMeanActiveCount) {
  std::vector<TraceRecord> tr;
  for (std::size_t k = 0; k < 10; ++k)
    for (std::uint32_t id = 1; id <= 3; ++id) tr.push_back(rec(k, id, Approach::N, Maneuver::Straight, 4.0 * id, 1, 1));
  EXPECT_DOUBLE_EQ(density(tr, 10), 3.0);
  EXPECT_DOUBLE_EQ(density({}, 10), 0.0);
  // idle steps count too
  EXPECT_DOUBLE_EQ(density(tr, 20), 1.5);
}

TEST(Metrics, ConstantSpeedGivesFlatCurve) {
  std::vector<TraceRecord> tr;
  for (std::size_t k = 0; k < 200; ++k) tr.push_back(rec(k, 1, Approach::E, Maneuver::Straight, 0.3 * k, 10, 10));
  const auto c = traffic_speed_ratio(world(), tr, TrafficClass::Straight);
  EXPECT_EQ(c.mean.size(), 67u);
  for (std::size_t i = 0; i < 60; ++i) {
    ASSERT_TRUE(c.mean[i]) << i;
    EXPECT_DOUBLE_EQ(*c.mean[i], 1.0);
  }
  EXPECT_FALSE(c.mean[61]); // beyond the last sample at 59.7
  const auto r = traffic_speed_ratio(world(), tr, TrafficClass::Right);
  for (const auto& m : r.mean) EXPECT_FALSE(m);
}

TEST(Metrics, BinsAverageAllSamples) {
  // two samples in bin 3, one in bin 4; right and straight split by class
  const std::vector<TraceRecord> tr{rec(0, 1, Approach::S, Maneuver::Straight, 3.2, 5, 10),
                                    rec(1, 1, Approach::S, Maneuver::Straight, 3.9, 10, 10),
                                    rec(0, 2, Approach::W, Maneuver::Right, 4.0, 3, 12),
                                    rec(1, 2, Approach::W, Maneuver::Right, 3.5, 6, 12)};
  const auto s = traffic_speed_ratio(world(), tr, TrafficClass::Straight);
  EXPECT_DOUBLE_EQ(*s.mean[3], 0.75);
  EXPECT_FALSE(s.mean[4]);
  const auto a = traffic_speed_ratio(world(), tr, TrafficClass::All);
  EXPECT_DOUBLE_EQ(*a.mean[3], (0.5 + 1.0 + 0.5) / 3.0);
  EXPECT_DOUBLE_EQ(*a.mean[4], 0.25);
  EXPECT_EQ(a.samples[3], 3u);
}

TEST(Metrics, DipsByProminence) {
  const auto c = curve_of({1.0, 0.9, 0.6, 0.8, 0.85, 0.5, 0.7, 1.0, 0.98, 1.0});
  const auto d = find_dips(c, 0.1);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].bin, 2u);
  EXPECT_NEAR(d[0].depth, 0.25, 1e-12); // bounded by the 0.85 shoulder
  EXPECT_EQ(d[1].bin, 5u);
  EXPECT_NEAR(d[1].depth, 0.5, 1e-12);
  EXPECT_EQ(find_dips(c, 0.3).size(), 1u);
}

TEST(Metrics, DipsSkipAbsentBins) {
  auto c = curve_of({1.0, 0.9, 0.5, 0.9, 1.0});
  c.mean[3].reset();
  const auto d = find_dips(c, 0.1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].bin, 2u);
  EXPECT_NEAR(d[0].depth, 0.5, 1e-12);
}

TEST(Metrics, ReportFromARun) {
  ScenarioConfig c;
  c.mpc.horizon = 30;
  c.duration = 1.5;
  c.vehicles = {{Approach::N, Maneuver::Straight, 10.0, 8.0, 10.0}, {Approach::N, Maneuver::Straight, 0.0, 8.0, 10.0}};
  const auto r = run(c);
  const auto m = compute_metrics(r);
  EXPECT_DOUBLE_EQ(m.density, 2.0);
  ASSERT_EQ(m.speed_ratio.size(), r.traces.size());
  ASSERT_EQ(m.curves.size(), 3u);
  ASSERT_TRUE(m.min_conflict_distance);
  double lo = 1e9;
  for (std::size_t i = 0; i + 1 < r.traces.size(); i += 2) lo = std::min(lo, std::abs(r.traces[i].p - r.traces[i + 1].p));
  EXPECT_NEAR(*m.min_conflict_distance, lo, 1e-9);
}

TEST(Metrics, PoolWeighsBySamples) {
  auto a = curve_of({0.5, 1.0});
  auto b = curve_of({1.0, 0.0});
  b.samples = {3, 0};
  b.mean[1].reset();
  const auto p = pool({a, b});
  EXPECT_DOUBLE_EQ(*p.mean[0], (0.5 + 3.0) / 4.0);
  EXPECT_DOUBLE_EQ(*p.mean[1], 1.0);
  EXPECT_EQ(p.samples[0], 4u);
}
