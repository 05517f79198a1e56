#include "aim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace aim {

double speed_ratio(double v, double v_ref) {
  if (!(v_ref > 0.0)) throw std::invalid_argument("v_ref must be positive");
  return v / v_ref;
}

std::string_view to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::Straight: return "straight";
    case TrafficClass::Right: return "right";
    case TrafficClass::All: return "all";
  }
  return "?";
}

std::optional<double> SpeedRatioCurve::average() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : mean)
    if (m) {
      sum += *m;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

SpeedRatioCurve traffic_speed_ratio(const Intersection& world, const std::vector<TraceRecord>& traces,
                                    TrafficClass c, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  SpeedRatioCurve curve;
  curve.traffic_class = c;
  curve.bin_width = bin_width;
  const auto bins = static_cast<std::size_t>(std::ceil(world.max_path_length() / bin_width));
  std::vector<double> sum(bins, 0.0);
  curve.samples.assign(bins, 0);
  for (const auto& t : traces) {
    const Maneuver m = world.path(t.path).maneuver();
    if (c == TrafficClass::Straight && m != Maneuver::Straight) continue;
    if (c == TrafficClass::Right && m != Maneuver::Right) continue;
    const auto i = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, t.p) / bin_width));
    sum[i] += speed_ratio(t.v, t.v_ref);
    ++curve.samples[i];
  }
  curve.mean.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    if (curve.samples[i] > 0) curve.mean[i] = sum[i] / static_cast<double>(curve.samples[i]);
  return curve;
}

SpeedRatioCurve pool(const std::vector<SpeedRatioCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("nothing to pool");
  SpeedRatioCurve out;
  out.traffic_class = curves.front().traffic_class;
  out.bin_width = curves.front().bin_width;
  const std::size_t bins = curves.front().mean.size();
  std::vector<double> sum(bins, 0.0);
  out.samples.assign(bins, 0);
  for (const auto& c : curves) {
    if (c.mean.size() != bins || c.bin_width != out.bin_width || c.traffic_class != out.traffic_class)
      throw std::invalid_argument("curves do not share bins and class");
    for (std::size_t i = 0; i < bins; ++i)
      if (c.mean[i]) {
        sum[i] += *c.mean[i] * static_cast<double>(c.samples[i]);
        out.samples[i] += c.samples[i];
      }
  }
  out.mean.resize(bins);
  for (std::size_t i = 0; i < bins; ++i)
    if (out.samples[i] > 0) out.mean[i] = sum[i] / static_cast<double>(out.samples[i]);
  return out;
}

double density(const std::vector<TraceRecord>& traces, std::size_t ticks) {
  if (ticks == 0) return 0.0;
  return static_cast<double>(traces.size()) / static_cast<double>(ticks);
}

std::vector<Dip> find_dips(const SpeedRatioCurve& curve, double min_depth) {
  std::vector<std::size_t> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < curve.mean.size(); ++i)
    if (curve.mean[i]) {
      idx.push_back(i);
      val.push_back(*curve.mean[i]);
    }

  std::vector<Dip> out;
  const std::size_t n = val.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // first bin of a flat bottom
    if (!(val[i] < val[i - 1] && val[i] <= val[i + 1])) continue;
    double left = val[i], right = val[i];
    for (std::size_t j = i; j-- > 0;) {
      if (val[j] < val[i]) break;
      left = std::max(left, val[j]);
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (val[j] < val[i]) break;
      right = std::max(right, val[j]);
    }
    const double depth = std::min(left, right) - val[i];
    if (depth >= min_depth) out.push_back({idx[i], depth});
  }
  return out;
}

MetricsReport compute_metrics(const RunResult& run, double bin_width) {
  MetricsReport m;
  m.speed_ratio.reserve(run.traces.size());
  for (const auto& t : run.traces) {
    m.speed_ratio.push_back(speed_ratio(t.v, t.v_ref));
    m.fallback_events += t.fallback;
    m.clamp_events += t.clamped;
  }
  for (TrafficClass c : kTrafficClasses) m.curves.push_back(traffic_speed_ratio(run.world, run.traces, c, bin_width));
  m.density = density(run.traces, run.ticks);

  // traces are grouped by step
  std::vector<VehicleInfo> snap;
  auto flush = [&] {
    for (const auto& v : collision_monitor(run.world, snap, std::numeric_limits<double>::infinity()))
      m.min_conflict_distance = m.min_conflict_distance ? std::min(*m.min_conflict_distance, v.distance) : v.distance;
    snap.clear();
  };
  for (std::size_t i = 0; i < run.traces.size(); ++i) {
    const auto& t = run.traces[i];
    if (i > 0 && run.traces[i - 1].k != t.k) flush();
    snap.push_back({t.id, t.path, {t.p, t.v}, t.u, t.v_ref});
  }
  flush();
  return m;
}

} // namespace aim
