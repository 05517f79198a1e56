// Post-processing over traces: speed ratios, the binned traffic speed ratio
// per maneuver class, and the realized density.
#pragma once

#include "aim/sim.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace aim {

/// v / v_ref. Throws std::invalid_argument unless v_ref > 0.
double speed_ratio(double v, double v_ref);

enum class TrafficClass { Straight, Right, All };
inline constexpr std::array<TrafficClass, 3> kTrafficClasses{TrafficClass::Straight, TrafficClass::Right,
                                                             TrafficClass::All};
std::string_view to_string(TrafficClass c);

struct SpeedRatioCurve {
  TrafficClass traffic_class = TrafficClass::All;
  double bin_width = 1.0;
  std::vector<std::optional<double>> mean; // per bin, absent when no sample fell in it
  std::vector<std::size_t> samples;

  double bin_center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width; }
  /// Mean over the present bins.
  std::optional<double> average() const;
};

/// Mean speed ratio of every sample whose position falls in each bin. Bins
/// cover [0, max path length].
SpeedRatioCurve traffic_speed_ratio(const Intersection& world, const std::vector<TraceRecord>& traces,
                                    TrafficClass c, double bin_width = 1.0);

/// Sample-weighted merge of curves of one class and bin width, e.g. across seeds.
SpeedRatioCurve pool(const std::vector<SpeedRatioCurve>& curves);

/// Time average of the active-vehicle count.
double density(const std::vector<TraceRecord>& traces, std::size_t ticks);

struct Dip {
  std::size_t bin = 0;
  double depth = 0.0; // drop below the lower of the two surrounding maxima
};

/// Local minima of the curve whose prominence is at least `min_depth`,
/// ordered by bin. Absent bins are skipped over.
std::vector<Dip> find_dips(const SpeedRatioCurve& curve, double min_depth);

struct MetricsReport {
  std::vector<double> speed_ratio;  // per trace record
  std::vector<SpeedRatioCurve> curves; // one per TrafficClass
  double density = 0.0;
  std::optional<double> min_conflict_distance; // over the recorded states
  std::size_t fallback_events = 0;
  std::size_t clamp_events = 0;
};

MetricsReport compute_metrics(const RunResult& run, double bin_width = 1.0);

} // namespace aim
