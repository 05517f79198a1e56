// Four-way intersection layout: lanes, admissible paths, collision points,
// and the arc-length <-> global coordinate maps along each path.
//
// Frame: intersection center at the origin, roads aligned with the axes,
// right-hand traffic. Every approach drives on the lane whose centerline is
// offset lane_width/2 to the right of the road axis.
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace aim {

using GlobalPos = Eigen::Vector2d;

enum class Approach { N, E, S, W };
enum class Maneuver { Straight, Right };

inline constexpr std::array<Approach, 4> kApproaches{Approach::N, Approach::E, Approach::S,
                                                     Approach::W};

std::string_view to_string(Approach a);
std::string_view to_string(Maneuver m);
Approach parse_approach(std::string_view s);
Maneuver parse_maneuver(std::string_view s);

struct LayoutConfig {
  double lane_width = 3.5;   // [m]
  double road_length = 30.0; // [m]

  /// Throws std::invalid_argument unless lane_width > 0 and road_length > lane_width.
  void validate() const;
};

/// One of the four shared points. Indices run 1..4 counterclockwise from the
/// south-east point (+w/2, -w/2).
struct CollisionPoint {
  int index = 0;
  GlobalPos position = GlobalPos::Zero();
};

struct PointCoordinate {
  int point = 0;      // CollisionPoint::index
  double arc = 0.0;   // arc length of the point along the path [m]
};

struct Intersection;
Intersection build_intersection(const LayoutConfig& layout);

class Path {
 public:
  Path(Approach approach, Maneuver maneuver, std::vector<GlobalPos> waypoints);

  Approach approach() const { return approach_; }
  Maneuver maneuver() const { return maneuver_; }
  const std::vector<GlobalPos>& waypoints() const { return waypoints_; }
  double total_length() const { return cumulative_.back(); }

  /// Collision points on this path, strictly increasing in arc length.
  const std::vector<PointCoordinate>& collision_points() const { return points_; }
  std::optional<double> coordinate_of(int point) const;

  /// Unit tangent of the segment containing arc length s (the incoming
  /// segment at a corner).
  Eigen::Vector2d tangent(double s) const;

 private:
  friend GlobalPos locate(const Path& path, double s);
  friend std::optional<double> project(const Path& path, const GlobalPos& g, double tol);
  friend Intersection build_intersection(const LayoutConfig& layout);

  Approach approach_;
  Maneuver maneuver_;
  std::vector<GlobalPos> waypoints_;
  std::vector<double> cumulative_;
  std::vector<PointCoordinate> points_;
};

using PathId = std::size_t;

/// Immutable layout: 4 collision points and 8 paths (4 approaches x {straight, right}).
struct Intersection {
  LayoutConfig layout;
  std::array<CollisionPoint, 4> points;
  std::vector<Path> paths;

  const CollisionPoint& point(int index) const { return points.at(static_cast<std::size_t>(index - 1)); }
  PathId path_id(Approach a, Maneuver m) const;
  const Path& path(PathId id) const { return paths.at(id); }
  const Path& path(Approach a, Maneuver m) const { return paths.at(path_id(a, m)); }
  double max_path_length() const;
};

inline constexpr double kProjectTolerance = 1e-6;

Intersection build_intersection(const LayoutConfig& layout);

/// Point on the polyline at arc length s. Throws std::out_of_range unless
/// 0 <= s <= total_length.
GlobalPos locate(const Path& path, double s);

/// Arc length of g on the path if g lies within tol of the polyline.
std::optional<double> project(const Path& path, const GlobalPos& g, double tol = kProjectTolerance);

inline double euclidean_distance(const GlobalPos& a, const GlobalPos& b) { return (a - b).norm(); }

struct PointAhead {
  CollisionPoint point;
  double distance = 0.0; // along-path distance from s [m]
};

/// Collision points whose arc coordinate strictly exceeds s, nearest first.
std::vector<PointAhead> collision_points_ahead(const Intersection& world, const Path& path, double s);

} // namespace aim
