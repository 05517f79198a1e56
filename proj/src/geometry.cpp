#include "aim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aim {

namespace {

Eigen::Vector2d heading_of(Approach a) {
  switch (a) {
    case Approach::N: return {0.0, -1.0};
    case Approach::E: return {-1.0, 0.0};
    case Approach::S: return {0.0, 1.0};
    case Approach::W: return {1.0, 0.0};
  }
  return {0.0, 0.0};
}

Eigen::Vector2d right_of(const Eigen::Vector2d& h) { return {h.y(), -h.x()}; }

} // namespace

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::N: return "N";
    case Approach::E: return "E";
    case Approach::S: return "S";
    case Approach::W: return "W";
  }
  return "?";
}

std::string_view to_string(Maneuver m) { return m == Maneuver::Straight ? "straight" : "right"; }

Approach parse_approach(std::string_view s) {
  if (s == "N") return Approach::N;
  if (s == "E") return Approach::E;
  if (s == "S") return Approach::S;
  if (s == "W") return Approach::W;
  throw std::invalid_argument("unknown approach '" + std::string(s) + "' (expected N, E, S or W)");
}

Maneuver parse_maneuver(std::string_view s) {
  if (s == "straight") return Maneuver::Straight;
  if (s == "right") return Maneuver::Right;
  throw std::invalid_argument("unknown maneuver '" + std::string(s) + "' (expected straight or right)");
}

void LayoutConfig::validate() const {
  if (!(lane_width > 0.0)) throw std::invalid_argument("lane_width must be > 0");
  if (!(road_length > lane_width)) throw std::invalid_argument("road_length must exceed lane_width");
}

Path::Path(Approach approach, Maneuver maneuver, std::vector<GlobalPos> waypoints)
    : approach_(approach), maneuver_(maneuver), waypoints_(std::move(waypoints)) {
  if (waypoints_.size() < 2) throw std::invalid_argument("a path needs at least two waypoints");
  cumulative_.reserve(waypoints_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < waypoints_.size(); ++i)
    cumulative_.push_back(cumulative_.back() + (waypoints_[i] - waypoints_[i - 1]).norm());
}

std::optional<double> Path::coordinate_of(int point) const {
  for (const auto& pc : points_)
    if (pc.point == point) return pc.arc;
  return std::nullopt;
}

Eigen::Vector2d Path::tangent(double s) const {
  std::size_t seg = 0;
  while (seg + 2 < waypoints_.size() && s > cumulative_[seg + 1]) ++seg;
  return (waypoints_[seg + 1] - waypoints_[seg]).normalized();
}

PathId Intersection::path_id(Approach a, Maneuver m) const {
  for (PathId id = 0; id < paths.size(); ++id)
    if (paths[id].approach() == a && paths[id].maneuver() == m) return id;
  throw std::out_of_range("no such path");
}

double Intersection::max_path_length() const {
  double longest = 0.0;
  for (const auto& p : paths) longest = std::max(longest, p.total_length());
  return longest;
}

Intersection build_intersection(const LayoutConfig& layout) {
  layout.validate();
  const double half = layout.lane_width / 2.0;
  const double reach = layout.road_length + layout.lane_width;

  Intersection world;
  world.layout = layout;
  world.points = {CollisionPoint{1, {half, -half}}, CollisionPoint{2, {half, half}},
                  CollisionPoint{3, {-half, half}}, CollisionPoint{4, {-half, -half}}};

  for (Approach a : kApproaches) {
    const Eigen::Vector2d h = heading_of(a);
    const Eigen::Vector2d r = right_of(h);
    const GlobalPos start = r * half - h * reach;

    world.paths.emplace_back(a, Maneuver::Straight, std::vector<GlobalPos>{start, r * half + h * reach});

    // Right turn: straight segments meeting at a right angle on the exit lane.
    const GlobalPos corner = r * half - h * half;
    world.paths.emplace_back(a, Maneuver::Right,
                             std::vector<GlobalPos>{start, corner, corner + r * (reach - half)});
  }

  for (auto& path : world.paths) {
    for (const auto& cp : world.points)
      if (auto s = project(path, cp.position)) path.points_.push_back({cp.index, *s});
    std::sort(path.points_.begin(), path.points_.end(),
              [](const PointCoordinate& a, const PointCoordinate& b) { return a.arc < b.arc; });
  }
  return world;
}

GlobalPos locate(const Path& path, double s) {
  const auto& cum = path.cumulative_;
  if (!(s >= 0.0 && s <= cum.back()))
    throw std::out_of_range("arc length " + std::to_string(s) + " outside [0, " + std::to_string(cum.back()) + "]");
  std::size_t seg = 0;
  while (seg + 2 < cum.size() && s > cum[seg + 1]) ++seg;
  const double len = cum[seg + 1] - cum[seg];
  const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
  return path.waypoints_[seg] + t * (path.waypoints_[seg + 1] - path.waypoints_[seg]);
}

std::optional<double> project(const Path& path, const GlobalPos& g, double tol) {
  const auto& wp = path.waypoints_;
  std::optional<double> best;
  double best_dist = tol;
  for (std::size_t seg = 0; seg + 1 < wp.size(); ++seg) {
    const Eigen::Vector2d d = wp[seg + 1] - wp[seg];
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((g - wp[seg]).dot(d) / len2, 0.0, 1.0) : 0.0;
    const double dist = (wp[seg] + t * d - g).norm();
    if (dist <= best_dist && (!best || dist < best_dist)) {
      best_dist = dist;
      best = path.cumulative_[seg] + t * std::sqrt(len2);
    }
  }
  return best;
}

std::vector<PointAhead> collision_points_ahead(const Intersection& world, const Path& path, double s) {
  std::vector<PointAhead> ahead;
  for (const auto& pc : path.collision_points())
    if (pc.arc > s) ahead.push_back({world.point(pc.point), pc.arc - s});
  return ahead;
}

} // namespace aim
