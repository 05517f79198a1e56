// Crossing-priority negotiation: bids, the vehicle <-> collision point maps,
// one auction per point, and the per-vehicle sets a controller must respect.
#pragma once

#include "aim/cbaa.hpp"
#include "aim/dynamics.hpp"
#include "aim/geometry.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace aim {

struct BidParams {
  double p_v = 1.0;
  double p_d = 1.0;
  double epsilon = 0.1; // [m]

  void validate() const;
};

/// (p_v v + p_d) / (d + epsilon)
double compute_bid(double v, double d, const BidParams& params);

/// What every vehicle broadcasts at the start of a step.
struct VehicleInfo {
  AgentId id;
  PathId path = 0;
  VehicleState state;
  double input = 0.0; // last applied acceleration [m/s^2]
  double v_ref = 0.0; // [m/s]
};

GlobalPos global_position(const Intersection& world, const VehicleInfo& v);

/// Vehicles whose global position lies on the subject's path strictly ahead
/// of it, in increasing path coordinate.
std::vector<AgentId> frontal_set(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                 const VehicleInfo& subject);

struct CrossingMaps {
  std::map<AgentId, std::vector<PointAhead>> ahead; // vehicle -> points still to cross
  std::map<int, std::vector<AgentId>> crossing;      // point -> vehicles that will cross it
};

CrossingMaps crossing_maps(const Intersection& world, std::span<const VehicleInfo> snapshot);

struct PointList {
  int point = 0;
  std::vector<AgentId> order; // first crosses first
  std::vector<double> bids;
  bool had_ties = false;
};

struct VehiclePriority {
  std::vector<AgentId> frontal;
  std::vector<AgentId> higher; // ranked above this vehicle at some point it will cross
  std::vector<AgentId> aware;  // frontal union higher, sorted by id
  std::map<int, double> bids;  // bid placed per point
};

struct PriorityView {
  std::map<int, PointList> lists;
  std::map<AgentId, VehiclePriority> vehicles;
  std::vector<std::string> diagnostics;

  const VehiclePriority& of(AgentId id) const { return vehicles.at(id); }
};

PriorityView negotiate(const Intersection& world, std::span<const VehicleInfo> snapshot, const BidParams& params);

} // namespace aim
