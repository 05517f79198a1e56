// Closed-loop world: every step all vehicles negotiate, solve against the
// same snapshot, and move together. In generated mode a spawner feeds the
// four entries.
#pragma once

#include "aim/mpc.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace aim {

struct ScriptedVehicle {
  Approach approach = Approach::S;
  Maneuver maneuver = Maneuver::Straight;
  double arc = 0.0;   // initial position along the path [m]
  double speed = 0.0; // [m/s]
  double v_ref = 0.0; // [m/s]
};

struct SpawnConfig {
  double rate = 0.0;          // spawn probability per approach per step
  double v_ref_mean = 12.5;   // [m/s]
  double v_ref_std = 0.62;    // [m/s]
  double right_turn_probability = 0.5;

  void validate() const;
};

enum class ScenarioMode { Scripted, Generated };

struct ScenarioConfig {
  LayoutConfig layout;
  StepParams step;
  MpcConfig mpc;
  BidParams bid;
  ScenarioMode mode = ScenarioMode::Scripted;
  std::vector<ScriptedVehicle> vehicles;
  SpawnConfig spawn;
  double duration = 5.0; // [s]
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument on out-of-range values or scripted vehicles
  /// closer than the standstill gap on a shared lane.
  void validate() const;
  std::size_t ticks() const;
};

struct ActiveVehicle {
  AgentId id;
  PathId path = 0;
  VehicleState state;
  double v_ref = 0.0;
  double input = 0.0; // last applied
};

/// One row per active vehicle per step: the state at step k and what the
/// vehicle decided from it.
struct TraceRecord {
  std::size_t k = 0;
  AgentId id;
  PathId path = 0;
  double p = 0.0;
  double v = 0.0;
  double u = 0.0;
  double v_ref = 0.0;
  std::array<std::optional<double>, 4> bids;     // per collision point
  std::array<std::optional<double>, 4> distance; // along-path distance to points still ahead
  std::size_t higher = 0;                        // vehicles ranked above at some point
  bool clamped = false;
  bool fallback = false;
};

struct Violation {
  std::size_t k = 0; // step after which the pair was too close
  AgentId a, b;
  double distance = 0.0;
};

struct CrossingEvent {
  std::size_t k = 0; // first step at which the vehicle is past the point
  AgentId id;
  int point = 0;
};

struct SimState {
  std::size_t k = 0;
  std::vector<ActiveVehicle> vehicles;
  std::uint32_t next_id = 1;
  std::mt19937_64 rng;
  std::vector<TraceRecord> traces;
  std::vector<Violation> violations;
  std::vector<CrossingEvent> crossings;
  std::vector<std::string> diagnostics;
  std::size_t spawned = 0;
  std::size_t despawned = 0;
};

SimState initial_state(const Intersection& world, const ScenarioConfig& config);

/// negotiate, decide all, step all, despawn, spawn, monitor, record.
void tick(SimState& state, const Intersection& world, const ScenarioConfig& config);

struct RunResult {
  Intersection world;
  std::size_t ticks = 0;
  std::vector<TraceRecord> traces;
  std::vector<Violation> violations;
  std::vector<CrossingEvent> crossings;
  std::vector<std::string> diagnostics;
  std::size_t spawned = 0;
  std::size_t despawned = 0;
};

RunResult run(const ScenarioConfig& config);

/// Pairs that can conflict: sharing a lane (one lies on the other's path) or
/// sharing a collision point still ahead of at least one of them. A pair is
/// flagged when strictly closer than `gap`.
std::vector<Violation> collision_monitor(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                         double gap, std::size_t k = 0);

/// Clear distance an entering vehicle at speed v needs to the nearest vehicle
/// ahead moving at v_front: the headway gap plus the extra braking distance.
double entry_gap(double v, double v_front, const MpcConfig& cfg);

} // namespace aim
