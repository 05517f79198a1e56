#include "aim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aim {

namespace {

constexpr std::size_t kMaxDiagnostics = 2000;

VehicleInfo info_of(const ActiveVehicle& v) { return {v.id, v.path, v.state, v.input, v.v_ref}; }

bool shares_lane(const Intersection& world, const VehicleInfo& a, const VehicleInfo& b) {
  return project(world.path(b.path), global_position(world, a)).has_value() ||
         project(world.path(a.path), global_position(world, b)).has_value();
}

bool point_ahead(const Path& path, int point, double p) {
  const auto s = path.coordinate_of(point);
  return s && *s > p;
}

bool shares_point_ahead(const Intersection& world, const VehicleInfo& a, const VehicleInfo& b) {
  const Path& pa = world.path(a.path);
  const Path& pb = world.path(b.path);
  for (const auto& c : pa.collision_points()) {
    if (!pb.coordinate_of(c.point)) continue;
    if (point_ahead(pa, c.point, a.state.p) || point_ahead(pb, c.point, b.state.p)) return true;
  }
  return false;
}

void note(SimState& state, std::string msg) {
  if (state.diagnostics.size() < kMaxDiagnostics) {
    state.diagnostics.push_back("k=" + std::to_string(state.k) + ": " + std::move(msg));
  } else if (state.diagnostics.size() == kMaxDiagnostics) {
    state.diagnostics.push_back("further diagnostics suppressed");
  }
}

double draw_v_ref(std::mt19937_64& rng, const SpawnConfig& spawn, const MpcConfig& cfg) {
  if (spawn.v_ref_std == 0.0) return std::clamp(spawn.v_ref_mean, 1e-3, cfg.v_max);
  std::normal_distribution<double> dist(spawn.v_ref_mean, spawn.v_ref_std);
  for (;;) {
    const double v = dist(rng);
    if (v > 0.0 && v <= cfg.v_max) return v;
  }
}

void spawn_vehicles(SimState& state, const Intersection& world, const ScenarioConfig& config) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Approach a : kApproaches) {
    if (unit(state.rng) >= config.spawn.rate) continue;
    const Maneuver m = unit(state.rng) < config.spawn.right_turn_probability ? Maneuver::Right : Maneuver::Straight;
    const double v_ref = draw_v_ref(state.rng, config.spawn, config.mpc);
    const PathId pid = world.path_id(a, m);
    const Path& path = world.path(pid);

    bool blocked = false;
    for (const auto& other : state.vehicles) {
      const auto s = project(path, global_position(world, info_of(other)));
      if (s && *s < entry_gap(v_ref, other.state.v, config.mpc)) {
        blocked = true;
        break;
      }
    }
    if (blocked) continue;

    ActiveVehicle v;
    v.id = AgentId{state.next_id++};
    v.path = pid;
    v.state = {0.0, v_ref};
    v.v_ref = v_ref;
    state.vehicles.push_back(v);
    ++state.spawned;
  }
}

} // namespace

void SpawnConfig::validate() const {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("spawn rate must lie in [0, 1]");
  if (!(v_ref_mean > 0.0)) throw std::invalid_argument("spawn v_ref mean must be positive");
  if (!(v_ref_std >= 0.0)) throw std::invalid_argument("spawn v_ref std must be non-negative");
  if (!(right_turn_probability >= 0.0 && right_turn_probability <= 1.0))
    throw std::invalid_argument("right turn probability must lie in [0, 1]");
}

void ScenarioConfig::validate() const {
  layout.validate();
  mpc.validate();
  bid.validate();
  if (!(step.sampling_time > 0.0)) throw std::invalid_argument("sampling time must be positive");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (mode == ScenarioMode::Generated) {
    spawn.validate();
    return;
  }

  const Intersection world = build_intersection(layout);
  std::vector<VehicleInfo> infos;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto& sv = vehicles[i];
    const PathId pid = world.path_id(sv.approach, sv.maneuver);
    const double len = world.path(pid).total_length();
    std::ostringstream who;
    who << "vehicle " << i + 1;
    if (!(sv.arc >= 0.0 && sv.arc <= len))
      throw std::invalid_argument(who.str() + ": initial arc outside [0, " + std::to_string(len) + "]");
    if (!(sv.speed >= mpc.v_min && sv.speed <= mpc.v_max))
      throw std::invalid_argument(who.str() + ": initial speed outside the speed limits");
    if (!(sv.v_ref > 0.0 && sv.v_ref <= mpc.v_max))
      throw std::invalid_argument(who.str() + ": v_ref must lie in (0, v_max]");
    infos.push_back({AgentId{static_cast<std::uint32_t>(i + 1)}, pid, {sv.arc, sv.speed}, 0.0, sv.v_ref});
  }
  for (std::size_t i = 0; i < infos.size(); ++i)
    for (std::size_t j = i + 1; j < infos.size(); ++j) {
      if (!shares_lane(world, infos[i], infos[j])) continue;
      const double d = euclidean_distance(global_position(world, infos[i]), global_position(world, infos[j]));
      if (d <= mpc.standstill_gap)
        throw std::invalid_argument("vehicles " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                    " start closer than the standstill gap on a shared lane");
    }
}

std::size_t ScenarioConfig::ticks() const {
  return static_cast<std::size_t>(std::llround(duration / step.sampling_time));
}

double entry_gap(double v, double v_front, const MpcConfig& cfg) {
  const double braking = std::max(0.0, v * v - v_front * v_front) / (2.0 * std::abs(cfg.a_min));
  return cfg.standstill_gap + cfg.time_headway * v + braking + cfg.safety_backoff;
}

std::vector<Violation> collision_monitor(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                         double gap, std::size_t k) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < snapshot.size(); ++i)
    for (std::size_t j = i + 1; j < snapshot.size(); ++j) {
      const auto& a = snapshot[i];
      const auto& b = snapshot[j];
      if (!shares_lane(world, a, b) && !shares_point_ahead(world, a, b)) continue;
      const double d = euclidean_distance(global_position(world, a), global_position(world, b));
      if (d < gap) out.push_back({k, std::min(a.id, b.id), std::max(a.id, b.id), d});
    }
  return out;
}

SimState initial_state(const Intersection& world, const ScenarioConfig& config) {
  SimState state;
  state.rng.seed(config.seed);
  if (config.mode == ScenarioMode::Scripted) {
    for (const auto& sv : config.vehicles) {
      ActiveVehicle v;
      v.id = AgentId{state.next_id++};
      v.path = world.path_id(sv.approach, sv.maneuver);
      v.state = {sv.arc, sv.speed};
      v.v_ref = sv.v_ref;
      state.vehicles.push_back(v);
      ++state.spawned;
    }
  }
  return state;
}

void tick(SimState& state, const Intersection& world, const ScenarioConfig& config) {
  std::vector<VehicleInfo> snapshot;
  snapshot.reserve(state.vehicles.size());
  for (const auto& v : state.vehicles) snapshot.push_back(info_of(v));

  if (!snapshot.empty()) {
    const PriorityView view = negotiate(world, snapshot, config.bid);
    for (const auto& d : view.diagnostics) note(state, d);

    std::vector<ControlDecision> decisions;
    decisions.reserve(snapshot.size());
    for (const auto& self : snapshot) decisions.push_back(decide(world, snapshot, self, view, config.mpc, config.step));

    for (std::size_t i = 0; i < state.vehicles.size(); ++i) {
      auto& v = state.vehicles[i];
      const auto& d = decisions[i];
      for (const auto& msg : d.diagnostics) note(state, "vehicle " + std::to_string(v.id.value) + ": " + msg);

      const auto moved = step(v.state, d.u0, config.step);

      TraceRecord rec;
      rec.k = state.k;
      rec.id = v.id;
      rec.path = v.path;
      rec.p = v.state.p;
      rec.v = v.state.v;
      rec.u = d.u0;
      rec.v_ref = v.v_ref;
      const auto& prio = view.of(v.id);
      for (const auto& [h, bid] : prio.bids) rec.bids.at(static_cast<std::size_t>(h - 1)) = bid;
      for (const auto& pa : collision_points_ahead(world, world.path(v.path), v.state.p))
        rec.distance.at(static_cast<std::size_t>(pa.point.index - 1)) = pa.distance;
      rec.higher = prio.higher.size();
      rec.clamped = moved.clamped;
      rec.fallback = d.status == DecisionStatus::FallbackBraking;
      state.traces.push_back(rec);

      for (const auto& c : world.path(v.path).collision_points())
        if (v.state.p <= c.arc && c.arc < moved.state.p) state.crossings.push_back({state.k + 1, v.id, c.point});

      v.state = moved.state;
      v.input = d.u0;
    }
  }

  const auto before = state.vehicles.size();
  std::erase_if(state.vehicles,
                [&](const ActiveVehicle& v) { return v.state.p >= world.path(v.path).total_length(); });
  state.despawned += before - state.vehicles.size();

  if (config.mode == ScenarioMode::Generated) spawn_vehicles(state, world, config);

  snapshot.clear();
  for (const auto& v : state.vehicles) snapshot.push_back(info_of(v));
  for (const auto& viol : collision_monitor(world, snapshot, config.mpc.standstill_gap, state.k + 1)) {
    note(state, "vehicles " + std::to_string(viol.a.value) + " and " + std::to_string(viol.b.value) +
                    " closer than the standstill gap");
    state.violations.push_back(viol);
  }
  ++state.k;
}

RunResult run(const ScenarioConfig& config) {
  config.validate();
  RunResult out;
  out.world = build_intersection(config.layout);
  SimState state = initial_state(out.world, config);
  out.ticks = config.ticks();
  for (std::size_t k = 0; k < out.ticks; ++k) tick(state, out.world, config);
  out.traces = std::move(state.traces);
  out.violations = std::move(state.violations);
  out.crossings = std::move(state.crossings);
  out.diagnostics = std::move(state.diagnostics);
  out.spawned = state.spawned;
  out.despawned = state.despawned;
  return out;
}

} // namespace aim
