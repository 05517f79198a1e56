#include "aim/priority.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aim {

void BidParams::validate() const {
  if (!(p_v > 0.0) || !(p_d > 0.0) || !(epsilon > 0.0))
    throw std::invalid_argument("bid weights and epsilon must be positive");
}

double compute_bid(double v, double d, const BidParams& params) {
  return (params.p_v * v + params.p_d) / (d + params.epsilon);
}

GlobalPos global_position(const Intersection& world, const VehicleInfo& v) {
  const Path& path = world.path(v.path);
  return locate(path, std::clamp(v.state.p, 0.0, path.total_length()));
}

std::vector<AgentId> frontal_set(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                 const VehicleInfo& subject) {
  const Path& mine = world.path(subject.path);
  std::vector<std::pair<double, AgentId>> ahead;
  for (const auto& other : snapshot) {
    if (other.id == subject.id) continue;
    const auto s = project(mine, global_position(world, other));
    if (s && *s > subject.state.p) ahead.emplace_back(*s, other.id);
  }
  std::sort(ahead.begin(), ahead.end());
  std::vector<AgentId> out;
  for (const auto& [s, id] : ahead) out.push_back(id);
  return out;
}

CrossingMaps crossing_maps(const Intersection& world, std::span<const VehicleInfo> snapshot) {
  CrossingMaps maps;
  for (const auto& v : snapshot) {
    auto pts = collision_points_ahead(world, world.path(v.path), v.state.p);
    for (const auto& pa : pts) maps.crossing[pa.point.index].push_back(v.id);
    maps.ahead[v.id] = std::move(pts);
  }
  for (auto& [h, ids] : maps.crossing) std::sort(ids.begin(), ids.end());
  return maps;
}

PriorityView negotiate(const Intersection& world, std::span<const VehicleInfo> snapshot, const BidParams& params) {
  params.validate();
  PriorityView view;
  const auto maps = crossing_maps(world, snapshot);

  std::map<AgentId, const VehicleInfo*> by_id;
  for (const auto& v : snapshot) by_id[v.id] = &v;

  for (const auto& [h, members] : maps.crossing) {
    std::map<AgentId, double> bids;
    for (AgentId id : members) {
      const VehicleInfo& v = *by_id.at(id);
      const double d = euclidean_distance(global_position(world, v), world.point(h).position);
      bids[id] = compute_bid(v.state.v, d, params);
      view.vehicles[id].bids[h] = bids[id];
    }
    const auto res = run_auction(bids);
    if (!res.agreed) view.diagnostics.push_back("auction at point " + std::to_string(h) + " did not agree");
    view.lists[h] = PointList{h, res.winners, res.bids, res.had_ties};
  }

  for (const auto& v : snapshot) {
    auto& vp = view.vehicles[v.id];
    vp.frontal = frontal_set(world, snapshot, v);
    std::set<AgentId> higher;
    for (const auto& pa : maps.ahead.at(v.id)) {
      for (AgentId other : view.lists.at(pa.point.index).order) {
        if (other == v.id) break;
        higher.insert(other);
      }
    }
    vp.higher.assign(higher.begin(), higher.end());
    std::set<AgentId> aware(higher);
    aware.insert(vp.frontal.begin(), vp.frontal.end());
    vp.aware.assign(aware.begin(), aware.end());

    // a rear vehicle ranked above its frontal vehicle: lists kept, safety
    // still covered since the frontal vehicle stays in the awareness set
    for (AgentId f : vp.frontal) {
      for (const auto& [h, list] : view.lists) {
        const auto me = std::find(list.order.begin(), list.order.end(), v.id);
        const auto it = std::find(list.order.begin(), list.order.end(), f);
        if (me != list.order.end() && it != list.order.end() && me < it) {
          std::ostringstream os;
          os << "vehicle " << v.id.value << " ranked above frontal " << f.value << " at point " << h;
          view.diagnostics.push_back(os.str());
        }
      }
    }
  }
  return view;
}

} // namespace aim
