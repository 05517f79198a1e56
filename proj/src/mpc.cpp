#include "aim/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace aim {

void MpcConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(q_weight > 0.0) || !(r_weight > 0.0)) throw std::invalid_argument("q and r must be positive");
  if (!(omega < 0.0)) throw std::invalid_argument("omega must be negative");
  if (!(headway_relax >= 0.0 && headway_relax < time_headway))
    throw std::invalid_argument("need 0 <= headway_relax < time_headway");
  if (!(slack_upper > 0.0)) throw std::invalid_argument("slack_upper must be positive");
  if (!(a_min < 0.0 && a_max > 0.0)) throw std::invalid_argument("need a_min < 0 < a_max");
  if (!(v_min >= 0.0 && v_min < v_max)) throw std::invalid_argument("need 0 <= v_min < v_max");
  if (!(standstill_gap >= 0.0) || !(safety_backoff >= 0.0) || !(crossing_clearance >= 0.0))
    throw std::invalid_argument("gaps must be nonnegative");
}

namespace {

const VehicleInfo* find(std::span<const VehicleInfo> snapshot, AgentId id) {
  for (const auto& v : snapshot)
    if (v.id == id) return &v;
  return nullptr;
}

bool ranked_above(const PointList& list, AgentId a, AgentId b) {
  const auto ia = std::find(list.order.begin(), list.order.end(), a);
  const auto ib = std::find(list.order.begin(), list.order.end(), b);
  return ia != list.order.end() && ib != list.order.end() && ia < ib;
}

// First arc length s >= from whose point lies strictly inside the disc of
// radius r around c.
std::optional<double> first_inside(const Path& path, double from, const GlobalPos& c, double r) {
  const auto& w = path.waypoints();
  double s0 = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const Eigen::Vector2d d = w[i + 1] - w[i];
    const double len = d.norm();
    const double s1 = s0 + len;
    if (s1 > from && len > 0.0) {
      const Eigen::Vector2d rel = c - w[i];
      const double along = rel.dot(d) / len;
      const double perp = std::sqrt(std::max(0.0, rel.squaredNorm() - along * along));
      if (perp < r - kProjectTolerance) {
        const double half = std::sqrt(r * r - perp * perp);
        const double lo = std::max({s0 + along - half, from, s0});
        const double hi = std::min(s0 + along + half, s1);
        if (lo < hi) return lo;
      }
    }
    s0 = s1;
  }
  return std::nullopt;
}

// Crossed a point that is still ahead of me, so it may sit just past it.
bool departed_ahead(const Path& mine, double p, const Path& theirs, double q) {
  for (const auto& c : mine.collision_points()) {
    if (c.arc <= p) continue;
    const auto arc = theirs.coordinate_of(c.point);
    if (arc && *arc < q) return true;
  }
  return false;
}

} // namespace

ConflictPrediction predict_conflicts(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                     const VehicleInfo& self, const PriorityView& view, const MpcConfig& cfg,
                                     const StepParams& step) {
  ConflictPrediction out;
  const Path& mine = world.path(self.path);
  const auto& me = view.of(self.id);
  const auto my_points = collision_points_ahead(world, mine, self.state.p);

  std::vector<AgentId> tracked = me.aware;
  for (const auto& v : snapshot) {
    if (v.id == self.id || std::find(tracked.begin(), tracked.end(), v.id) != tracked.end()) continue;
    if (departed_ahead(mine, self.state.p, world.path(v.path), v.state.p)) tracked.push_back(v.id);
  }

  for (AgentId id : tracked) {
    const VehicleInfo* other = find(snapshot, id);
    if (!other) {
      out.diagnostics.push_back("no broadcast from vehicle " + std::to_string(id.value));
      continue;
    }
    const Path& theirs = world.path(other->path);
    const auto here = project(mine, global_position(world, *other));
    // a higher-priority vehicle behind me on my own lane cannot pass me
    if (here && *here <= self.state.p) continue;

    ObstacleTrack track;
    track.id = id;
    track.frontal = std::find(me.frontal.begin(), me.frontal.end(), id) != me.frontal.end();
    track.states = rollout_const_input(other->state, other->input, cfg.horizon, step, cfg.limits());
    track.on_my_path.resize(track.states.size());
    for (std::size_t t = 0; t < track.states.size(); ++t) {
      const double s = track.states[t].p;
      if (s > theirs.total_length()) continue; // left the map
      const GlobalPos g = locate(theirs, s);
      std::optional<double> ref;
      if (const auto c = project(mine, g); c && *c > self.state.p) ref = *c;
      // around a corner, or once it has turned off, the straight-line gap is the short one
      if (const auto e = first_inside(mine, self.state.p, g, cfg.standstill_gap)) {
        const double r = *e + cfg.standstill_gap;
        ref = ref ? std::min(*ref, r) : r;
      }
      track.on_my_path[t] = ref;
    }

    if (!track.frontal && std::find(me.aware.begin(), me.aware.end(), id) != me.aware.end()) {
      for (const auto& pa : my_points) {
        const int h = pa.point.index;
        const auto list = view.lists.find(h);
        if (list == view.lists.end() || !ranked_above(list->second, id, self.id)) continue;
        const auto their_arc = theirs.coordinate_of(h);
        if (!their_arc) continue;
        PointCrossing pc{h, *mine.coordinate_of(h), cfg.horizon + 1};
        for (std::size_t t = 0; t < track.states.size(); ++t) {
          if (track.states[t].p - *their_arc > cfg.crossing_clearance) {
            pc.crossed_by_step = t;
            break;
          }
        }
        track.precedence.push_back(pc);
      }
    }
    out.tracks.push_back(std::move(track));
  }
  return out;
}

MpcProblem safety_envelope(const VehicleInfo& self, const ConflictPrediction& prediction, const MpcConfig& cfg) {
  cfg.validate();
  const std::size_t H = cfg.horizon;
  MpcProblem prob;
  prob.horizon = H;
  prob.safety_bound.assign(H + 1, std::nullopt);
  auto tighten = [&](std::size_t t, double s) {
    auto& b = prob.safety_bound[t];
    b = b ? std::min(*b, s) : s;
  };
  for (const auto& track : prediction.tracks) {
    for (std::size_t t = 0; t <= H; ++t)
      if (track.on_my_path[t]) tighten(t, *track.on_my_path[t]);
    for (const auto& pc : track.precedence)
      for (std::size_t t = 0; t < std::min(pc.crossed_by_step, H + 1); ++t) tighten(t, pc.my_coord);
  }
  if (prob.safety_bound[0]) {
    const double b = *prob.safety_bound[0] - cfg.standstill_gap - cfg.safety_backoff - self.state.p -
                     cfg.time_headway * self.state.v;
    if (b < -cfg.headway_relax * self.state.v) {
      // the current state already violates it; nothing left to decide at t = 0
      prob.safety_bound[0].reset();
      ++prob.dropped_rows;
      std::ostringstream os;
      os << "vehicle " << self.id.value << " inside safety gap by " << -b << " m";
      prob.diagnostics.push_back(os.str());
    }
  }
  return prob;
}

MpcProblem assemble(const VehicleInfo& self, const ConflictPrediction& prediction, const MpcConfig& cfg,
                    const StepParams& step) {
  MpcProblem prob = safety_envelope(self, prediction, cfg);
  const std::size_t H = cfg.horizon;
  const auto nH = static_cast<Eigen::Index>(H);
  const Eigen::Index n = 2 * nH + 1;
  const CondensedRollout roll(self.state, H, step);

  // cost
  auto& qp = prob.qp;
  qp.P = Eigen::MatrixXd::Zero(n, n);
  qp.q = Eigen::VectorXd::Zero(n);
  const auto Sv = roll.speed.bottomRows(nH);
  const Eigen::VectorXd dv = roll.v_free.tail(nH).array() - self.v_ref;
  qp.P.topLeftCorner(nH, nH) = 2.0 * cfg.q_weight * Sv.transpose() * Sv;
  qp.P.topLeftCorner(nH, nH).diagonal().array() += 2.0 * cfg.r_weight;
  qp.q.head(nH) = 2.0 * cfg.q_weight * Sv.transpose() * dv;
  qp.q.tail(nH + 1).setConstant(cfg.omega);

  // constraints
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](Eigen::VectorXd g, double b) {
    rows.push_back(std::move(g));
    rhs.push_back(b);
  };
  for (std::size_t t = 0; t < H; ++t) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g(MpcProblem::u_index(t)) = 1.0;
    add(g, cfg.a_max);
    add(-g, -cfg.a_min);
  }
  for (std::size_t t = 1; t <= H; ++t) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g.head(nH) = roll.speed.row(static_cast<Eigen::Index>(t)).transpose();
    const double vf = roll.v_free(static_cast<Eigen::Index>(t));
    add(g, cfg.v_max - vf);
    add(-g, vf - cfg.v_min);
  }
  for (std::size_t t = 0; t <= H; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g(prob.delta_index(t)) = 1.0;
    add(g, cfg.slack_upper);
    Eigen::VectorXd lo = -g;
    lo.head(nH) -= cfg.headway_relax * roll.speed.row(ti).transpose();
    add(lo, cfg.headway_relax * roll.v_free(ti));
  }
  for (std::size_t t = 0; t <= H; ++t) {
    if (!prob.safety_bound[t]) continue;
    const auto ti = static_cast<Eigen::Index>(t);
    const double b = *prob.safety_bound[t] - cfg.standstill_gap - cfg.safety_backoff - roll.p_free(ti) -
                     cfg.time_headway * roll.v_free(ti);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    g.head(nH) = (roll.position.row(ti) + cfg.time_headway * roll.speed.row(ti)).transpose();
    g(prob.delta_index(t)) = 1.0;
    add(g, b);
  }

  qp.G.resize(static_cast<Eigen::Index>(rows.size()), n);
  qp.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    qp.G.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    qp.h(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  return prob;
}

qp::QuadraticProgram<double> speed_form(const VehicleInfo& self, const MpcProblem& envelope, const MpcConfig& cfg,
                                        const StepParams& step) {
  const std::size_t H = cfg.horizon;
  const auto nH = static_cast<Eigen::Index>(H);
  const Eigen::Index n = 2 * nH + 1;
  const double ts = step.sampling_time;
  const double v0 = self.state.v;
  auto vi = [](std::size_t t) { return static_cast<Eigen::Index>(t) - 1; }; // v(t), t >= 1
  auto di = [&](std::size_t t) { return nH + static_cast<Eigen::Index>(t); };

  qp::QuadraticProgram<double> qp;
  qp.P = Eigen::MatrixXd::Zero(n, n);
  qp.q = Eigen::VectorXd::Zero(n);
  const double r2 = 2.0 * cfg.r_weight / (ts * ts);
  for (std::size_t t = 1; t <= H; ++t) {
    qp.P(vi(t), vi(t)) = 2.0 * cfg.q_weight + (t < H ? 2.0 : 1.0) * r2;
    if (t < H) qp.P(vi(t), vi(t + 1)) = qp.P(vi(t + 1), vi(t)) = -r2;
    qp.q(vi(t)) = -2.0 * cfg.q_weight * self.v_ref;
  }
  qp.q(vi(1)) -= r2 * v0;
  qp.q.tail(nH + 1).setConstant(cfg.omega);

  std::size_t rows = 4 * H + 2 * (H + 1);
  for (const auto& b : envelope.safety_bound) rows += b.has_value();
  qp.G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), n);
  qp.h.resize(static_cast<Eigen::Index>(rows));
  Eigen::Index row = 0;
  for (std::size_t t = 0; t < H; ++t) {
    // u(t) = (v(t+1) - v(t)) / ts, with v(0) fixed
    const double fixed = t == 0 ? -v0 / ts : 0.0;
    qp.G(row, vi(t + 1)) = 1.0 / ts;
    if (t > 0) qp.G(row, vi(t)) = -1.0 / ts;
    qp.h(row++) = cfg.a_max - fixed;
    qp.G(row, vi(t + 1)) = -1.0 / ts;
    if (t > 0) qp.G(row, vi(t)) = 1.0 / ts;
    qp.h(row++) = fixed - cfg.a_min;
  }
  for (std::size_t t = 1; t <= H; ++t) {
    qp.G(row, vi(t)) = 1.0;
    qp.h(row++) = cfg.v_max;
    qp.G(row, vi(t)) = -1.0;
    qp.h(row++) = -cfg.v_min;
  }
  for (std::size_t t = 0; t <= H; ++t) {
    qp.G(row, di(t)) = 1.0;
    qp.h(row++) = cfg.slack_upper;
    qp.G(row, di(t)) = -1.0;
    if (t > 0) {
      qp.G(row, vi(t)) = -cfg.headway_relax;
      qp.h(row++) = 0.0;
    } else {
      qp.h(row++) = cfg.headway_relax * v0;
    }
  }
  for (std::size_t t = 0; t <= H; ++t) {
    if (!envelope.safety_bound[t]) continue;
    // p(t) = p0 + ts * (v(0) + ... + v(t-1))
    double b = *envelope.safety_bound[t] - cfg.standstill_gap - cfg.safety_backoff - self.state.p;
    if (t == 0) {
      b -= cfg.time_headway * v0;
    } else {
      b -= ts * v0;
      for (std::size_t k = 1; k < t; ++k) qp.G(row, vi(k)) = ts;
      qp.G(row, vi(t)) = cfg.time_headway;
    }
    qp.G(row, di(t)) = 1.0;
    qp.h(row++) = b;
  }
  return qp;
}

std::vector<double> inputs_from_speeds(const VehicleInfo& self, const Eigen::VectorXd& w, std::size_t horizon,
                                       const StepParams& step) {
  std::vector<double> u(horizon);
  double prev = self.state.v;
  for (std::size_t t = 0; t < horizon; ++t) {
    const double next = w(static_cast<Eigen::Index>(t));
    u[t] = (next - prev) / step.sampling_time;
    prev = next;
  }
  return u;
}

ControlDecision decide(const Intersection& world, std::span<const VehicleInfo> snapshot, const VehicleInfo& self,
                       const PriorityView& view, const MpcConfig& cfg, const StepParams& step) {
  ControlDecision out;
  const auto prediction = predict_conflicts(world, snapshot, self, view, cfg, step);
  const auto envelope = safety_envelope(self, prediction, cfg);
  out.diagnostics = prediction.diagnostics;
  out.diagnostics.insert(out.diagnostics.end(), envelope.diagnostics.begin(), envelope.diagnostics.end());

  qp::Settings<double> settings;
  settings.convexity = qp::ConvexityCheck::None; // PSD by construction
  const auto sol = qp::solve(speed_form(self, envelope, cfg, step), settings);
  out.solver_status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status != qp::Status::Optimal) {
    out.status = DecisionStatus::FallbackBraking;
    out.u0 = std::max(cfg.a_min, -self.state.v / step.sampling_time);
    out.diagnostics.push_back("vehicle " + std::to_string(self.id.value) + " braking: solver " +
                              qp::to_string(sol.status));
    return out;
  }
  const std::size_t H = cfg.horizon;
  const auto inputs = inputs_from_speeds(self, sol.z, H, step);
  out.u0 = inputs.front();
  out.predicted = rollout_inputs<double>(self.state, inputs, step);
  out.slack.assign(sol.z.data() + H, sol.z.data() + sol.z.size());
  return out;
}

} // namespace aim
