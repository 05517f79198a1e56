// Per-vehicle receding-horizon controller. States are eliminated through the
// condensed rollout, so the decision vector is z = [u(0..H-1), delta(0..H)] and
// every safety condition becomes a linear row in z.
#pragma once

#include "aim/dynamics.hpp"
#include "aim/priority.hpp"
#include "aim/qp.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aim {

struct MpcConfig {
  std::size_t horizon = 100;
  double q_weight = 1.0;
  double r_weight = 0.01;
  double omega = -0.1;
  double time_headway = 0.1;   // lambda_2 [s]
  double headway_relax = 0.0;  // lower slack bound factor [s]
  double standstill_gap = 3.5; // lambda_3 [m]
  double slack_upper = 5.0;    // [m]
  double a_min = -9.0;         // [m/s^2]
  double a_max = 5.0;
  double v_min = 0.0;          // [m/s]
  double v_max = 130.0 / 3.6;
  // Tightening of every safety row so that solver tolerance cannot eat into the gap.
  double safety_backoff = 1e-3; // [m]
  // How far past a shared point a higher-priority vehicle must be predicted
  // before it counts as having crossed it.
  double crossing_clearance = 0.0; // [m]

  void validate() const;
  SpeedLimits limits() const { return {v_min, v_max}; }
};

struct PointCrossing {
  int point = 0;
  double my_coord = 0.0;         // coordinate of the point on my path
  std::size_t crossed_by_step = 0; // first t at which the other vehicle is past it; horizon+1 if never
};

struct ObstacleTrack {
  AgentId id;
  bool frontal = false;
  std::vector<VehicleState> states;              // constant-input prediction on its own path
  // Gap reference on my path per t: its projected coordinate, or where my path
  // comes within the standstill gap of it plus that gap, whichever is nearer.
  std::vector<std::optional<double>> on_my_path;
  std::vector<PointCrossing> precedence;         // points where it ranks above me
};

struct ConflictPrediction {
  std::vector<ObstacleTrack> tracks;
  std::vector<std::string> diagnostics;
};

/// Tracks the aware set plus any vehicle that has already crossed a point still
/// ahead of me.
ConflictPrediction predict_conflicts(const Intersection& world, std::span<const VehicleInfo> snapshot,
                                     const VehicleInfo& self, const PriorityView& view, const MpcConfig& cfg,
                                     const StepParams& step);

struct MpcProblem {
  qp::QuadraticProgram<double> qp;
  std::size_t horizon = 0;
  std::vector<std::optional<double>> safety_bound; // min over obstacles of the gap reference per t
  std::size_t dropped_rows = 0;                    // t = 0 row already violated, cleared from safety_bound
  std::vector<std::string> diagnostics;

  static Eigen::Index u_index(std::size_t t) { return static_cast<Eigen::Index>(t); }
  Eigen::Index delta_index(std::size_t t) const { return static_cast<Eigen::Index>(horizon + t); }
};

/// Safety bounds and diagnostics only; `qp` is left empty.
MpcProblem safety_envelope(const VehicleInfo& self, const ConflictPrediction& prediction, const MpcConfig& cfg);

MpcProblem assemble(const VehicleInfo& self, const ConflictPrediction& prediction, const MpcConfig& cfg,
                    const StepParams& step);

/// The same problem over w = [v(1..H), delta(0..H)], with u(t) = (v(t+1) - v(t)) / Ts.
/// Rows match assemble() one for one and the objective differs by a constant.
/// Bounds, input and slack rows are banded in w, which keeps the solve cheap.
qp::QuadraticProgram<double> speed_form(const VehicleInfo& self, const MpcProblem& envelope, const MpcConfig& cfg,
                                        const StepParams& step);

/// Inputs u(0..H-1) from a speed-form solution.
std::vector<double> inputs_from_speeds(const VehicleInfo& self, const Eigen::VectorXd& w, std::size_t horizon,
                                       const StepParams& step);

enum class DecisionStatus { Optimal, FallbackBraking };

struct ControlDecision {
  double u0 = 0.0;
  DecisionStatus status = DecisionStatus::Optimal;
  qp::Status solver_status = qp::Status::Optimal;
  int iterations = 0;
  std::vector<VehicleState> predicted;
  std::vector<double> slack;
  std::vector<std::string> diagnostics;
};

ControlDecision decide(const Intersection& world, std::span<const VehicleInfo> snapshot, const VehicleInfo& self,
                       const PriorityView& view, const MpcConfig& cfg, const StepParams& step);

} // namespace aim
