// Point-mass double integrator along a path, x(k+1) = A x(k) + B u(k), and
// the horizon rollouts used by the predictive controller.
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace aim {

template <typename Scalar>
struct VehicleStateT {
  Scalar p{0}; // position along own path [m]
  Scalar v{0}; // speed along own path [m/s]

  bool operator==(const VehicleStateT&) const = default;
};
using VehicleState = VehicleStateT<double>;

template <typename Scalar>
struct StepParamsT {
  Scalar sampling_time{0.03};
};
using StepParams = StepParamsT<double>;

template <typename Scalar>
struct SpeedLimitsT {
  Scalar v_min{0};
  Scalar v_max{0};
};
using SpeedLimits = SpeedLimitsT<double>;

template <typename Scalar>
struct StepResultT {
  VehicleStateT<Scalar> state;
  bool clamped = false; // raw speed went negative and was clamped to 0
};

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> transition_matrix(const StepParamsT<Scalar>& params) {
  Eigen::Matrix<Scalar, 2, 2> a;
  a << Scalar(1), params.sampling_time, Scalar(0), Scalar(1);
  return a;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> input_matrix(const StepParamsT<Scalar>& params) {
  return {Scalar(0), params.sampling_time};
}

/// One plant step. Reverse motion is excluded: a negative speed is clamped to 0.
template <typename Scalar>
StepResultT<Scalar> step(const VehicleStateT<Scalar>& x, Scalar u, const StepParamsT<Scalar>& params) {
  StepResultT<Scalar> out;
  out.state.p = x.p + params.sampling_time * x.v;
  out.state.v = x.v + params.sampling_time * u;
  if (out.state.v < Scalar(0)) {
    out.state.v = Scalar(0);
    out.clamped = true;
  }
  return out;
}

/// Constant-input prediction with the speed saturated to `limits`.
/// Returns horizon + 1 states starting at x0.
template <typename Scalar>
std::vector<VehicleStateT<Scalar>> rollout_const_input(const VehicleStateT<Scalar>& x0, Scalar u,
                                                       std::size_t horizon,
                                                       const StepParamsT<Scalar>& params,
                                                       const SpeedLimitsT<Scalar>& limits) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  std::vector<VehicleStateT<Scalar>> states;
  states.reserve(horizon + 1);
  states.push_back(x0);
  for (std::size_t t = 0; t < horizon; ++t) {
    const auto& x = states.back();
    VehicleStateT<Scalar> next{x.p + params.sampling_time * x.v, x.v + params.sampling_time * u};
    next.v = std::clamp(next.v, limits.v_min, limits.v_max);
    states.push_back(next);
  }
  return states;
}

/// Open-loop rollout of the linear model, no saturation. Returns inputs.size() + 1 states.
template <typename Scalar>
std::vector<VehicleStateT<Scalar>> rollout_inputs(const VehicleStateT<Scalar>& x0,
                                                  std::span<const Scalar> inputs,
                                                  const StepParamsT<Scalar>& params) {
  std::vector<VehicleStateT<Scalar>> states;
  states.reserve(inputs.size() + 1);
  states.push_back(x0);
  for (Scalar u : inputs) {
    const auto& x = states.back();
    states.push_back({x.p + params.sampling_time * x.v, x.v + params.sampling_time * u});
  }
  return states;
}

/// Condensed form of the rollout: with inputs u(0..H-1),
///   p(t) = p_free(t) + position.row(t) * u,  v(t) = v_free(t) + speed.row(t) * u,
/// for t = 0..H. Row 0 is identically zero (the initial state is fixed).
template <typename Scalar>
struct CondensedRolloutT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix position;
  Matrix speed;
  Vector p_free;
  Vector v_free;

  CondensedRolloutT(const VehicleStateT<Scalar>& x0, std::size_t horizon, const StepParamsT<Scalar>& params) {
    const auto n = static_cast<Eigen::Index>(horizon);
    const Scalar ts = params.sampling_time;
    position = Matrix::Zero(n + 1, n);
    speed = Matrix::Zero(n + 1, n);
    p_free.resize(n + 1);
    v_free.resize(n + 1);
    for (Eigen::Index t = 0; t <= n; ++t) {
      p_free(t) = x0.p + Scalar(t) * ts * x0.v;
      v_free(t) = x0.v;
      for (Eigen::Index s = 0; s < t; ++s) {
        speed(t, s) = ts;
        position(t, s) = ts * ts * Scalar(t - 1 - s);
      }
    }
  }
};
using CondensedRollout = CondensedRolloutT<double>;

} // namespace aim
