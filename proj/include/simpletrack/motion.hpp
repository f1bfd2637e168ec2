#pragma once

#include <array>

#include "simpletrack/types.hpp"

namespace simpletrack::motion {

enum class MotionModelKind {
  KalmanFilter,      // predict + refine with the Kalman posterior
  ConstantVelocity,  // extrapolate detector velocity, report raw detections
  KalmanPredictOnly  // Kalman prediction for association, raw detections out
};

/// Noise configuration, AB3DMOT-style defaults: unit observation and process
/// noise on the observed dims, small velocity process noise, inflated initial
/// velocity variance.
struct KalmanParams {
  double initial_variance = 10.0;
  double initial_velocity_variance = 10000.0;
  double process_noise = 1.0;
  double velocity_process_noise = 0.01;
  double observation_noise = 1.0;
  // Flip the observed yaw by pi when the innovation exceeds pi/2
  // (front/back ambiguity of detectors).
  bool yaw_flip_fix = true;
};

/// Constant-velocity filter state over [x, y, z, yaw, l, w, h, vx, vy, vz]
/// with velocities in meters per frame interval. Immutable value; operations
/// return new states.
struct KalmanState {
  static constexpr int kDim = 10;
  static constexpr int kObsDim = 7;

  std::array<double, kDim> mean{};
  std::array<double, kDim * kDim> cov{};  // row-major

  BBox3D box() const {
    return make_box(mean[0], mean[1], mean[2], mean[4], mean[5], mean[6],
                    mean[3]);
  }
};

KalmanState kf_init(const Detection& det, const KalmanParams& params = {});

/// Advance dt whole frame intervals (applied stepwise).
KalmanState kf_predict(const KalmanState& state, int dt,
                       const KalmanParams& params = {});

KalmanState kf_update(const KalmanState& state, const Detection& obs,
                      const KalmanParams& params = {});

/// sqrt(y^T S^-1 y) over the 7-dim innovation, yaw wrapped.
/// Throws SingularCovariance when S is numerically singular.
double mahalanobis_distance(const KalmanState& state, const Detection& obs,
                            const KalmanParams& params = {});

/// Translate the box center by velocity * dt; dims, yaw, z unchanged.
BBox3D cv_predict(const BBox3D& last_box, const Vec2& velocity, int dt);

}  // namespace simpletrack::motion
