#include "simpletrack/motion.hpp"

#include <Eigen/Dense>

namespace simpletrack::motion {

namespace {

constexpr int kDim = KalmanState::kDim;
constexpr int kObsDim = KalmanState::kObsDim;

using StateVec = Eigen::Matrix<double, kDim, 1>;
using StateMat = Eigen::Matrix<double, kDim, kDim>;
using ObsVec = Eigen::Matrix<double, kObsDim, 1>;
using ObsMat = Eigen::Matrix<double, kObsDim, kObsDim>;
using ObsStateMat = Eigen::Matrix<double, kObsDim, kDim>;

StateVec mean_of(const KalmanState& s) {
  return Eigen::Map<const StateVec>(s.mean.data());
}

StateMat cov_of(const KalmanState& s) {
  return Eigen::Map<const Eigen::Matrix<double, kDim, kDim, Eigen::RowMajor>>(
      s.cov.data());
}

KalmanState pack(const StateVec& mean, const StateMat& cov) {
  KalmanState out;
  Eigen::Map<StateVec>(out.mean.data()) = mean;
  StateMat sym = 0.5 * (cov + cov.transpose());
  Eigen::Map<Eigen::Matrix<double, kDim, kDim, Eigen::RowMajor>>(
      out.cov.data()) = sym;
  return out;
}

StateMat transition(double dt) {
  StateMat f = StateMat::Identity();
  f(0, 7) = dt;
  f(1, 8) = dt;
  f(2, 9) = dt;
  return f;
}

ObsStateMat observation() {
  ObsStateMat h = ObsStateMat::Zero();
  for (int i = 0; i < kObsDim; ++i) h(i, i) = 1.0;
  return h;
}

StateMat process_noise(const KalmanParams& p) {
  StateVec q;
  q << p.process_noise, p.process_noise, p.process_noise, p.process_noise,
      p.process_noise, p.process_noise, p.process_noise,
      p.velocity_process_noise, p.velocity_process_noise,
      p.velocity_process_noise;
  return q.asDiagonal();
}

ObsVec observed(const BBox3D& b) {
  ObsVec z;
  z << b.cx, b.cy, b.cz, b.yaw, b.length, b.width, b.height;
  return z;
}

// Innovation with the yaw component wrapped; optionally flips the observed
// yaw by pi when the wrapped innovation exceeds pi/2.
ObsVec innovation(const ObsVec& z, const ObsVec& predicted, bool flip_fix) {
  ObsVec y = z - predicted;
  double dy = yaw_diff(z(3), predicted(3));
  if (flip_fix && std::fabs(dy) > M_PI / 2.0) {
    dy = yaw_diff(z(3) + M_PI, predicted(3));
  }
  y(3) = dy;
  return y;
}

}  // namespace

KalmanState kf_init(const Detection& det, const KalmanParams& params) {
  StateVec mean = StateVec::Zero();
  mean.head<kObsDim>() = observed(det.box);
  StateVec p0;
  p0 << params.initial_variance, params.initial_variance,
      params.initial_variance, params.initial_variance,
      params.initial_variance, params.initial_variance,
      params.initial_variance, params.initial_velocity_variance,
      params.initial_velocity_variance, params.initial_velocity_variance;
  return pack(mean, p0.asDiagonal());
}

KalmanState kf_predict(const KalmanState& state, int dt,
                       const KalmanParams& params) {
  const StateMat f = transition(1.0);
  const StateMat q = process_noise(params);
  StateVec mean = mean_of(state);
  StateMat cov = cov_of(state);
  for (int step = 0; step < dt; ++step) {
    mean = f * mean;
    cov = f * cov * f.transpose() + q;
  }
  mean(3) = normalize_yaw(mean(3));
  return pack(mean, cov);
}

KalmanState kf_update(const KalmanState& state, const Detection& obs,
                      const KalmanParams& params) {
  const ObsStateMat h = observation();
  const StateVec mean = mean_of(state);
  const StateMat cov = cov_of(state);

  const ObsVec y =
      innovation(observed(obs.box), h * mean, params.yaw_flip_fix);
  const ObsMat s = h * cov * h.transpose() +
                   ObsMat::Identity() * params.observation_noise;
  const Eigen::Matrix<double, kDim, kObsDim> k =
      cov * h.transpose() * s.inverse();

  StateVec post = mean + k * y;
  post(3) = normalize_yaw(post(3));
  for (int i = 4; i < 7; ++i) post(i) = std::max(post(i), 1e-6);
  const StateMat id = StateMat::Identity();
  const StateMat post_cov = (id - k * h) * cov;
  return pack(post, post_cov);
}

double mahalanobis_distance(const KalmanState& state, const Detection& obs,
                            const KalmanParams& params) {
  const ObsStateMat h = observation();
  const StateVec mean = mean_of(state);
  const StateMat cov = cov_of(state);
  ObsVec y = observed(obs.box) - h * mean;
  y(3) = yaw_diff(obs.box.yaw, mean(3));
  const ObsMat s = h * cov * h.transpose() +
                   ObsMat::Identity() * params.observation_noise;

  Eigen::SelfAdjointEigenSolver<ObsMat> eig(s);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0 || hi / lo > 1e12) {
    throw SingularCovariance("innovation covariance is numerically singular");
  }
  const double d2 = y.dot(s.ldlt().solve(y));
  return std::sqrt(std::max(0.0, d2));
}

BBox3D cv_predict(const BBox3D& last_box, const Vec2& velocity, int dt) {
  BBox3D out = last_box;
  out.cx += velocity.x * dt;
  out.cy += velocity.y * dt;
  return out;
}

}  // namespace simpletrack::motion
