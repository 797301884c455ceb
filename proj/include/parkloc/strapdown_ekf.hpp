#pragma once

// Strapdown mechanization with a full-state extended Kalman filter.
//
// State x = [v (3), q (4, Hamilton w,x,y,z, body->earth), p (3)] with v the
// body-frame velocity of the IMU and p the earth-frame IMU position.
// Velocity pseudo-measurements: wheel-encoder v_x, model-based v_y, v_z = 0.
// Position and heading are unobservable and drift freely.

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "parkloc/core.hpp"
#include "parkloc/lateral_models.hpp"

namespace parkloc {

inline constexpr int kNavStateDim = 10;
using NavVector = Eigen::Matrix<double, kNavStateDim, 1>;
using NavMatrix = Eigen::Matrix<double, kNavStateDim, kNavStateDim>;

struct NavState {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  NavVector to_vector() const;
  static NavState from_vector(const NavVector& x);
  double yaw() const;
};

/// Rotation matrix of a (possibly non-unit) quaternion using the homogeneous
/// quadratic form; equals |q|^2 times the rotation for non-unit q.
Eigen::Matrix3d rotation_matrix(const Eigen::Quaterniond& q);

/// d(R(q) a) / dq, 3x4, columns ordered w, x, y, z.
Eigen::Matrix<double, 3, 4> rotate_jacobian(const Eigen::Quaterniond& q, const Eigen::Vector3d& a);

/// Matrices with p (x) q = left(p) q = right(q) p, coefficient order w, x, y, z.
Eigen::Matrix4d quat_left_matrix(const Eigen::Quaterniond& p);
Eigen::Matrix4d quat_right_matrix(const Eigen::Quaterniond& q);

/// Exact rotation increment exp(omega dt / 2).
Eigen::Quaterniond rotation_increment(const Eigen::Vector3d& omega, double dt);

struct ImuReading {
  Eigen::Vector3d specific_force = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_rate = Eigen::Vector3d::Zero();
};

/// One mechanization step:
///   v' = v + dt (a + R(q)^T g - omega x v),
///   q' = normalize(q (x) exp(omega dt / 2)),
///   p' = p + dt R(q (x) exp(omega dt / 4)) (v + v') / 2,
/// with g = (0, 0, 9.81). dt = 0 returns the state unchanged.
NavState mechanize(const NavState& state, const ImuReading& imu, double dt);
NavVector mechanize(const NavVector& x, const ImuReading& imu, double dt);

/// Analytic d mechanize / d x. With include_normalization = false the
/// quaternion-normalization projection is replaced by a plain 1/|q'| scaling,
/// which keeps the radial quaternion direction and therefore a positive
/// definite covariance during propagation.
NavMatrix mechanize_jacobian(const NavVector& x, const ImuReading& imu, double dt,
                             bool include_normalization = true);

struct FilterConfig {
  double accel_noise_density = 0.05;   // m/s^2/sqrt(Hz)
  double gyro_noise_density = 0.002;   // rad/s/sqrt(Hz)
  double sigma_vx = 0.03;              // m/s
  double sigma_vy = 0.02;              // m/s
  double sigma_vz = 0.1;               // m/s
  double init_sigma_velocity = 0.05;   // m/s
  double init_sigma_attitude = 1e-3;   // per quaternion component
  double init_sigma_position = 1e-3;   // m
  double gate_chi2 = 6.634896601021214;  // 99% quantile, one degree of freedom
  LateralModelKind model = LateralModelKind::kZeroSlip;
  LateralModelParams lateral;
  double imu_lever_x = 0.0;  // rear axle -> IMU, m
  double imu_lever_y = 0.0;

  void validate() const;
};

enum class VelocityChannel { kVx = 0, kVy = 1, kVz = 2 };

struct InnovationRecord {
  double t = 0.0;
  VelocityChannel channel = VelocityChannel::kVx;
  double measurement = 0.0;
  double innovation = 0.0;
  double variance = 0.0;  // innovation variance S
  bool accepted = true;
};

struct FilterSample {
  double t = 0.0;
  NavState state;
  Eigen::Vector3d reference_position = Eigen::Vector3d::Zero();  // rear-axle centre, earth
  NavVector covariance_diagonal = NavVector::Zero();
};

struct FilterOutput {
  std::vector<FilterSample> samples;
  std::vector<InnovationRecord> innovations;
};

struct Pose2 {
  double x = 0.0, y = 0.0, yaw = 0.0;  // rear-axle centre
};

class StrapdownEkf {
 public:
  StrapdownEkf(const FilterConfig& config, const NavState& initial);

  const NavState& state() const { return state_; }
  const NavMatrix& covariance() const { return covariance_; }
  const FilterConfig& config() const { return config_; }

  /// Mechanize and propagate P = F P F^T + Q. Throws NumericalError when the
  /// symmetrized covariance is not positive definite.
  void predict(const ImuReading& imu, double dt);

  /// Scalar update of one velocity component. Returns the innovation record;
  /// measurements failing the chi-square gate leave the filter untouched.
  InnovationRecord update_velocity(VelocityChannel channel, double measurement, double sigma,
                                   double t);

  /// The three velocity pseudo-measurements for one log sample. Neutral gear
  /// skips v_x and v_y.
  std::vector<InnovationRecord> measure_velocity(const SensorSample& sample);

  /// IMU-frame velocity pseudo-measurements (v_x, v_y) for a sample, or nothing
  /// when the gear gives no direction.
  std::optional<Eigen::Vector2d> velocity_measurements(const SensorSample& sample) const;

  /// Rear-axle reference point in the earth frame.
  Eigen::Vector3d reference_position() const;

 private:
  void check_covariance(const char* where);

  FilterConfig config_;
  NavState state_;
  NavMatrix covariance_;
};

/// Initial navigation state at the IMU from a rear-axle pose and body velocity.
NavState nav_state_from_truth(const GroundTruthSample& truth, const FilterConfig& config);

/// Full predict/update pass over a log. Prediction over [t_{k-1}, t_k] uses the
/// mean of IMU samples k-1 and k. The initial pose is taken from the
/// argument, else from the truth series, else the origin.
FilterOutput run_filter(const ManeuverLog& log, const FilterConfig& config,
                        const std::optional<Pose2>& initial_pose = std::nullopt);

}  // namespace parkloc
