#pragma once

// Shared domain types and planar kinematics helpers.
//
// Frames: body x-forward, y-left, z-up. Earth frame is planar (X, Y) with
// yaw counterclockwise positive. The vehicle reference point is the centre
// of the rear axle unless stated otherwise.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace parkloc {

/// Input or configuration that violates a documented contract.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: non-convergence, loss of positive definiteness, singularities.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kGravity = 9.81;
inline constexpr double kDefaultDeadband = 0.1;  // m/s

struct VehicleParams {
  double mass = 0.0;              // kg
  double yaw_inertia = 0.0;       // kg m^2
  double lever_front = 0.0;       // CG -> front axle, m
  double lever_rear = 0.0;        // CG -> rear axle, m
  double track_front = 0.0;       // m
  double stiffness_front = 0.0;   // axle cornering stiffness, N/rad
  double stiffness_rear = 0.0;    // axle cornering stiffness, N/rad
  double imu_lever_x = 0.0;       // rear axle -> IMU, m
  double imu_lever_y = 0.0;       // m

  double wheelbase() const { return lever_front + lever_rear; }
  /// rho_sg = m l_f / (c_r L), rad s^2/m.
  double side_slip_gradient() const;
  /// Throws ValidationError naming the first offending field.
  void validate() const;
};

struct TireParams {
  double unloaded_radius = 0.35;      // R_0, m
  double camber_stiffness_ratio = 0.8;  // K_yRphi0 / K_yalpha0
  bool turn_slip_enabled = true;

  void validate() const;
};

/// Linear map from the inside-wheel steering angle to the Ackermann deviation.
/// A negative coefficient models a less-than-Ackermann linkage.
struct AckermannDeviationMap {
  double coefficient = 0.0;

  double operator()(double inside_wheel_angle) const { return coefficient * inside_wheel_angle; }
};

enum class Gear { kForward, kReverse, kNeutral };

char gear_to_char(Gear gear);
Gear gear_from_char(char c);
/// +1 forward, -1 reverse, 0 neutral.
int gear_sign(Gear gear);

struct SensorSample {
  double t = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // specific force, body, m/s^2
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // rad/s
  double ws_fl = 0.0, ws_fr = 0.0, ws_rl = 0.0, ws_rr = 0.0;  // unsigned, m/s
  double steering_front = 0.0;  // rad
  Gear gear = Gear::kNeutral;
};

struct GroundTruthSample {
  double t = 0.0;
  double x = 0.0, y = 0.0;  // earth, m
  double yaw = 0.0;         // rad
  double vx = 0.0, vy = 0.0;  // body, rear axle, m/s
  double yaw_rate = 0.0;    // rad/s
};

struct ManeuverMetadata {
  std::string id;
  std::string description;
  double sample_rate = 0.0;  // Hz
};

struct ManeuverLog {
  std::vector<SensorSample> sensors;
  std::optional<std::vector<GroundTruthSample>> truth;
  ManeuverMetadata metadata;

  bool has_truth() const { return truth.has_value() && !truth->empty(); }
  /// Monotone timestamps, uniform rate within 1% jitter, overlapping truth.
  void validate() const;
};

/// v_B = v_A + omega x r_AB in the plane.
Eigen::Vector2d transfer_planar_velocity(const Eigen::Vector2d& v_at_a, double yaw_rate,
                                         const Eigen::Vector2d& lever_ab);

/// +1 / -1 outside the deadband, 0 inside.
int driving_direction_sign(double vx, double deadband = kDefaultDeadband);

/// Wrap to (-pi, pi].
double wrap_angle(double angle);

/// Linear interpolation of a truth series at time t (yaw unwrapped locally).
/// Throws ValidationError when t lies outside the series.
GroundTruthSample interpolate_truth(const std::vector<GroundTruthSample>& truth, double t);

/// Checks that timestamps are strictly increasing; returns the nominal interval.
double check_uniform_timestamps(const std::vector<double>& t, double jitter = 0.01);

}  // namespace parkloc
