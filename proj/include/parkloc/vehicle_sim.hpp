#pragma once

// Planar ground-truth generation.
//
// Two models are provided: a kinematic bicycle whose zero-lateral-velocity
// point may be moved off the rear axle, and a nonlinear two-track model with
// linear tyre stiffness, a turn-slip horizontal shift and a configurable
// Ackermann deviation. Longitudinal dynamics are not modelled; v_x is an input.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "parkloc/core.hpp"

namespace parkloc {

struct SimState {
  double x = 0.0, y = 0.0;  // earth, m
  double yaw = 0.0;         // rad, wrapped to (-pi, pi]
  double vx = 0.0, vy = 0.0;  // rear axle, body, m/s
  double yaw_rate = 0.0;    // rad/s
};

struct SimInputs {
  double vx = 0.0;        // commanded, signed, m/s
  double steering = 0.0;  // mean front steering angle, rad
};

struct SensorNoise {
  double gyro_bias = 0.0;           // rad/s
  double gyro_sigma = 0.0;          // rad/s
  double accel_bias = 0.0;          // m/s^2
  double accel_sigma = 0.0;         // m/s^2
  double encoder_quantization = 0.0;  // m/s, 0 disables
  double steering_offset = 0.0;     // rad
  std::uint64_t seed = 0;

  void validate() const;
};

/// One RK4 step of the kinematic bicycle. The lateral velocity vanishes at
/// x_rho ahead of the rear axle, so omega = v tan(delta) / (L - x_rho) and
/// v_y = -x_rho omega. x_rho = 0 is the classic bicycle. Requires 0 < dt <= 10 ms.
SimState kinematic_bicycle_step(const SimState& state, const SimInputs& inputs,
                                const VehicleParams& params, double dt, double x_rho = 0.0);

/// Horizontal slip shift from turn slip phi = -omega / v:
/// S = (K_yRphi0 / K_yalpha0) R_0 phi sgn(v). Zero when turn slip is disabled.
/// Throws NumericalError for |v| <= 0.01 m/s.
double turn_slip_shift(double yaw_rate, double v_contact, const TireParams& tire);

/// Left and right front wheel angles. Ideal Ackermann split for the turn radius
/// implied by the mean angle, after which the inside wheel is scaled by
/// (1 + deviation coefficient).
std::pair<double, double> ackermann_angles(double mean_steering, const VehicleParams& params,
                                           const AckermannDeviationMap& deviation);

struct TwoTrackModel {
  VehicleParams vehicle;
  TireParams tire;
  AckermannDeviationMap deviation;
};

/// Per-wheel lateral forces at the current state, body frame (for diagnostics/tests).
struct AxleForces {
  double lateral_total = 0.0;  // N
  double yaw_moment_cg = 0.0;  // N m
};
AxleForces two_track_forces(const SimState& state, const SimInputs& inputs,
                            const TwoTrackModel& model);

/// One step of the two-track model, v_x held at the command. Internally
/// sub-steps so that RK4 stays inside its stability region at low speed.
/// Requires dt <= 5 ms and |v_x| >= 0.05 m/s.
SimState two_track_step(const SimState& state, const SimInputs& inputs,
                        const TwoTrackModel& model, double dt);

struct SteadyStateResult {
  double beta_rear = 0.0;  // atan(v_y / |v_x|) sgn(v_x)
  double yaw_rate = 0.0;
  double lateral_velocity = 0.0;
  double settle_time = 0.0;
};

/// Settles the two-track model at constant inputs. Converged when the change
/// of (v_y, omega) over one simulated second is below 1e-9; NumericalError
/// after 60 s.
SteadyStateResult steady_state_beta_r(double vx, double steering, const TwoTrackModel& model);

enum class SimModelKind { kKinematic, kTwoTrack };

struct ScenarioSegment {
  double duration = 0.0;
  double vx = 0.0;
  std::optional<double> steering;  // rad
  std::optional<double> yaw_rate;  // rad/s, converted kinematically to steering
};

struct Scenario {
  std::vector<ScenarioSegment> segments;
  double sample_rate = 100.0;   // Hz
  double sim_dt = 0.001;        // s
  double ramp_time = 0.5;       // linear transition at each segment start, s
  SimModelKind model = SimModelKind::kKinematic;
  double x_rho_forward = 0.0;   // kinematic model only
  double x_rho_reverse = 0.0;
  double x0 = 0.0, y0 = 0.0, yaw0 = 0.0;

  void validate() const;
};

/// Integrates the scenario and samples ground truth at the scenario rate.
std::vector<GroundTruthSample> simulate_scenario(const Scenario& scenario,
                                                 const TwoTrackModel& model);

/// Synthetic IMU, wheel encoders and steering from a uniform truth series.
/// Deterministic for a given seed.
ManeuverLog synthesize_sensors(const std::vector<GroundTruthSample>& truth,
                               const VehicleParams& params, const SensorNoise& noise);

}  // namespace parkloc
