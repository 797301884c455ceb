#pragma once

// Steady-circle response to a mis-modelled lateral-velocity parameter.
//
// A vehicle driving v_x, omega_z with lateral velocity v_y = dx * omega_z
// traces the nominal circle offset by (dx (cos wt - 1), dx sin wt).

#include <string>
#include <vector>

#include <Eigen/Core>

namespace parkloc {

struct CirclePerturbationSpec {
  double vx = 1.0;         // m/s
  double yaw_rate = 0.5;   // rad/s, nonzero
  double delta_x = 0.21;   // m
  double turn_angle = 2.0 * 3.14159265358979323846;  // rad, total phase swept
  int samples = 361;       // >= 2, including both ends

  void validate() const;
};

struct DisturbanceSample {
  double phase = 0.0;  // omega_z t, rad
  double dX = 0.0, dY = 0.0;
  double error = 0.0;
};

struct DisturbanceReport {
  std::vector<DisturbanceSample> samples;
  double e_max = 0.0;  // 2 |dx|
  double e_90 = 0.0;   // sqrt(2) |dx|
};

/// (v/w) (sin wt, 1 - cos wt). Throws ValidationError for w == 0.
Eigen::Vector2d nominal_circle(double vx, double yaw_rate, double t);

/// Nominal circle plus (dx (cos wt - 1), dx sin wt).
Eigen::Vector2d perturbed_circle(double vx, double yaw_rate, double delta_x, double t);

/// |dx| sqrt(2 (1 - cos phase)).
double position_error(double delta_x, double phase);

double max_position_error(double delta_x);
double quarter_turn_position_error(double delta_x);

/// Samples the offset and error uniformly in phase over spec.turn_angle.
DisturbanceReport analyze_disturbance(const CirclePerturbationSpec& spec);

/// RK4 integration of X' = v cos(psi) - dx w sin(psi), Y' = v sin(psi) + dx w cos(psi),
/// psi' = w from the origin. Returns (X, Y) at t = i dt, plus a final sample at `duration`
/// when dt does not divide it.
std::vector<Eigen::Vector2d> integrate_perturbed_circle(double vx, double yaw_rate,
                                                        double delta_x, double duration,
                                                        double dt);

/// CSV with header phase,dX,dY,e.
std::string disturbance_csv(const DisturbanceReport& report);

}  // namespace parkloc
