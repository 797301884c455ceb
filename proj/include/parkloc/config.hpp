#pragma once

// Structured run configuration (JSON). Unknown keys are rejected and every
// vehicle key is required; all other sections fall back to documented defaults.
//
// {
//   "vehicle":       {mass, yaw_inertia, lever_front, lever_rear, track_front,
//                     stiffness_front, stiffness_rear, imu_lever_x?, imu_lever_y?},
//   "tire":          {unloaded_radius, camber_stiffness_ratio, turn_slip_enabled,
//                     ackermann_deviation},
//   "lateral_model": {kind, x_rho_forward, x_rho_reverse},
//   "filter":        {accel_noise_density, gyro_noise_density, sigma_vx, sigma_vy, sigma_vz,
//                     init_sigma_velocity, init_sigma_attitude, init_sigma_position, gate_chi2},
//   "noise":         {gyro_bias, gyro_sigma, accel_bias, accel_sigma, encoder_quantization,
//                     steering_offset, seed},
//   "scenario":      {sample_rate, sim_dt, ramp_time, model, x_rho_forward, x_rho_reverse,
//                     x0, y0, yaw0, segments: [{duration, vx, steering | yaw_rate}]},
//   "calibration":   {min_speed, min_yaw_rate, max_lateral_accel},
//   "evaluation":    {reduction},
//   "paths":         {out}
// }

#include <filesystem>
#include <string>

#include "json.hpp"

#include "parkloc/calibration.hpp"
#include "parkloc/core.hpp"
#include "parkloc/evaluation.hpp"
#include "parkloc/lateral_models.hpp"
#include "parkloc/strapdown_ekf.hpp"
#include "parkloc/vehicle_sim.hpp"

namespace parkloc {

struct RunConfig {
  VehicleParams vehicle;
  TireParams tire;
  AckermannDeviationMap deviation;
  LateralModelKind lateral_kind = LateralModelKind::kOmegaVy;
  double x_rho_forward = 0.0;
  double x_rho_reverse = 0.0;
  FilterConfig filter;  // model, lateral and lever fields are filled from the other sections
  SensorNoise noise;
  Scenario scenario;
  GateThresholds gates;
  ErrorReduction reduction = ErrorReduction::kMax;
  std::filesystem::path out_dir = "out";

  LateralModelParams lateral_params() const;
  /// Filter settings with the lateral model and IMU lever synced from this config.
  FilterConfig filter_config() const;
  TwoTrackModel two_track_model() const;
  void validate() const;
};

/// Parses and validates. Errors name the offending key path, e.g. "vehicle.mass".
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Scenario document with the same schema as the "scenario" section.
Scenario parse_scenario(const nlohmann::json& doc, const std::string& path = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// Full echo including defaults.
nlohmann::json run_config_to_json(const RunConfig& config);
nlohmann::json scenario_to_json(const Scenario& scenario);

}  // namespace parkloc
