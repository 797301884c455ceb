#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <string>

#include "parkloc/config.hpp"
#include "parkloc/core.hpp"
#include "parkloc/strapdown_ekf.hpp"
#include "parkloc/vehicle_sim.hpp"

namespace parkloc::testing {

inline VehicleParams test_vehicle() {
  VehicleParams p;
  p.mass = 1600.0;
  p.yaw_inertia = 2600.0;
  p.lever_front = 1.3;
  p.lever_rear = 1.6;
  p.track_front = 1.6;
  p.stiffness_front = 120000.0;
  p.stiffness_rear = 140000.0;
  p.imu_lever_x = 1.5;
  p.imu_lever_y = 0.0;
  return p;
}

inline TwoTrackModel test_two_track() {
  TwoTrackModel m;
  m.vehicle = test_vehicle();
  m.tire = TireParams{};
  m.deviation = AckermannDeviationMap{0.0};
  return m;
}

inline FilterConfig filter_config(LateralModelKind kind, double x_rho_forward,
                                  double x_rho_reverse) {
  const VehicleParams p = test_vehicle();
  FilterConfig c;
  c.model = kind;
  c.lateral = {x_rho_forward, x_rho_reverse, p.wheelbase()};
  c.imu_lever_x = p.imu_lever_x;
  return c;
}

inline std::string source_path(const std::string& relative) {
  return std::string(PARKLOC_SOURCE_DIR) + "/" + relative;
}

// Noise-free log of the bundled 90 degree reverse parking scenario.
inline ManeuverLog reverse_parking_log() {
  const auto model = test_two_track();
  const Scenario sc = load_scenario(source_path("scenarios/perpendicular_reverse_90.json"));
  return synthesize_sensors(simulate_scenario(sc, model), model.vehicle, {});
}

}  // namespace parkloc::testing
