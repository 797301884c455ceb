#pragma once

// Lateral-velocity pseudo-measurement models.
//
// x_rho is the signed distance from the rear axle to the point P0 on the
// longitudinal axis where the lateral velocity vanishes (positive: P0 ahead
// of the rear axle). k_rho is the equivalent gain on tan(delta_f).

#include <string>
#include <string_view>

namespace parkloc {

struct LateralModelParams {
  double x_rho_forward = 0.0;  // m
  double x_rho_reverse = 0.0;  // m
  double wheelbase = 0.0;      // m

  /// Rejects L <= 0 and |x_rho| >= L.
  void validate() const;
};

enum class LateralModelKind { kZeroSlip, kDeltaBeta, kOmegaVy };

std::string_view to_string(LateralModelKind kind);
/// Accepts "zero-slip", "delta-beta", "omega-vy".
LateralModelKind lateral_model_from_string(std::string_view name);

/// v_{y,r} = -x_rho * omega_z.
double vy_omega_model(double yaw_rate, double x_rho);

/// beta_r = -k_rho * tan(delta_f).
double beta_delta_model(double tan_delta_f, double k_rho);

/// k = x / (L - x). Throws ValidationError when x == L or L <= 0.
double k_from_x(double x, double wheelbase);
/// x = k L / (1 + k). Throws ValidationError when k == -1 or L <= 0.
double x_from_k(double k, double wheelbase);

/// Forward parameter for +1, reverse for -1. Neutral is rejected.
double select_parameter(const LateralModelParams& params, int direction);

/// Rear-axle lateral velocity predicted by a model.
///
/// zero-slip: 0. omega-vy: -x_rho * omega_z. delta-beta: -k_rho * tan(delta_f) * v_x
/// with k_rho derived from the stored x_rho, so the ratio v_y / v_x carries the
/// direction sign of v_x.
double predicted_rear_lateral_velocity(LateralModelKind kind, const LateralModelParams& params,
                                       int direction, double yaw_rate, double tan_delta_f,
                                       double vx);

}  // namespace parkloc
