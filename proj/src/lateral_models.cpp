#include "parkloc/lateral_models.hpp"

#include <cmath>

#include <fmt/format.h>

#include "parkloc/core.hpp"

namespace parkloc {

void LateralModelParams::validate() const {
  if (!(std::isfinite(wheelbase) && wheelbase > 0.0)) {
    throw ValidationError("lateral_model.wheelbase: must be > 0");
  }
  auto check = [this](double x, const char* name) {
    if (!std::isfinite(x) || std::abs(x) >= wheelbase) {
      throw ValidationError(fmt::format(
          "lateral_model.{}: |{}| must be smaller than the wheelbase {}", name, x, wheelbase));
    }
  };
  check(x_rho_forward, "x_rho_forward");
  check(x_rho_reverse, "x_rho_reverse");
}

std::string_view to_string(LateralModelKind kind) {
  switch (kind) {
    case LateralModelKind::kZeroSlip: return "zero-slip";
    case LateralModelKind::kDeltaBeta: return "delta-beta";
    case LateralModelKind::kOmegaVy: return "omega-vy";
  }
  return "zero-slip";
}

LateralModelKind lateral_model_from_string(std::string_view name) {
  if (name == "zero-slip") return LateralModelKind::kZeroSlip;
  if (name == "delta-beta") return LateralModelKind::kDeltaBeta;
  if (name == "omega-vy") return LateralModelKind::kOmegaVy;
  throw ValidationError(
      fmt::format("lateral model '{}': expected zero-slip, delta-beta or omega-vy", name));
}

double vy_omega_model(double yaw_rate, double x_rho) { return -x_rho * yaw_rate; }

double beta_delta_model(double tan_delta_f, double k_rho) { return -k_rho * tan_delta_f; }

double k_from_x(double x, double wheelbase) {
  if (!(wheelbase > 0.0)) {
    throw ValidationError("k_from_x: wheelbase must be > 0");
  }
  if (x == wheelbase) {
    throw ValidationError("k_from_x: degenerate parameter x == L");
  }
  return x / (wheelbase - x);
}

double x_from_k(double k, double wheelbase) {
  if (!(wheelbase > 0.0)) {
    throw ValidationError("x_from_k: wheelbase must be > 0");
  }
  if (k == -1.0) {
    throw ValidationError("x_from_k: degenerate parameter k == -1");
  }
  return k * wheelbase / (1.0 + k);
}

double select_parameter(const LateralModelParams& params, int direction) {
  if (direction > 0) return params.x_rho_forward;
  if (direction < 0) return params.x_rho_reverse;
  throw ValidationError("select_parameter: driving direction is neutral");
}

double predicted_rear_lateral_velocity(LateralModelKind kind, const LateralModelParams& params,
                                       int direction, double yaw_rate, double tan_delta_f,
                                       double vx) {
  switch (kind) {
    case LateralModelKind::kZeroSlip:
      return vy_omega_model(yaw_rate, 0.0);
    case LateralModelKind::kOmegaVy:
      return vy_omega_model(yaw_rate, select_parameter(params, direction));
    case LateralModelKind::kDeltaBeta: {
      const double k = k_from_x(select_parameter(params, direction), params.wheelbase);
      return beta_delta_model(tan_delta_f, k) * vx;
    }
  }
  return 0.0;
}

}  // namespace parkloc
