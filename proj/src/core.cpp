#include "parkloc/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace parkloc {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) {
    throw ValidationError(fmt::format("{}: {}", field, what));
  }
}

}  // namespace

double VehicleParams::side_slip_gradient() const {
  return mass * lever_front / (stiffness_rear * wheelbase());
}

void VehicleParams::validate() const {
  require(std::isfinite(mass) && mass > 0.0, "vehicle.mass", "must be > 0");
  require(std::isfinite(yaw_inertia) && yaw_inertia > 0.0, "vehicle.yaw_inertia", "must be > 0");
  require(std::isfinite(lever_front) && lever_front > 0.0, "vehicle.lever_front", "must be > 0");
  require(std::isfinite(lever_rear) && lever_rear > 0.0, "vehicle.lever_rear", "must be > 0");
  require(std::isfinite(track_front) && track_front > 0.0, "vehicle.track_front", "must be > 0");
  require(std::isfinite(stiffness_front) && stiffness_front > 0.0, "vehicle.stiffness_front",
          "must be > 0");
  require(std::isfinite(stiffness_rear) && stiffness_rear > 0.0, "vehicle.stiffness_rear",
          "must be > 0");
  require(std::isfinite(imu_lever_x), "vehicle.imu_lever_x", "must be finite");
  require(std::isfinite(imu_lever_y), "vehicle.imu_lever_y", "must be finite");
  const double rho = side_slip_gradient();
  require(std::isfinite(rho) && rho > 0.0, "vehicle", "side-slip gradient must be finite and > 0");
}

void TireParams::validate() const {
  require(std::isfinite(unloaded_radius) && unloaded_radius > 0.0, "tire.unloaded_radius",
          "must be > 0");
  require(std::isfinite(camber_stiffness_ratio) && camber_stiffness_ratio >= 0.0,
          "tire.camber_stiffness_ratio", "must be >= 0");
}

char gear_to_char(Gear gear) {
  switch (gear) {
    case Gear::kForward: return 'F';
    case Gear::kReverse: return 'R';
    case Gear::kNeutral: return 'N';
  }
  return 'N';
}

Gear gear_from_char(char c) {
  switch (c) {
    case 'F': return Gear::kForward;
    case 'R': return Gear::kReverse;
    case 'N': return Gear::kNeutral;
    default: throw ValidationError(fmt::format("gear: unknown value '{}'", c));
  }
}

int gear_sign(Gear gear) {
  switch (gear) {
    case Gear::kForward: return 1;
    case Gear::kReverse: return -1;
    case Gear::kNeutral: return 0;
  }
  return 0;
}

Eigen::Vector2d transfer_planar_velocity(const Eigen::Vector2d& v_at_a, double yaw_rate,
                                         const Eigen::Vector2d& lever_ab) {
  return {v_at_a.x() - yaw_rate * lever_ab.y(), v_at_a.y() + yaw_rate * lever_ab.x()};
}

int driving_direction_sign(double vx, double deadband) {
  if (vx > deadband) return 1;
  if (vx < -deadband) return -1;
  return 0;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  if (wrapped > std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

GroundTruthSample interpolate_truth(const std::vector<GroundTruthSample>& truth, double t) {
  if (truth.empty()) {
    throw ValidationError("truth: empty series");
  }
  constexpr double kEdge = 1e-9;
  if (t < truth.front().t - kEdge || t > truth.back().t + kEdge) {
    throw ValidationError(fmt::format("truth: time {} outside [{}, {}]", t, truth.front().t,
                                      truth.back().t));
  }
  auto upper = std::lower_bound(truth.begin(), truth.end(), t,
                                [](const GroundTruthSample& s, double v) { return s.t < v; });
  if (upper == truth.end()) return truth.back();
  if (upper->t == t || upper == truth.begin()) return *upper;
  const GroundTruthSample& b = *upper;
  const GroundTruthSample& a = *(upper - 1);
  const double w = (t - a.t) / (b.t - a.t);
  auto lerp = [w](double p, double q) { return p + w * (q - p); };
  GroundTruthSample out;
  out.t = t;
  out.x = lerp(a.x, b.x);
  out.y = lerp(a.y, b.y);
  out.yaw = wrap_angle(a.yaw + w * wrap_angle(b.yaw - a.yaw));
  out.vx = lerp(a.vx, b.vx);
  out.vy = lerp(a.vy, b.vy);
  out.yaw_rate = lerp(a.yaw_rate, b.yaw_rate);
  return out;
}

double check_uniform_timestamps(const std::vector<double>& t, double jitter) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) {
      throw ValidationError(fmt::format("timestamps: non-finite value at row {}", i));
    }
    if (i > 0 && !(t[i] > t[i - 1])) {
      throw ValidationError(fmt::format("timestamps: not strictly increasing at row {}", i));
    }
  }
  if (t.size() < 2) return 0.0;
  const double nominal = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - nominal) > jitter * nominal) {
      throw ValidationError(fmt::format("timestamps: interval at row {} deviates more than {}% "
                                        "from nominal {}",
                                        i, jitter * 100.0, nominal));
    }
  }
  return nominal;
}

void ManeuverLog::validate() const {
  if (sensors.empty()) {
    throw ValidationError("log: no sensor samples");
  }
  std::vector<double> ts;
  ts.reserve(sensors.size());
  for (const auto& s : sensors) {
    ts.push_back(s.t);
    if (s.ws_fl < 0.0 || s.ws_fr < 0.0 || s.ws_rl < 0.0 || s.ws_rr < 0.0) {
      throw ValidationError(fmt::format("log: negative wheel speed at t={}", s.t));
    }
  }
  check_uniform_timestamps(ts);
  if (truth.has_value()) {
    std::vector<double> tt;
    tt.reserve(truth->size());
    for (const auto& g : *truth) {
      if (!std::isfinite(g.x) || !std::isfinite(g.y) || !std::isfinite(g.yaw) ||
          !std::isfinite(g.vx) || !std::isfinite(g.vy) || !std::isfinite(g.yaw_rate)) {
        throw ValidationError(fmt::format("truth: non-finite value at t={}", g.t));
      }
      tt.push_back(g.t);
    }
    check_uniform_timestamps(tt);
    if (!truth->empty() &&
        (truth->back().t < sensors.front().t || truth->front().t > sensors.back().t)) {
      throw ValidationError("log: sensor and truth time ranges do not overlap");
    }
  }
}

}  // namespace parkloc
