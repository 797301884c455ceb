#include "parkloc/vehicle_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

namespace parkloc {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Pose kinematics with body velocities held over the step.
struct PoseRate {
  double x, y, yaw;
};

PoseRate pose_rate(double yaw, double vx, double vy, double yaw_rate) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {vx * c - vy * s, vx * s + vy * c, yaw_rate};
}

// Two-track state vector: X, Y, yaw, v_y (rear axle), omega.
using TwoTrackVec = std::array<double, 5>;

TwoTrackVec two_track_rate(const TwoTrackVec& s, const SimInputs& in, const TwoTrackModel& m) {
  SimState st;
  st.yaw = s[2];
  st.vx = in.vx;
  st.vy = s[3];
  st.yaw_rate = s[4];
  const AxleForces f = two_track_forces(st, in, m);
  const auto pr = pose_rate(s[2], in.vx, s[3], s[4]);
  const double omega_dot = f.yaw_moment_cg / m.vehicle.yaw_inertia;
  // m (d/dt v_y,cg + v_x omega) = sum F_y with v_y,cg = v_y,r + l_r omega.
  const double vy_dot = f.lateral_total / m.vehicle.mass - in.vx * s[4] -
                        m.vehicle.lever_rear * omega_dot;
  return {pr.x, pr.y, pr.yaw, vy_dot, omega_dot};
}

TwoTrackVec axpy(const TwoTrackVec& x, double a, const TwoTrackVec& y) {
  TwoTrackVec out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + a * y[i];
  return out;
}

}  // namespace

void SensorNoise::validate() const {
  if (!(gyro_sigma >= 0.0) || !(accel_sigma >= 0.0)) {
    throw ValidationError("noise: sigma values must be >= 0");
  }
  if (!(encoder_quantization >= 0.0)) {
    throw ValidationError("noise.encoder_quantization: must be >= 0");
  }
  if (!std::isfinite(gyro_bias) || !std::isfinite(accel_bias) || !std::isfinite(steering_offset)) {
    throw ValidationError("noise: biases must be finite");
  }
}

SimState kinematic_bicycle_step(const SimState& state, const SimInputs& inputs,
                                const VehicleParams& params, double dt, double x_rho) {
  if (!(dt > 0.0 && dt <= 0.01)) {
    throw ValidationError(fmt::format("kinematic_bicycle_step: dt={} outside (0, 0.01]", dt));
  }
  const double lever = params.wheelbase() - x_rho;
  const double omega = inputs.vx * std::tan(inputs.steering) / lever;
  const double vy = -x_rho * omega;

  const auto k1 = pose_rate(state.yaw, inputs.vx, vy, omega);
  const auto k2 = pose_rate(state.yaw + 0.5 * dt * k1.yaw, inputs.vx, vy, omega);
  const auto k3 = pose_rate(state.yaw + 0.5 * dt * k2.yaw, inputs.vx, vy, omega);
  const auto k4 = pose_rate(state.yaw + dt * k3.yaw, inputs.vx, vy, omega);

  SimState next;
  next.x = state.x + dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  next.y = state.y + dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  next.yaw = wrap_angle(state.yaw + dt / 6.0 * (k1.yaw + 2.0 * k2.yaw + 2.0 * k3.yaw + k4.yaw));
  next.vx = inputs.vx;
  next.vy = vy;
  next.yaw_rate = omega;
  return next;
}

double turn_slip_shift(double yaw_rate, double v_contact, const TireParams& tire) {
  if (std::abs(v_contact) <= 0.01) {
    throw NumericalError(
        fmt::format("turn_slip_shift: contact velocity {} too close to standstill", v_contact));
  }
  if (!tire.turn_slip_enabled) return 0.0;
  const double phi = -yaw_rate / v_contact;
  return tire.camber_stiffness_ratio * tire.unloaded_radius * phi * sign(v_contact);
}

std::pair<double, double> ackermann_angles(double mean_steering, const VehicleParams& params,
                                           const AckermannDeviationMap& deviation) {
  if (mean_steering == 0.0) return {0.0, 0.0};
  const double wheelbase = params.wheelbase();
  const double half_track = 0.5 * params.track_front;
  const double t = std::tan(mean_steering);
  // tan(delta_l) = L / (R - b/2), tan(delta_r) = L / (R + b/2) with R = L / tan(delta).
  double left = std::atan2(wheelbase * t, wheelbase - half_track * t);
  double right = std::atan2(wheelbase * t, wheelbase + half_track * t);
  if (deviation.coefficient != 0.0) {
    double& inside = mean_steering > 0.0 ? left : right;
    inside += deviation(inside);
  }
  return {left, right};
}

AxleForces two_track_forces(const SimState& state, const SimInputs& inputs,
                            const TwoTrackModel& model) {
  const VehicleParams& p = model.vehicle;
  const double wheelbase = p.wheelbase();
  const double half_track = 0.5 * p.track_front;
  const auto [delta_fl, delta_fr] = ackermann_angles(inputs.steering, p, model.deviation);

  struct Wheel {
    double x, y, steer, stiffness;
  };
  // Positions relative to the rear-axle centre; the rear track equals the front track.
  const std::array<Wheel, 4> wheels{{
      {wheelbase, half_track, delta_fl, 0.5 * p.stiffness_front},
      {wheelbase, -half_track, delta_fr, 0.5 * p.stiffness_front},
      {0.0, half_track, 0.0, 0.5 * p.stiffness_rear},
      {0.0, -half_track, 0.0, 0.5 * p.stiffness_rear},
  }};

  AxleForces out;
  const Eigen::Vector2d v_rear(state.vx, state.vy);
  for (const auto& w : wheels) {
    const Eigen::Vector2d vc = transfer_planar_velocity(v_rear, state.yaw_rate, {w.x, w.y});
    const double c = std::cos(w.steer);
    const double s = std::sin(w.steer);
    const double v_long = vc.x() * c + vc.y() * s;
    const double v_lat = -vc.x() * s + vc.y() * c;
    if (std::abs(v_long) <= 0.01) {
      throw NumericalError("two_track_forces: wheel contact velocity near standstill");
    }
    // Slip in the Magic Formula convention alpha* = tan(alpha) sgn(V_cx), shifted
    // horizontally by turn slip. The sgn(V_cx) factor on the force keeps the tyre
    // opposing its lateral slip velocity when rolling backwards.
    const double slip = v_lat / v_long;
    const double shift = turn_slip_shift(state.yaw_rate, v_long, model.tire);
    const double force = -w.stiffness * sign(v_long) * (slip + shift);
    const double fx = -force * s;
    const double fy = force * c;
    out.lateral_total += fy;
    out.yaw_moment_cg += (w.x - p.lever_rear) * fy - w.y * fx;
  }
  return out;
}

SimState two_track_step(const SimState& state, const SimInputs& inputs,
                        const TwoTrackModel& model, double dt) {
  if (!(dt > 0.0 && dt <= 0.005)) {
    throw ValidationError(fmt::format("two_track_step: dt={} outside (0, 0.005]", dt));
  }
  if (std::abs(inputs.vx) < 0.05) {
    throw ValidationError("two_track_step: |v_x| < 0.05 m/s (standstill not supported)");
  }
  const VehicleParams& p = model.vehicle;
  const double speed = std::abs(inputs.vx);
  const double lambda =
      (p.stiffness_front + p.stiffness_rear) / (p.mass * speed) +
      (p.stiffness_front * p.lever_front * p.lever_front +
       p.stiffness_rear * p.lever_rear * p.lever_rear) /
          (p.yaw_inertia * speed);
  const int substeps = std::max(1, static_cast<int>(std::ceil(lambda * dt / 1.5)));
  const double h = dt / substeps;

  TwoTrackVec s{state.x, state.y, state.yaw, state.vy, state.yaw_rate};
  for (int i = 0; i < substeps; ++i) {
    const auto k1 = two_track_rate(s, inputs, model);
    const auto k2 = two_track_rate(axpy(s, 0.5 * h, k1), inputs, model);
    const auto k3 = two_track_rate(axpy(s, 0.5 * h, k2), inputs, model);
    const auto k4 = two_track_rate(axpy(s, h, k3), inputs, model);
    for (std::size_t j = 0; j < s.size(); ++j) {
      s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }
  SimState next;
  next.x = s[0];
  next.y = s[1];
  next.yaw = wrap_angle(s[2]);
  next.vx = inputs.vx;
  next.vy = s[3];
  next.yaw_rate = s[4];
  if (!std::isfinite(next.vy) || !std::isfinite(next.yaw_rate)) {
    throw NumericalError("two_track_step: state diverged");
  }
  return next;
}

SteadyStateResult steady_state_beta_r(double vx, double steering, const TwoTrackModel& model) {
  constexpr double kDt = 0.005;
  constexpr int kStepsPerSecond = 200;
  constexpr int kMaxSeconds = 60;
  constexpr double kTolerance = 1e-9;

  const SimInputs inputs{vx, steering};
  SimState state;
  state.vx = vx;
  state.yaw_rate = vx * std::tan(steering) / model.vehicle.wheelbase();

  for (int second = 1; second <= kMaxSeconds; ++second) {
    const SimState before = state;
    for (int i = 0; i < kStepsPerSecond; ++i) {
      state = two_track_step(state, inputs, model, kDt);
    }
    const double change = std::hypot(state.vy - before.vy, state.yaw_rate - before.yaw_rate);
    if (change < kTolerance) {
      SteadyStateResult r;
      r.beta_rear = std::atan(state.vy / std::abs(vx)) * sign(vx);
      r.yaw_rate = state.yaw_rate;
      r.lateral_velocity = state.vy;
      r.settle_time = second;
      return r;
    }
  }
  throw NumericalError(fmt::format(
      "steady_state_beta_r: no convergence within {} s (v_x={}, delta={})", kMaxSeconds, vx,
      steering));
}

void Scenario::validate() const {
  if (segments.empty()) throw ValidationError("scenario.segments: must not be empty");
  if (!(sample_rate > 0.0)) throw ValidationError("scenario.sample_rate: must be > 0");
  if (!(sim_dt > 0.0 && sim_dt <= 0.005)) {
    throw ValidationError("scenario.sim_dt: must be in (0, 0.005]");
  }
  const double ratio = 1.0 / (sample_rate * sim_dt);
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
    throw ValidationError("scenario: 1/sample_rate must be an integer multiple of sim_dt");
  }
  if (!(ramp_time >= 0.0)) throw ValidationError("scenario.ramp_time: must be >= 0");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.duration > 0.0)) {
      throw ValidationError(fmt::format("scenario.segments[{}].duration: must be > 0", i));
    }
    if (s.steering.has_value() == s.yaw_rate.has_value()) {
      throw ValidationError(fmt::format(
          "scenario.segments[{}]: exactly one of steering or yaw_rate is required", i));
    }
    if (s.steering && !(std::abs(*s.steering) < 1.5)) {
      throw ValidationError(fmt::format("scenario.segments[{}].steering: |delta| too large", i));
    }
    if (s.yaw_rate && *s.yaw_rate != 0.0 && s.vx == 0.0) {
      throw ValidationError(
          fmt::format("scenario.segments[{}]: yaw_rate target requires v_x != 0", i));
    }
  }
}

std::vector<GroundTruthSample> simulate_scenario(const Scenario& scenario,
                                                 const TwoTrackModel& model) {
  scenario.validate();
  const VehicleParams& p = model.vehicle;
  p.validate();
  const double wheelbase = p.wheelbase();
  auto x_rho_for = [&](double vx) {
    if (scenario.model != SimModelKind::kKinematic) return 0.0;
    return vx >= 0.0 ? scenario.x_rho_forward : scenario.x_rho_reverse;
  };
  auto steering_for = [&](double vx, double yaw_rate) {
    if (vx == 0.0) return 0.0;
    return std::atan((wheelbase - x_rho_for(vx)) * yaw_rate / vx);
  };

  // Piecewise command profile with linear transitions.
  struct Command {
    double vx, steering;
  };
  std::vector<double> starts;
  double total = 0.0;
  for (const auto& s : scenario.segments) {
    starts.push_back(total);
    total += s.duration;
  }
  auto command_at = [&](double t) -> Command {
    std::size_t k = 0;
    while (k + 1 < starts.size() && t >= starts[k + 1]) ++k;
    const auto& seg = scenario.segments[k];
    const double ramp = std::min(scenario.ramp_time, seg.duration);
    const double tau = t - starts[k];
    const double w = (k == 0 || ramp == 0.0) ? 1.0 : std::clamp(tau / ramp, 0.0, 1.0);
    const auto& prev = scenario.segments[k == 0 ? 0 : k - 1];
    const double prev_vx = prev.vx;
    const double prev_steer =
        prev.steering ? *prev.steering : steering_for(prev.vx, *prev.yaw_rate);
    const double vx = prev_vx + w * (seg.vx - prev_vx);
    if (seg.steering) {
      return {vx, prev_steer + w * (*seg.steering - prev_steer)};
    }
    // Ramp the yaw rate itself so that the heading change is exact.
    const double prev_rate = prev.yaw_rate
                                 ? *prev.yaw_rate
                                 : (prev_vx == 0.0 ? 0.0
                                                   : prev_vx * std::tan(prev_steer) /
                                                         (wheelbase - x_rho_for(prev_vx)));
    const double rate = prev_rate + w * (*seg.yaw_rate - prev_rate);
    return {vx, steering_for(vx, rate)};
  };

  const double sim_dt = scenario.sim_dt;
  const long substeps = std::lround(1.0 / (scenario.sample_rate * sim_dt));
  const long samples = std::lround(total * scenario.sample_rate);

  SimState state;
  state.x = scenario.x0;
  state.y = scenario.y0;
  state.yaw = wrap_angle(scenario.yaw0);
  auto sync_velocities = [&](double t) {
    const Command c = command_at(t);
    state.vx = c.vx;
    if (scenario.model == SimModelKind::kKinematic) {
      const double xr = x_rho_for(c.vx);
      state.yaw_rate = c.vx * std::tan(c.steering) / (wheelbase - xr);
      state.vy = -xr * state.yaw_rate;
    }
  };
  sync_velocities(0.0);
  if (scenario.model == SimModelKind::kTwoTrack) {
    const Command c = command_at(0.0);
    state.yaw_rate = c.vx * std::tan(c.steering) / wheelbase;
  }

  std::vector<GroundTruthSample> truth;
  truth.reserve(static_cast<std::size_t>(samples + 1));
  auto record = [&](double t) {
    truth.push_back({t, state.x, state.y, state.yaw, state.vx, state.vy, state.yaw_rate});
  };
  record(0.0);
  long step = 0;
  for (long k = 1; k <= samples; ++k) {
    for (long j = 0; j < substeps; ++j, ++step) {
      const double t0 = static_cast<double>(step) * sim_dt;
      const Command c = command_at(t0 + 0.5 * sim_dt);
      const SimInputs in{c.vx, c.steering};
      if (scenario.model == SimModelKind::kKinematic) {
        state = kinematic_bicycle_step(state, in, p, sim_dt, x_rho_for(c.vx));
      } else {
        state = two_track_step(state, in, model, sim_dt);
      }
    }
    const double t = static_cast<double>(k) / scenario.sample_rate;
    sync_velocities(t);
    record(t);
  }
  return truth;
}

ManeuverLog synthesize_sensors(const std::vector<GroundTruthSample>& truth,
                               const VehicleParams& params, const SensorNoise& noise) {
  if (truth.size() < 2) {
    throw ValidationError("synthesize_sensors: truth needs at least two samples");
  }
  noise.validate();
  std::vector<double> ts;
  ts.reserve(truth.size());
  for (const auto& g : truth) ts.push_back(g.t);
  const double dt = check_uniform_timestamps(ts);

  const std::size_t n = truth.size();
  auto derivative = [&](std::size_t i, auto field) {
    if (i == 0) return (field(truth[1]) - field(truth[0])) / (truth[1].t - truth[0].t);
    if (i == n - 1) {
      return (field(truth[n - 1]) - field(truth[n - 2])) / (truth[n - 1].t - truth[n - 2].t);
    }
    return (field(truth[i + 1]) - field(truth[i - 1])) / (truth[i + 1].t - truth[i - 1].t);
  };

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  auto quantize = [&](double v) {
    if (noise.encoder_quantization <= 0.0) return v;
    return std::round(v / noise.encoder_quantization) * noise.encoder_quantization;
  };

  const double wheelbase = params.wheelbase();
  const double half_track = 0.5 * params.track_front;
  const Eigen::Vector2d imu_lever(params.imu_lever_x, params.imu_lever_y);
  const AckermannDeviationMap ideal{};

  ManeuverLog log;
  log.metadata.sample_rate = 1.0 / dt;
  log.sensors.reserve(n);
  double steering = 0.0;
  Gear gear = Gear::kNeutral;
  for (std::size_t i = 0; i < n; ++i) {
    const GroundTruthSample& g = truth[i];
    const double vx_dot = derivative(i, [](const GroundTruthSample& s) { return s.vx; });
    const double vy_dot = derivative(i, [](const GroundTruthSample& s) { return s.vy; });
    const double w_dot = derivative(i, [](const GroundTruthSample& s) { return s.yaw_rate; });
    const double w = g.yaw_rate;

    SensorSample s;
    s.t = g.t;
    const Eigen::Vector2d v_imu = transfer_planar_velocity({g.vx, g.vy}, w, imu_lever);
    const double v_imu_x_dot = vx_dot - w_dot * imu_lever.y();
    const double v_imu_y_dot = vy_dot + w_dot * imu_lever.x();
    s.accel = {v_imu_x_dot - w * v_imu.y(), v_imu_y_dot + w * v_imu.x(), -kGravity};
    s.gyro = {0.0, 0.0, w};
    if (noise.accel_bias != 0.0 || noise.accel_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) s.accel[k] += noise.accel_bias + noise.accel_sigma * unit(rng);
    }
    if (noise.gyro_bias != 0.0 || noise.gyro_sigma > 0.0) {
      for (int k = 0; k < 3; ++k) s.gyro[k] += noise.gyro_bias + noise.gyro_sigma * unit(rng);
    }

    const Eigen::Vector2d v_front = transfer_planar_velocity({g.vx, g.vy}, w, {wheelbase, 0.0});
    if (std::abs(g.vx) > 1e-6) {
      steering = std::atan(v_front.y() / g.vx);
    }
    const auto [delta_fl, delta_fr] = ackermann_angles(steering, params, ideal);
    auto wheel_speed = [&](double x, double y, double steer) {
      const Eigen::Vector2d vc = transfer_planar_velocity({g.vx, g.vy}, w, {x, y});
      return quantize(std::abs(vc.x() * std::cos(steer) + vc.y() * std::sin(steer)));
    };
    s.ws_fl = wheel_speed(wheelbase, half_track, delta_fl);
    s.ws_fr = wheel_speed(wheelbase, -half_track, delta_fr);
    s.ws_rl = wheel_speed(0.0, half_track, 0.0);
    s.ws_rr = wheel_speed(0.0, -half_track, 0.0);
    s.steering_front = steering + noise.steering_offset;

    if (g.vx > 1e-9) {
      gear = Gear::kForward;
    } else if (g.vx < -1e-9) {
      gear = Gear::kReverse;
    }
    s.gear = gear;
    log.sensors.push_back(s);
  }
  log.truth = truth;
  return log;
}

}  // namespace parkloc
