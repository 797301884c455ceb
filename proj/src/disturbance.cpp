#include "parkloc/disturbance.hpp"

#include <cmath>

#include "parkloc/core.hpp"
#include "parkloc/log_io.hpp"

namespace parkloc {

void CirclePerturbationSpec::validate() const {
  if (!std::isfinite(vx) || !std::isfinite(yaw_rate) || !std::isfinite(delta_x) ||
      !std::isfinite(turn_angle)) {
    throw ValidationError("disturbance: non-finite parameter");
  }
  if (yaw_rate == 0.0) throw ValidationError("disturbance: yaw_rate must be nonzero");
  if (samples < 2) throw ValidationError("disturbance: samples must be >= 2");
}

Eigen::Vector2d nominal_circle(double vx, double yaw_rate, double t) {
  if (yaw_rate == 0.0) throw ValidationError("nominal_circle: yaw_rate must be nonzero");
  const double radius = vx / yaw_rate;
  const double phase = yaw_rate * t;
  return {radius * std::sin(phase), radius * (1.0 - std::cos(phase))};
}

Eigen::Vector2d perturbed_circle(double vx, double yaw_rate, double delta_x, double t) {
  const Eigen::Vector2d nominal = nominal_circle(vx, yaw_rate, t);
  if (delta_x == 0.0) return nominal;
  const double phase = yaw_rate * t;
  return nominal + Eigen::Vector2d(delta_x * (std::cos(phase) - 1.0), delta_x * std::sin(phase));
}

double position_error(double delta_x, double phase) {
  return std::abs(delta_x) * std::sqrt(2.0 * (1.0 - std::cos(phase)));
}

double max_position_error(double delta_x) { return 2.0 * std::abs(delta_x); }

double quarter_turn_position_error(double delta_x) { return std::sqrt(2.0) * std::abs(delta_x); }

DisturbanceReport analyze_disturbance(const CirclePerturbationSpec& spec) {
  spec.validate();
  DisturbanceReport report;
  report.e_max = max_position_error(spec.delta_x);
  report.e_90 = quarter_turn_position_error(spec.delta_x);
  report.samples.reserve(static_cast<std::size_t>(spec.samples));
  for (int i = 0; i < spec.samples; ++i) {
    const double phase = spec.turn_angle * i / (spec.samples - 1);
    const double t = phase / spec.yaw_rate;
    const Eigen::Vector2d d = perturbed_circle(spec.vx, spec.yaw_rate, spec.delta_x, t) -
                              nominal_circle(spec.vx, spec.yaw_rate, t);
    report.samples.push_back({phase, d.x(), d.y(), position_error(spec.delta_x, phase)});
  }
  return report;
}

std::vector<Eigen::Vector2d> integrate_perturbed_circle(double vx, double yaw_rate,
                                                        double delta_x, double duration,
                                                        double dt) {
  if (!(dt > 0.0) || !(duration >= 0.0)) {
    throw ValidationError("integrate_perturbed_circle: need dt > 0 and duration >= 0");
  }
  const double vy = delta_x * yaw_rate;
  auto rhs = [&](const Eigen::Vector3d& s) {
    const double c = std::cos(s.z()), si = std::sin(s.z());
    return Eigen::Vector3d(vx * c - vy * si, vx * si + vy * c, yaw_rate);
  };
  const auto full_steps = static_cast<long>(std::floor(duration / dt));
  const double remainder = duration - static_cast<double>(full_steps) * dt;
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(full_steps) + 2);
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  out.emplace_back(0.0, 0.0);
  auto step = [&](double h) {
    const Eigen::Vector3d k1 = rhs(s);
    const Eigen::Vector3d k2 = rhs(s + 0.5 * h * k1);
    const Eigen::Vector3d k3 = rhs(s + 0.5 * h * k2);
    const Eigen::Vector3d k4 = rhs(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.emplace_back(s.x(), s.y());
  };
  for (long i = 0; i < full_steps; ++i) step(dt);
  // A short closing step lands the last sample exactly on `duration`.
  if (remainder > 1e-9 * dt) step(remainder);
  return out;
}

std::string disturbance_csv(const DisturbanceReport& report) {
  std::string out = "phase,dX,dY,e\n";
  for (const auto& s : report.samples) {
    out += format_double(s.phase) + ',' + format_double(s.dX) + ',' + format_double(s.dY) + ',' +
           format_double(s.error) + '\n';
  }
  return out;
}

}  // namespace parkloc
