#include "parkloc/calibration.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include "json.hpp"

#include "parkloc/lateral_models.hpp"
#include "parkloc/log_io.hpp"

namespace parkloc {

namespace {

double regressor(const CalibrationSample& s, CalibrationVariant variant) {
  return variant == CalibrationVariant::kOmegaVy ? s.yaw_rate : s.direction * s.tan_steering;
}

double response(const CalibrationSample& s, CalibrationVariant variant) {
  return variant == CalibrationVariant::kOmegaVy ? s.lateral_velocity : s.beta;
}

std::optional<DirectionEstimate> fit_direction(const std::vector<CalibrationSample>& samples,
                                               CalibrationVariant variant, int direction,
                                               double wheelbase) {
  double sxx = 0.0, sxy = 0.0, sw = 0.0;
  std::size_t n = 0;
  double max_abs_x = 0.0;
  for (const auto& s : samples) {
    if (s.direction != direction) continue;
    const double x = regressor(s, variant);
    const double y = response(s, variant);
    sxx += s.weight * x * x;
    sxy += s.weight * x * y;
    sw += s.weight;
    max_abs_x = std::max(max_abs_x, std::abs(x));
    ++n;
  }
  if (n < kMinCalibrationSamples) return std::nullopt;
  if (!(sw > 0.0) || sxx <= 1e-14 * sw || max_abs_x == 0.0) {
    throw RankDeficientError(
        fmt::format("calibration: regressor is degenerate for direction {:+d}", direction));
  }

  DirectionEstimate est;
  est.direction = direction;
  est.n = n;
  est.slope = sxy / sxx;
  double ssr = 0.0;
  for (const auto& s : samples) {
    if (s.direction != direction) continue;
    const double r = response(s, variant) - est.slope * regressor(s, variant);
    ssr += s.weight * r * r;
  }
  est.rms = std::sqrt(ssr / sw);
  est.stderr_slope = std::sqrt(ssr / sw * static_cast<double>(n) / static_cast<double>(n - 1) / sxx);
  if (variant == CalibrationVariant::kOmegaVy) {
    est.x_rho = -est.slope;
    est.k_rho = k_from_x(est.x_rho, wheelbase);
  } else {
    est.k_rho = -est.slope;
    est.x_rho = x_from_k(est.k_rho, wheelbase);
  }
  return est;
}

CalibrationResult estimate(const std::vector<CalibrationSample>& samples, double wheelbase,
                           CalibrationVariant variant) {
  if (!(wheelbase > 0.0)) throw ValidationError("calibration: wheelbase must be > 0");
  for (const auto& s : samples) {
    if (s.direction != 1 && s.direction != -1) {
      throw ValidationError("calibration: sample direction must be -1 or +1");
    }
    if (!std::isfinite(regressor(s, variant)) || !std::isfinite(response(s, variant)) ||
        !(s.weight > 0.0)) {
      throw ValidationError("calibration: non-finite sample or non-positive weight");
    }
  }
  CalibrationResult result;
  result.variant = variant;
  result.wheelbase = wheelbase;
  result.forward = fit_direction(samples, variant, 1, wheelbase);
  result.reverse = fit_direction(samples, variant, -1, wheelbase);
  if (!result.forward && !result.reverse) {
    throw InsufficientSamplesError(
        fmt::format("calibration: fewer than {} gated samples in every direction",
                    kMinCalibrationSamples));
  }
  return result;
}

nlohmann::json estimate_json(const std::optional<DirectionEstimate>& e) {
  if (!e) return nullptr;
  return {{"x_rho", e->x_rho}, {"k_rho", e->k_rho}, {"slope", e->slope},
          {"stderr", e->stderr_slope}, {"n", e->n}, {"rms", e->rms}};
}

}  // namespace

void GateThresholds::validate() const {
  if (!(min_speed > 0.0) || !(min_yaw_rate > 0.0) || !(max_lateral_accel > 0.0)) {
    throw ValidationError("calibration gate thresholds must be positive");
  }
}

const std::optional<DirectionEstimate>& CalibrationResult::for_direction(int direction) const {
  return direction < 0 ? reverse : forward;
}

std::vector<DirectionSegment> segment_by_direction(const ManeuverLog& log, double deadband) {
  if (!log.has_truth()) throw ValidationError("segment_by_direction: log has no truth");
  std::vector<DirectionSegment> segments;
  DirectionSegment current;
  for (std::size_t i = 0; i < log.sensors.size(); ++i) {
    const int dir = driving_direction_sign(interpolate_truth(*log.truth, log.sensors[i].t).vx,
                                           deadband);
    if (dir != current.direction) {
      if (current.direction != 0) segments.push_back(current);
      current = {i, i, dir};
    }
    current.end = i + 1;
  }
  if (current.direction != 0) segments.push_back(current);
  return segments;
}

std::vector<CalibrationSample> gate_samples(const ManeuverLog& log, const DirectionSegment& segment,
                                            const GateThresholds& thresholds,
                                            CalibrationVariant variant, GateCounts* counts) {
  thresholds.validate();
  if (!log.has_truth()) throw ValidationError("gate_samples: log has no truth");
  if (segment.end > log.sensors.size() || segment.begin > segment.end) {
    throw ValidationError("gate_samples: segment out of range");
  }
  std::vector<CalibrationSample> out;
  GateCounts local;
  for (std::size_t i = segment.begin; i < segment.end; ++i) {
    const SensorSample& s = log.sensors[i];
    const GroundTruthSample g = interpolate_truth(*log.truth, s.t);
    ++local.considered;
    const double lateral_accel = g.vx * g.yaw_rate;
    if (std::abs(g.vx) < thresholds.min_speed) continue;
    if (std::abs(lateral_accel) > thresholds.max_lateral_accel) continue;
    if (variant == CalibrationVariant::kOmegaVy && std::abs(g.yaw_rate) < thresholds.min_yaw_rate) {
      continue;
    }
    CalibrationSample c;
    c.yaw_rate = g.yaw_rate;
    c.lateral_velocity = g.vy;
    c.tan_steering = std::tan(s.steering_front);
    c.beta = std::atan2(g.vy, std::abs(g.vx));
    c.direction = g.vx > 0.0 ? 1 : -1;
    out.push_back(c);
    ++local.kept;
  }
  if (counts) {
    counts->considered += local.considered;
    counts->kept += local.kept;
  }
  return out;
}

CalibrationResult estimate_omega_vy(const std::vector<CalibrationSample>& samples,
                                    double wheelbase) {
  return estimate(samples, wheelbase, CalibrationVariant::kOmegaVy);
}

CalibrationResult estimate_delta_beta(const std::vector<CalibrationSample>& samples,
                                      double wheelbase) {
  return estimate(samples, wheelbase, CalibrationVariant::kDeltaBeta);
}

CalibrationResult calibrate_log(const ManeuverLog& log, const GateThresholds& thresholds,
                                CalibrationVariant variant, double wheelbase) {
  GateCounts counts;
  std::vector<CalibrationSample> samples;
  for (const auto& seg : segment_by_direction(log)) {
    auto part = gate_samples(log, seg, thresholds, variant, &counts);
    samples.insert(samples.end(), part.begin(), part.end());
  }
  CalibrationResult result = estimate(samples, wheelbase, variant);
  result.rejected_fraction =
      counts.considered == 0
          ? 0.0
          : 1.0 - static_cast<double>(counts.kept) / static_cast<double>(counts.considered);
  return result;
}

std::string to_string(CalibrationVariant variant) {
  return variant == CalibrationVariant::kOmegaVy ? "omega-vy" : "delta-beta";
}

std::string calibration_report_json(const std::vector<CalibrationResult>& results) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : results) {
    doc.push_back({{"variant", to_string(r.variant)},
                   {"wheelbase", r.wheelbase},
                   {"rejected_fraction", r.rejected_fraction},
                   {"forward", estimate_json(r.forward)},
                   {"reverse", estimate_json(r.reverse)}});
  }
  return doc.dump(2) + "\n";
}

std::string calibration_scatter_csv(const std::vector<CalibrationSample>& samples,
                                    CalibrationVariant variant) {
  std::string out = "x,y,direction\n";
  for (const auto& s : samples) {
    out += format_double(regressor(s, variant));
    out += ',';
    out += format_double(response(s, variant));
    out += ',';
    out += std::to_string(s.direction);
    out += '\n';
  }
  return out;
}

}  // namespace parkloc
