#pragma once

// Per-direction regression of the lateral-model parameter from logs with truth.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "parkloc/core.hpp"

namespace parkloc {

class InsufficientSamplesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr std::size_t kMinCalibrationSamples = 50;

enum class CalibrationVariant { kOmegaVy, kDeltaBeta };

struct CalibrationSample {
  double yaw_rate = 0.0;           // omega_z, rad/s
  double lateral_velocity = 0.0;   // v_{y,r}, m/s
  double tan_steering = 0.0;       // tan(delta_f)
  double beta = 0.0;               // atan2(v_{y,r}, |v_x|), rad
  int direction = 1;               // -1 or +1
  double weight = 1.0;
};

struct DirectionSegment {
  std::size_t begin = 0;  // sensor sample index, inclusive
  std::size_t end = 0;    // exclusive
  int direction = 0;
};

struct GateThresholds {
  double min_speed = 0.3;          // |v_x|, m/s
  double min_yaw_rate = 0.05;      // |omega_z|, rad/s, omega-vy variant only
  double max_lateral_accel = 1.0;  // |a_y|, m/s^2

  void validate() const;
};

struct GateCounts {
  std::size_t considered = 0;
  std::size_t kept = 0;
};

struct DirectionEstimate {
  int direction = 0;
  double slope = 0.0;
  double x_rho = 0.0;
  double k_rho = 0.0;
  double stderr_slope = 0.0;
  std::size_t n = 0;
  double rms = 0.0;  // residual RMS
};

struct CalibrationResult {
  CalibrationVariant variant = CalibrationVariant::kOmegaVy;
  double wheelbase = 0.0;
  std::optional<DirectionEstimate> forward;
  std::optional<DirectionEstimate> reverse;
  double rejected_fraction = 0.0;

  const std::optional<DirectionEstimate>& for_direction(int direction) const;
};

/// Maximal runs of constant, nonzero driving direction from truth v_x.
std::vector<DirectionSegment> segment_by_direction(const ManeuverLog& log,
                                                   double deadband = kDefaultDeadband);

/// Samples of one segment that pass the gates. Truth is interpolated at the
/// sensor timestamps; steering comes from the sensor channel.
std::vector<CalibrationSample> gate_samples(const ManeuverLog& log, const DirectionSegment& segment,
                                            const GateThresholds& thresholds,
                                            CalibrationVariant variant,
                                            GateCounts* counts = nullptr);

/// Zero-intercept fit of v_y on omega_z per direction; x_rho = -slope.
CalibrationResult estimate_omega_vy(const std::vector<CalibrationSample>& samples,
                                    double wheelbase);

/// Zero-intercept fit of beta on sgn(v_x) tan(delta_f) per direction; k_rho = -slope.
CalibrationResult estimate_delta_beta(const std::vector<CalibrationSample>& samples,
                                      double wheelbase);

/// Segments, gates and fits a whole log with one variant.
CalibrationResult calibrate_log(const ManeuverLog& log, const GateThresholds& thresholds,
                                CalibrationVariant variant, double wheelbase);

std::string to_string(CalibrationVariant variant);

/// {"variant", "wheelbase", "rejected_fraction", "forward": {...}, "reverse": {...}}.
std::string calibration_report_json(const std::vector<CalibrationResult>& results);

/// Scatter CSV with header x,y,direction.
std::string calibration_scatter_csv(const std::vector<CalibrationSample>& samples,
                                    CalibrationVariant variant);

}  // namespace parkloc
