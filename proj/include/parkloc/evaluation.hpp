#pragma once

// Trajectory-error metrics and model comparison tables.

#include <map>
#include <string>
#include <vector>

#include "parkloc/core.hpp"
#include "parkloc/strapdown_ekf.hpp"

namespace parkloc {

struct TimedPose {
  double t = 0.0;
  double x = 0.0, y = 0.0, yaw = 0.0;
};

struct ErrorSummary {
  double p63 = 0.0;
  double p95 = 0.0;
  double max = 0.0;
};

struct TrajectoryErrorReport {
  std::vector<double> t;
  std::vector<double> error;  // m
  ErrorSummary summary;
  ManeuverMetadata metadata;
};

enum class ErrorReduction { kMax, kFinal, kMean };

std::string to_string(ErrorReduction reduction);
ErrorReduction error_reduction_from_string(const std::string& name);

/// Rear-axle poses of a filter run.
std::vector<TimedPose> poses_from_filter(const FilterOutput& output);

/// Per-sample planar distance after moving the estimate rigidly onto the
/// reference pose at the first estimate timestamp. The reference is linearly
/// interpolated. Throws ValidationError when the time ranges do not overlap;
/// estimate samples outside the reference range are dropped.
TrajectoryErrorReport trajectory_error(const std::vector<TimedPose>& estimate,
                                       const std::vector<GroundTruthSample>& reference);
TrajectoryErrorReport trajectory_error(const FilterOutput& estimate,
                                       const std::vector<GroundTruthSample>& reference);

/// Nearest-rank value: the smallest sample such that at least p percent of the
/// samples are <= it. p is an integer percentage in [1, 100].
double nearest_rank_percentile(std::vector<double> values, int percent);

/// p63, p95 and max. Throws ValidationError on empty input.
ErrorSummary summarize(const std::vector<double>& errors);

double reduce_error(const std::vector<double>& errors, ErrorReduction reduction);

struct ComparisonTable {
  std::vector<std::string> models;
  std::vector<std::string> maneuvers;
  std::vector<std::vector<double>> errors;  // [maneuver][model]
  std::map<std::string, ErrorSummary> pooled;  // keyed by model
  ErrorReduction reduction = ErrorReduction::kMax;

  /// Maneuvers where `candidate` is strictly below `baseline`.
  std::vector<std::string> improvements(const std::string& candidate,
                                        const std::string& baseline) const;
  void validate() const;
};

/// Runs every config over every log and reduces each error series to one scalar.
/// Model names default to the lateral model kind.
ComparisonTable compare_models(const std::vector<ManeuverLog>& logs,
                               const std::vector<FilterConfig>& configs,
                               ErrorReduction reduction = ErrorReduction::kMax,
                               std::vector<std::string> model_names = {});

/// Stable serialization used by report rendering.
std::string comparison_to_json(const ComparisonTable& table);
ComparisonTable comparison_from_json(const std::string& text);

std::string render_summary_markdown(const ComparisonTable& table);
std::string render_comparison_markdown(const ComparisonTable& table);
std::string render_comparison_csv(const ComparisonTable& table);
std::string render_comparison_svg(const ComparisonTable& table);
std::string render_error_series_csv(const TrajectoryErrorReport& report);

}  // namespace parkloc
