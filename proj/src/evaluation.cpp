#include "parkloc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include "json.hpp"

#include "parkloc/log_io.hpp"

namespace parkloc {

std::string to_string(ErrorReduction reduction) {
  switch (reduction) {
    case ErrorReduction::kMax: return "max";
    case ErrorReduction::kFinal: return "final";
    case ErrorReduction::kMean: return "mean";
  }
  return "max";
}

ErrorReduction error_reduction_from_string(const std::string& name) {
  if (name == "max") return ErrorReduction::kMax;
  if (name == "final") return ErrorReduction::kFinal;
  if (name == "mean") return ErrorReduction::kMean;
  throw ValidationError(fmt::format("unknown error reduction '{}' (max|final|mean)", name));
}

std::vector<TimedPose> poses_from_filter(const FilterOutput& output) {
  std::vector<TimedPose> poses;
  poses.reserve(output.samples.size());
  for (const auto& s : output.samples) {
    poses.push_back({s.t, s.reference_position.x(), s.reference_position.y(), s.state.yaw()});
  }
  return poses;
}

TrajectoryErrorReport trajectory_error(const std::vector<TimedPose>& estimate,
                                       const std::vector<GroundTruthSample>& reference) {
  if (estimate.empty() || reference.empty()) {
    throw ValidationError("trajectory_error: empty trajectory");
  }
  const double t0 = reference.front().t - 1e-9;
  const double t1 = reference.back().t + 1e-9;
  std::vector<const TimedPose*> used;
  for (const auto& p : estimate) {
    if (p.t >= t0 && p.t <= t1) used.push_back(&p);
  }
  if (used.empty()) throw ValidationError("trajectory_error: no temporal overlap");

  // Rigid transform taking the first estimate pose onto the reference pose.
  const TimedPose& first = *used.front();
  const GroundTruthSample start = interpolate_truth(reference, first.t);
  const double dyaw = start.yaw - first.yaw;
  const double c = std::cos(dyaw), s = std::sin(dyaw);

  TrajectoryErrorReport report;
  report.t.reserve(used.size());
  report.error.reserve(used.size());
  for (const TimedPose* p : used) {
    const double ex = p->x - first.x, ey = p->y - first.y;
    const double ax = start.x + c * ex - s * ey;
    const double ay = start.y + s * ex + c * ey;
    const GroundTruthSample r = interpolate_truth(reference, p->t);
    report.t.push_back(p->t);
    report.error.push_back(std::hypot(ax - r.x, ay - r.y));
  }
  report.summary = summarize(report.error);
  return report;
}

TrajectoryErrorReport trajectory_error(const FilterOutput& estimate,
                                       const std::vector<GroundTruthSample>& reference) {
  return trajectory_error(poses_from_filter(estimate), reference);
}

double nearest_rank_percentile(std::vector<double> values, int percent) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  if (percent < 1 || percent > 100) throw ValidationError("percentile must be in [1, 100]");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;
  return values[rank - 1];
}

ErrorSummary summarize(const std::vector<double>& errors) {
  if (errors.empty()) throw ValidationError("summarize: empty error set");
  for (double e : errors) {
    if (!std::isfinite(e) || e < 0.0) throw ValidationError("summarize: errors must be finite and >= 0");
  }
  ErrorSummary s;
  s.p63 = nearest_rank_percentile(errors, 63);
  s.p95 = nearest_rank_percentile(errors, 95);
  s.max = *std::max_element(errors.begin(), errors.end());
  return s;
}

double reduce_error(const std::vector<double>& errors, ErrorReduction reduction) {
  if (errors.empty()) throw ValidationError("reduce_error: empty error set");
  switch (reduction) {
    case ErrorReduction::kFinal: return errors.back();
    case ErrorReduction::kMean:
      return std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    case ErrorReduction::kMax: break;
  }
  return *std::max_element(errors.begin(), errors.end());
}

void ComparisonTable::validate() const {
  if (errors.size() != maneuvers.size()) {
    throw ValidationError("comparison: one error row per maneuver required");
  }
  for (const auto& row : errors) {
    if (row.size() != models.size()) {
      throw ValidationError("comparison: one error column per model required");
    }
  }
}

std::vector<std::string> ComparisonTable::improvements(const std::string& candidate,
                                                       const std::string& baseline) const {
  const auto ic = std::find(models.begin(), models.end(), candidate);
  const auto ib = std::find(models.begin(), models.end(), baseline);
  if (ic == models.end() || ib == models.end()) {
    throw ValidationError("comparison: unknown model name");
  }
  const auto c = static_cast<std::size_t>(ic - models.begin());
  const auto b = static_cast<std::size_t>(ib - models.begin());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < maneuvers.size(); ++i) {
    if (errors[i][c] < errors[i][b]) out.push_back(maneuvers[i]);
  }
  return out;
}

ComparisonTable compare_models(const std::vector<ManeuverLog>& logs,
                               const std::vector<FilterConfig>& configs, ErrorReduction reduction,
                               std::vector<std::string> model_names) {
  if (configs.empty()) throw ValidationError("compare_models: no configs");
  if (model_names.empty()) {
    for (const auto& c : configs) model_names.emplace_back(to_string(c.model));
  }
  if (model_names.size() != configs.size()) {
    throw ValidationError("compare_models: one name per config required");
  }
  ComparisonTable table;
  table.models = model_names;
  table.reduction = reduction;
  std::vector<std::vector<double>> pooled(configs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const ManeuverLog& log = logs[i];
    if (!log.has_truth()) {
      throw ValidationError(fmt::format("compare_models: log '{}' has no truth", log.metadata.id));
    }
    table.maneuvers.push_back(log.metadata.id.empty() ? std::to_string(i + 1) : log.metadata.id);
    std::vector<double> row;
    for (std::size_t m = 0; m < configs.size(); ++m) {
      const auto report = trajectory_error(run_filter(log, configs[m]), *log.truth);
      row.push_back(reduce_error(report.error, reduction));
      pooled[m].insert(pooled[m].end(), report.error.begin(), report.error.end());
    }
    table.errors.push_back(std::move(row));
  }
  for (std::size_t m = 0; m < configs.size(); ++m) {
    if (!pooled[m].empty()) table.pooled[model_names[m]] = summarize(pooled[m]);
  }
  return table;
}

std::string comparison_to_json(const ComparisonTable& table) {
  table.validate();
  nlohmann::json doc;
  doc["reduction"] = to_string(table.reduction);
  doc["models"] = table.models;
  doc["maneuvers"] = table.maneuvers;
  doc["errors"] = table.errors;
  nlohmann::json pooled = nlohmann::json::object();
  for (const auto& [name, s] : table.pooled) {
    pooled[name] = {{"p63", s.p63}, {"p95", s.p95}, {"max", s.max}};
  }
  doc["pooled"] = pooled;
  return doc.dump(2) + "\n";
}

ComparisonTable comparison_from_json(const std::string& text) {
  ComparisonTable table;
  try {
    const auto doc = nlohmann::json::parse(text);
    table.reduction = error_reduction_from_string(doc.value("reduction", std::string("max")));
    table.models = doc.at("models").get<std::vector<std::string>>();
    table.maneuvers = doc.at("maneuvers").get<std::vector<std::string>>();
    table.errors = doc.at("errors").get<std::vector<std::vector<double>>>();
    if (doc.contains("pooled")) {
      for (const auto& [name, s] : doc.at("pooled").items()) {
        table.pooled[name] = {s.at("p63").get<double>(), s.at("p95").get<double>(),
                              s.at("max").get<double>()};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("comparison JSON: {}", e.what()));
  }
  table.validate();
  return table;
}

std::string render_summary_markdown(const ComparisonTable& table) {
  std::string out = "| model | p63 [m] | p95 [m] | max [m] |\n|---|---:|---:|---:|\n";
  for (const auto& name : table.models) {
    const auto it = table.pooled.find(name);
    if (it == table.pooled.end()) continue;
    out += fmt::format("| {} | {:.3f} | {:.3f} | {:.3f} |\n", name, it->second.p63, it->second.p95,
                       it->second.max);
  }
  return out;
}

std::string render_comparison_markdown(const ComparisonTable& table) {
  table.validate();
  std::string out = "| maneuver |";
  std::string rule = "|---|";
  for (const auto& m : table.models) {
    out += fmt::format(" {} [m] |", m);
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (std::size_t i = 0; i < table.maneuvers.size(); ++i) {
    out += "| " + table.maneuvers[i] + " |";
    for (double e : table.errors[i]) out += fmt::format(" {:.3f} |", e);
    out += "\n";
  }
  return out;
}

std::string render_comparison_csv(const ComparisonTable& table) {
  table.validate();
  std::string out = "maneuver";
  for (const auto& m : table.models) out += "," + m;
  out += "\n";
  for (std::size_t i = 0; i < table.maneuvers.size(); ++i) {
    out += table.maneuvers[i];
    for (double e : table.errors[i]) out += "," + format_double(e);
    out += "\n";
  }
  return out;
}

std::string render_comparison_svg(const ComparisonTable& table) {
  table.validate();
  static const char* kColors[] = {"#4e79a7", "#e15759", "#59a14f", "#f28e2b", "#b07aa1"};
  const double width = 640.0, height = 320.0;
  const double left = 50.0, right = 10.0, top = 20.0, bottom = 40.0;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double vmax = 0.0;
  for (const auto& row : table.errors) {
    for (double e : row) vmax = std::max(vmax, e);
  }
  if (vmax <= 0.0) vmax = 1.0;
  vmax = std::ceil(vmax * 10.0) / 10.0;

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"10\">\n",
      width, height);
  out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n",
                     left, top + plot_h, left + plot_w, top + plot_h);
  out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n",
                     left, top, left, top + plot_h);
  for (int k = 0; k <= 4; ++k) {
    const double v = vmax * k / 4.0;
    const double y = top + plot_h - plot_h * v / vmax;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n",
                       left - 4.0, y + 3.0, v);
  }
  const std::size_t n = table.maneuvers.size();
  const std::size_t m = table.models.size();
  const double group_w = n == 0 ? plot_w : plot_w / static_cast<double>(n);
  const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(m, 1));
  for (std::size_t i = 0; i < n; ++i) {
    const double gx = left + group_w * static_cast<double>(i) + group_w * 0.1;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = plot_h * table.errors[i][j] / vmax;
      out += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"/>\n",
          gx + bar_w * static_cast<double>(j), top + plot_h - h, bar_w, h, kColors[j % 5]);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n",
                       gx + 0.4 * group_w, top + plot_h + 14.0, table.maneuvers[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    const double lx = left + 10.0 + 120.0 * static_cast<double>(j);
    out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n",
                       lx, height - 16.0, kColors[j % 5]);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", lx + 14.0, height - 7.0,
                       table.models[j]);
  }
  out += "</svg>\n";
  return out;
}

std::string render_error_series_csv(const TrajectoryErrorReport& report) {
  std::string out = "t,e\n";
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    out += format_double(report.t[i]) + "," + format_double(report.error[i]) + "\n";
  }
  return out;
}

}  // namespace parkloc
