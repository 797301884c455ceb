#include "parkloc/commands.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "parkloc/calibration.hpp"
#include "parkloc/evaluation.hpp"
#include "parkloc/log_io.hpp"
#include "parkloc/strapdown_ekf.hpp"
#include "parkloc/vehicle_sim.hpp"

namespace parkloc {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

fs::path write_manifest(const fs::path& out_dir, const std::string& command,
                        const nlohmann::json& config_echo, const std::vector<fs::path>& inputs,
                        const std::vector<fs::path>& outputs) {
  nlohmann::json in = nlohmann::json::array();
  for (const auto& p : inputs) {
    in.push_back({{"file", p.filename().generic_string()}, {"sha256", sha256_file(p)}});
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : outputs) {
    out.push_back({{"file", p.filename().generic_string()}, {"sha256", sha256_file(p)}});
  }
  nlohmann::json doc = {{"command", command}, {"config", config_echo}, {"inputs", in},
                        {"outputs", out}};
  const fs::path path = out_dir / (command + ".manifest.json");
  write_text_file(path, doc.dump(2) + "\n");
  return path;
}

SimulateOutput cmd_simulate(const fs::path& scenario_file, const RunConfig& config,
                            const fs::path& out_dir, const std::string& id) {
  RunConfig cfg = config;
  if (!scenario_file.empty()) cfg.scenario = load_scenario(scenario_file);
  if (cfg.scenario.segments.empty()) {
    throw ValidationError("simulate: scenario has no segments");
  }
  const auto truth = simulate_scenario(cfg.scenario, cfg.two_track_model());
  ManeuverLog log = synthesize_sensors(truth, cfg.vehicle, cfg.noise);

  SimulateOutput result;
  result.sensor_csv = out_dir / (id + ".csv");
  result.truth_csv = truth_path_for(result.sensor_csv);
  std::ostringstream sensors, truth_text;
  write_sensor_csv(sensors, log.sensors);
  write_truth_csv(truth_text, *log.truth);
  write_text_file(result.sensor_csv, sensors.str());
  write_text_file(result.truth_csv, truth_text.str());

  std::vector<fs::path> inputs;
  if (!scenario_file.empty()) inputs.push_back(scenario_file);
  result.manifest = write_manifest(out_dir, "simulate", run_config_to_json(cfg), inputs,
                                   {result.sensor_csv, result.truth_csv});
  return result;
}

std::vector<fs::path> cmd_calibrate(const fs::path& log_csv, const RunConfig& config,
                                    const fs::path& out_dir) {
  const ManeuverLog log = load_log(log_csv, truth_path_for(log_csv));
  const double wheelbase = config.vehicle.wheelbase();
  std::vector<CalibrationResult> results;
  std::vector<fs::path> outputs;
  for (auto variant : {CalibrationVariant::kOmegaVy, CalibrationVariant::kDeltaBeta}) {
    results.push_back(calibrate_log(log, config.gates, variant, wheelbase));
    std::vector<CalibrationSample> samples;
    for (const auto& seg : segment_by_direction(log)) {
      auto part = gate_samples(log, seg, config.gates, variant);
      samples.insert(samples.end(), part.begin(), part.end());
    }
    const fs::path scatter = out_dir / fmt::format("calibration_{}_scatter.csv", to_string(variant));
    write_text_file(scatter, calibration_scatter_csv(samples, variant));
    outputs.push_back(scatter);
  }
  const fs::path report = out_dir / "calibration.json";
  write_text_file(report, calibration_report_json(results));
  outputs.insert(outputs.begin(), report);
  outputs.push_back(write_manifest(out_dir, "calibrate", run_config_to_json(config),
                                   {log_csv, truth_path_for(log_csv)}, outputs));
  return outputs;
}

namespace {

std::optional<fs::path> optional_truth(const fs::path& log_csv) {
  const fs::path t = truth_path_for(log_csv);
  if (fs::exists(t)) return t;
  return std::nullopt;
}

std::string filter_csv(const FilterOutput& out) {
  std::string text = "t,vx,vy,vz,qw,qx,qy,qz,X,Y,Z";
  for (int i = 0; i < kNavStateDim; ++i) text += fmt::format(",P_{}", i);
  text += "\n";
  for (const auto& s : out.samples) {
    const auto& q = s.state.attitude;
    const double values[] = {s.t, s.state.velocity.x(), s.state.velocity.y(),
                             s.state.velocity.z(), q.w(), q.x(), q.y(), q.z(),
                             s.reference_position.x(), s.reference_position.y(),
                             s.reference_position.z()};
    bool first = true;
    for (double v : values) {
      if (!first) text += ',';
      text += format_double(v);
      first = false;
    }
    for (int i = 0; i < kNavStateDim; ++i) text += "," + format_double(s.covariance_diagonal[i]);
    text += "\n";
  }
  return text;
}

std::string innovations_csv(const FilterOutput& out) {
  static const char* kNames[] = {"vx", "vy", "vz"};
  std::string text = "t,channel,measurement,innovation,variance,accepted\n";
  for (const auto& r : out.innovations) {
    text += fmt::format("{},{},{},{},{},{}\n", format_double(r.t),
                        kNames[static_cast<int>(r.channel)], format_double(r.measurement),
                        format_double(r.innovation), format_double(r.variance),
                        r.accepted ? 1 : 0);
  }
  return text;
}

std::vector<fs::path> expand_logs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> logs;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        const fs::path f = entry.path();
        const std::string stem = f.stem().string();
        if (f.extension() == ".csv" && !(stem.size() > 6 && stem.ends_with("_truth"))) {
          found.push_back(f);
        }
      }
      std::sort(found.begin(), found.end());
      logs.insert(logs.end(), found.begin(), found.end());
    } else {
      logs.push_back(p);
    }
  }
  if (logs.empty()) throw ValidationError("evaluate: no logs given");
  return logs;
}

}  // namespace

std::vector<fs::path> cmd_filter(const fs::path& log_csv, const RunConfig& config,
                                 const fs::path& out_dir) {
  const auto truth = optional_truth(log_csv);
  const ManeuverLog log = load_log(log_csv, truth);
  const FilterOutput out = run_filter(log, config.filter_config());
  const std::string id = log_csv.stem().string();
  const fs::path states = out_dir / fmt::format("filter_{}.csv", id);
  const fs::path innovations = out_dir / fmt::format("innovations_{}.csv", id);
  write_text_file(states, filter_csv(out));
  write_text_file(innovations, innovations_csv(out));
  std::vector<fs::path> inputs{log_csv};
  if (truth) inputs.push_back(*truth);
  std::vector<fs::path> outputs{states, innovations};
  outputs.push_back(write_manifest(out_dir, "filter", run_config_to_json(config), inputs, outputs));
  return outputs;
}

std::vector<fs::path> cmd_disturb(const CirclePerturbationSpec& spec, const RunConfig& config,
                                  const fs::path& out_dir) {
  const DisturbanceReport report = analyze_disturbance(spec);
  const fs::path csv = out_dir / "disturbance.csv";
  const fs::path summary = out_dir / "disturbance.json";
  write_text_file(csv, disturbance_csv(report));
  const nlohmann::json doc = {{"vx", spec.vx},
                              {"yaw_rate", spec.yaw_rate},
                              {"delta_x", spec.delta_x},
                              {"turn_angle", spec.turn_angle},
                              {"e_max", report.e_max},
                              {"e_90", report.e_90}};
  write_text_file(summary, doc.dump(2) + "\n");
  std::vector<fs::path> outputs{csv, summary};
  outputs.push_back(write_manifest(out_dir, "disturb", run_config_to_json(config), {}, outputs));
  return outputs;
}

std::vector<fs::path> cmd_evaluate(const std::vector<fs::path>& inputs, const RunConfig& config,
                                   const fs::path& out_dir) {
  const auto log_paths = expand_logs(inputs);
  std::vector<ManeuverLog> logs;
  std::vector<fs::path> hashed;
  for (const auto& p : log_paths) {
    logs.push_back(load_log(p, truth_path_for(p)));
    logs.back().metadata.id = p.stem().string();
    hashed.push_back(p);
    hashed.push_back(truth_path_for(p));
  }

  std::vector<FilterConfig> configs;
  FilterConfig baseline = config.filter_config();
  baseline.model = LateralModelKind::kZeroSlip;
  configs.push_back(baseline);
  if (config.lateral_kind != LateralModelKind::kZeroSlip) configs.push_back(config.filter_config());

  const ComparisonTable table = compare_models(logs, configs, config.reduction);
  std::vector<fs::path> outputs;
  const fs::path comparison = out_dir / "comparison.json";
  write_text_file(comparison, comparison_to_json(table));
  outputs.push_back(comparison);
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& fc : configs) {
      const auto report = trajectory_error(run_filter(logs[i], fc), *logs[i].truth);
      const fs::path p =
          out_dir / fmt::format("error_{}_{}.csv", logs[i].metadata.id, to_string(fc.model));
      write_text_file(p, render_error_series_csv(report));
      outputs.push_back(p);
    }
  }
  outputs.push_back(
      write_manifest(out_dir, "evaluate", run_config_to_json(config), hashed, outputs));
  return outputs;
}

std::vector<fs::path> cmd_report(const fs::path& comparison_json, const fs::path& out_dir) {
  const ComparisonTable table = comparison_from_json(read_text_file(comparison_json));
  const std::vector<std::pair<std::string, std::string>> files = {
      {"summary.md", render_summary_markdown(table)},
      {"comparison.md", render_comparison_markdown(table)},
      {"comparison.csv", render_comparison_csv(table)},
      {"comparison.svg", render_comparison_svg(table)},
  };
  std::vector<fs::path> outputs;
  for (const auto& [name, content] : files) {
    write_text_file(out_dir / name, content);
    outputs.push_back(out_dir / name);
  }
  outputs.push_back(write_manifest(out_dir, "report", nullptr, {comparison_json}, outputs));
  return outputs;
}

}  // namespace parkloc
