// parkloc: simulate, calibrate, filter, disturb, evaluate, report.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "parkloc/commands.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "";
  std::string model;
};

parkloc::RunConfig resolve_config(const GlobalOptions& g) {
  if (g.config.empty()) throw parkloc::ValidationError("--config is required");
  parkloc::RunConfig cfg = parkloc::load_run_config(g.config);
  if (g.seed) cfg.noise.seed = *g.seed;
  if (!g.model.empty()) cfg.lateral_kind = parkloc::lateral_model_from_string(g.model);
  if (!g.out.empty()) cfg.out_dir = g.out;
  cfg.validate();
  return cfg;
}

void print_outputs(const std::vector<parkloc::fs::path>& paths) {
  for (const auto& p : paths) std::cout << p.generic_string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parking localization toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", g.config, "JSON run configuration");
    if (needs_config) opt->required();
    sub->add_option("--seed", g.seed, "Override noise.seed");
    sub->add_option("--out", g.out, "Output directory (overrides paths.out)");
    sub->add_option("--model", g.model, "Lateral model")
        ->check(CLI::IsMember({"zero-slip", "delta-beta", "omega-vy"}));
  };

  std::string scenario, id = "maneuver", log, comparison;
  std::vector<std::string> logs;
  parkloc::CirclePerturbationSpec spec;
  double turn_deg = 360.0;

  auto* simulate = app.add_subcommand("simulate", "Generate ground truth and sensor logs");
  add_common(simulate, true);
  simulate->add_option("--scenario", scenario, "Scenario JSON (default: config scenario)");
  simulate->add_option("--id", id, "Output file stem");

  auto* calibrate = app.add_subcommand("calibrate", "Estimate x_rho per driving direction");
  add_common(calibrate, true);
  calibrate->add_option("log", log, "Sensor CSV with sibling _truth.csv")->required();

  auto* filter = app.add_subcommand("filter", "Run the strapdown EKF on a log");
  add_common(filter, true);
  filter->add_option("log", log, "Sensor CSV")->required();

  auto* disturb = app.add_subcommand("disturb", "Closed-form steady-circle error analysis");
  add_common(disturb, true);
  disturb->add_option("--vx", spec.vx, "Speed, m/s");
  disturb->add_option("--yaw-rate", spec.yaw_rate, "Yaw rate, rad/s");
  disturb->add_option("--delta-x", spec.delta_x, "Parameter error, m");
  disturb->add_option("--turn-deg", turn_deg, "Swept heading, degrees");
  disturb->add_option("--samples", spec.samples, "Number of samples");

  auto* evaluate = app.add_subcommand("evaluate", "Compare zero-slip with the configured model");
  add_common(evaluate, true);
  evaluate->add_option("logs", logs, "Sensor CSVs or directories")->required();

  auto* report = app.add_subcommand("report", "Render tables and charts from comparison.json");
  add_common(report, false);
  report->add_option("comparison", comparison, "comparison.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : parkloc::kExitValidation;
  }

  try {
    if (report->parsed()) {
      print_outputs(parkloc::cmd_report(comparison, g.out.empty() ? "out" : g.out));
      return parkloc::kExitOk;
    }
    const parkloc::RunConfig cfg = resolve_config(g);
    if (simulate->parsed()) {
      const auto r = parkloc::cmd_simulate(scenario, cfg, cfg.out_dir, id);
      print_outputs({r.sensor_csv, r.truth_csv, r.manifest});
    } else if (calibrate->parsed()) {
      print_outputs(parkloc::cmd_calibrate(log, cfg, cfg.out_dir));
    } else if (filter->parsed()) {
      print_outputs(parkloc::cmd_filter(log, cfg, cfg.out_dir));
    } else if (disturb->parsed()) {
      spec.turn_angle = turn_deg * 3.14159265358979323846 / 180.0;
      print_outputs(parkloc::cmd_disturb(spec, cfg, cfg.out_dir));
    } else if (evaluate->parsed()) {
      std::vector<parkloc::fs::path> paths(logs.begin(), logs.end());
      print_outputs(parkloc::cmd_evaluate(paths, cfg, cfg.out_dir));
    }
  } catch (const parkloc::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return parkloc::kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return parkloc::kExitValidation;
  }
  return parkloc::kExitOk;
}
