#pragma once

// Subcommand implementations behind the parkloc CLI. Each command reads its
// inputs, writes outputs under an output directory and a JSON run manifest
// (config echo plus SHA-256 of every input and output file).

#include <filesystem>
#include <string>
#include <vector>

#include "parkloc/config.hpp"
#include "parkloc/disturbance.hpp"

namespace parkloc {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const fs::path& path);

/// Writes <out>/<command>.manifest.json and returns its path. `config_echo`
/// may be null for commands that take no config.
fs::path write_manifest(const fs::path& out_dir, const std::string& command,
                        const nlohmann::json& config_echo, const std::vector<fs::path>& inputs,
                        const std::vector<fs::path>& outputs);

struct SimulateOutput {
  fs::path sensor_csv;
  fs::path truth_csv;
  fs::path manifest;
};

/// Simulates the scenario (the config's own scenario when `scenario_file` is
/// empty) and writes <id>.csv, <id>_truth.csv and a manifest.
SimulateOutput cmd_simulate(const fs::path& scenario_file, const RunConfig& config,
                            const fs::path& out_dir, const std::string& id);

/// Both regression variants on one log with truth. Writes calibration.json and
/// calibration_<variant>_scatter.csv.
std::vector<fs::path> cmd_calibrate(const fs::path& log_csv, const RunConfig& config,
                                    const fs::path& out_dir);

/// Writes filter_<id>.csv (t,vx,vy,vz,qw,qx,qy,qz,X,Y,Z,P_0..P_9) and
/// innovations_<id>.csv.
std::vector<fs::path> cmd_filter(const fs::path& log_csv, const RunConfig& config,
                                 const fs::path& out_dir);

/// Writes disturbance.csv (phase,dX,dY,e) and disturbance.json {e_max, e_90}.
std::vector<fs::path> cmd_disturb(const CirclePerturbationSpec& spec, const RunConfig& config,
                                  const fs::path& out_dir);

/// Compares zero-slip against the configured lateral model on every log (or
/// every *.csv log in a directory). Writes comparison.json and per-run error series.
std::vector<fs::path> cmd_evaluate(const std::vector<fs::path>& logs, const RunConfig& config,
                                   const fs::path& out_dir);

/// Renders summary.md, comparison.md, comparison.csv and comparison.svg from a
/// stored comparison.json without recomputing anything.
std::vector<fs::path> cmd_report(const fs::path& comparison_json, const fs::path& out_dir);

}  // namespace parkloc
