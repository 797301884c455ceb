#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parkloc/core.hpp"

namespace parkloc {

inline constexpr std::string_view kSensorCsvHeader =
    "t,ax,ay,az,wx,wy,wz,ws_fl,ws_fr,ws_rl,ws_rr,delta_f,gear";
inline constexpr std::string_view kTruthCsvHeader = "t,X,Y,psi,vx,vy,wz";

/// 17 significant digits, enough for an exact round trip.
std::string format_double(double value);

void write_sensor_csv(std::ostream& out, const std::vector<SensorSample>& sensors);
void write_truth_csv(std::ostream& out, const std::vector<GroundTruthSample>& truth);
std::vector<SensorSample> read_sensor_csv(std::istream& in);
std::vector<GroundTruthSample> read_truth_csv(std::istream& in);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

/// Loads a sensor CSV and, when given, its sibling truth CSV. Validates the result.
ManeuverLog load_log(const std::filesystem::path& sensor_csv,
                     const std::optional<std::filesystem::path>& truth_csv);
/// Conventional sibling name: "<stem>_truth.csv" next to "<stem>.csv".
std::filesystem::path truth_path_for(const std::filesystem::path& sensor_csv);

}  // namespace parkloc
