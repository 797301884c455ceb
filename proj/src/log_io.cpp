#include "parkloc/log_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace parkloc {

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t row, std::size_t col) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError(
        fmt::format("csv: row {}, column {}: cannot parse '{}' as number", row, col + 1, field));
  }
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Reads the header and yields the data rows split into fields.
template <typename RowFn>
void read_csv(std::istream& in, std::string_view expected_header, std::size_t columns,
              RowFn&& on_row) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != expected_header) {
    throw ValidationError(fmt::format("csv: expected header '{}'", expected_header));
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != columns) {
      throw ValidationError(
          fmt::format("csv: row {} has {} columns, expected {}", row, fields.size(), columns));
    }
    on_row(fields, row);
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) {
    throw ValidationError("format_double: conversion failed");
  }
  return std::string(buf, ptr);
}

void write_sensor_csv(std::ostream& out, const std::vector<SensorSample>& sensors) {
  out << kSensorCsvHeader << '\n';
  for (const auto& s : sensors) {
    out << format_double(s.t) << ',' << format_double(s.accel.x()) << ','
        << format_double(s.accel.y()) << ',' << format_double(s.accel.z()) << ','
        << format_double(s.gyro.x()) << ',' << format_double(s.gyro.y()) << ','
        << format_double(s.gyro.z()) << ',' << format_double(s.ws_fl) << ','
        << format_double(s.ws_fr) << ',' << format_double(s.ws_rl) << ','
        << format_double(s.ws_rr) << ',' << format_double(s.steering_front) << ','
        << gear_to_char(s.gear) << '\n';
  }
}

void write_truth_csv(std::ostream& out, const std::vector<GroundTruthSample>& truth) {
  out << kTruthCsvHeader << '\n';
  for (const auto& g : truth) {
    out << format_double(g.t) << ',' << format_double(g.x) << ',' << format_double(g.y) << ','
        << format_double(g.yaw) << ',' << format_double(g.vx) << ',' << format_double(g.vy) << ','
        << format_double(g.yaw_rate) << '\n';
  }
}

std::vector<SensorSample> read_sensor_csv(std::istream& in) {
  std::vector<SensorSample> out;
  read_csv(in, kSensorCsvHeader, 13, [&](const std::vector<std::string_view>& f, std::size_t row) {
    SensorSample s;
    s.t = parse_double(f[0], row, 0);
    s.accel = {parse_double(f[1], row, 1), parse_double(f[2], row, 2), parse_double(f[3], row, 3)};
    s.gyro = {parse_double(f[4], row, 4), parse_double(f[5], row, 5), parse_double(f[6], row, 6)};
    s.ws_fl = parse_double(f[7], row, 7);
    s.ws_fr = parse_double(f[8], row, 8);
    s.ws_rl = parse_double(f[9], row, 9);
    s.ws_rr = parse_double(f[10], row, 10);
    s.steering_front = parse_double(f[11], row, 11);
    if (f[12].size() != 1) {
      throw ValidationError(fmt::format("csv: row {}: gear must be one of F,R,N", row));
    }
    s.gear = gear_from_char(f[12][0]);
    out.push_back(s);
  });
  return out;
}

std::vector<GroundTruthSample> read_truth_csv(std::istream& in) {
  std::vector<GroundTruthSample> out;
  read_csv(in, kTruthCsvHeader, 7, [&](const std::vector<std::string_view>& f, std::size_t row) {
    GroundTruthSample g;
    g.t = parse_double(f[0], row, 0);
    g.x = parse_double(f[1], row, 1);
    g.y = parse_double(f[2], row, 2);
    g.yaw = parse_double(f[3], row, 3);
    g.vx = parse_double(f[4], row, 4);
    g.vy = parse_double(f[5], row, 5);
    g.yaw_rate = parse_double(f[6], row, 6);
    out.push_back(g);
  });
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << content;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path truth_path_for(const std::filesystem::path& sensor_csv) {
  auto p = sensor_csv;
  p.replace_filename(sensor_csv.stem().string() + "_truth.csv");
  return p;
}

ManeuverLog load_log(const std::filesystem::path& sensor_csv,
                     const std::optional<std::filesystem::path>& truth_csv) {
  ManeuverLog log;
  {
    std::istringstream in(read_text_file(sensor_csv));
    log.sensors = read_sensor_csv(in);
  }
  if (truth_csv) {
    std::istringstream in(read_text_file(*truth_csv));
    log.truth = read_truth_csv(in);
  }
  log.metadata.id = sensor_csv.stem().string();
  if (log.sensors.size() >= 2) {
    const double span = log.sensors.back().t - log.sensors.front().t;
    log.metadata.sample_rate = static_cast<double>(log.sensors.size() - 1) / span;
  }
  log.validate();
  return log;
}

}  // namespace parkloc
