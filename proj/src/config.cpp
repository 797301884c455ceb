#include "parkloc/config.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "parkloc/log_io.hpp"

namespace parkloc {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects whatever was not consumed.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(fmt::format("{}: expected an object", path_));
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  double number(const std::string& key, double fallback) {
    return has(key) ? required_number(key) : fallback;
  }

  double required_number(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_number()) throw ValidationError(fmt::format("{}: expected a number", name(key)));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(fmt::format("{}: must be finite", name(key)));
    return d;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = fetch(key);
    if (!v.is_boolean()) throw ValidationError(fmt::format("{}: expected true or false", name(key)));
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = fetch(key);
    if (!v.is_string()) throw ValidationError(fmt::format("{}: expected a string", name(key)));
    return v.get<std::string>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = fetch(key);
    if (!v.is_number_unsigned()) {
      throw ValidationError(fmt::format("{}: expected a non-negative integer", name(key)));
    }
    return v.get<std::uint64_t>();
  }

  const json& child(const std::string& key) { return fetch(key); }

  std::string name(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!used_.count(key)) throw ValidationError(fmt::format("{}: unknown key", name(key)));
    }
  }

 private:
  const json& fetch(const std::string& key) {
    if (!has(key)) throw ValidationError(fmt::format("{}: missing required key", name(key)));
    used_.insert(key);
    return doc_.at(key);
  }

  const json& doc_;
  std::string path_;
  std::set<std::string> used_;
};

SimModelKind sim_model_from_string(const std::string& name, const std::string& key) {
  if (name == "kinematic") return SimModelKind::kKinematic;
  if (name == "two-track") return SimModelKind::kTwoTrack;
  throw ValidationError(fmt::format("{}: expected 'kinematic' or 'two-track'", key));
}

std::string to_string(SimModelKind kind) {
  return kind == SimModelKind::kKinematic ? "kinematic" : "two-track";
}

}  // namespace

LateralModelParams RunConfig::lateral_params() const {
  return {x_rho_forward, x_rho_reverse, vehicle.wheelbase()};
}

FilterConfig RunConfig::filter_config() const {
  FilterConfig f = filter;
  f.model = lateral_kind;
  f.lateral = lateral_params();
  f.imu_lever_x = vehicle.imu_lever_x;
  f.imu_lever_y = vehicle.imu_lever_y;
  return f;
}

TwoTrackModel RunConfig::two_track_model() const { return {vehicle, tire, deviation}; }

void RunConfig::validate() const {
  vehicle.validate();
  tire.validate();
  if (!std::isfinite(deviation.coefficient) || deviation.coefficient <= -1.0) {
    throw ValidationError("tire.ackermann_deviation: must be finite and > -1");
  }
  filter_config().validate();
  noise.validate();
  gates.validate();
  if (!scenario.segments.empty()) scenario.validate();
}

Scenario parse_scenario(const json& doc, const std::string& path) {
  Section s(doc, path);
  Scenario sc;
  sc.sample_rate = s.number("sample_rate", sc.sample_rate);
  sc.sim_dt = s.number("sim_dt", sc.sim_dt);
  sc.ramp_time = s.number("ramp_time", sc.ramp_time);
  sc.model = sim_model_from_string(s.string("model", to_string(sc.model)), s.name("model"));
  sc.x_rho_forward = s.number("x_rho_forward", sc.x_rho_forward);
  sc.x_rho_reverse = s.number("x_rho_reverse", sc.x_rho_reverse);
  sc.x0 = s.number("x0", sc.x0);
  sc.y0 = s.number("y0", sc.y0);
  sc.yaw0 = s.number("yaw0", sc.yaw0);
  if (s.has("segments")) {
    const json& segs = s.child("segments");
    if (!segs.is_array()) throw ValidationError(s.name("segments") + ": expected an array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      Section g(segs[i], fmt::format("{}.segments[{}]", path, i));
      ScenarioSegment seg;
      seg.duration = g.required_number("duration");
      seg.vx = g.required_number("vx");
      if (g.has("steering")) seg.steering = g.required_number("steering");
      if (g.has("yaw_rate")) seg.yaw_rate = g.required_number("yaw_rate");
      g.finish();
      sc.segments.push_back(seg);
    }
  }
  s.finish();
  if (!sc.segments.empty()) {
    try {
      sc.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: {}", path, e.what()));
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_scenario(doc);
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("config: {}", e.what()));
  }
  Section root(doc, "config");
  RunConfig c;

  {
    Section v(root.child("vehicle"), "vehicle");
    c.vehicle.mass = v.required_number("mass");
    c.vehicle.yaw_inertia = v.required_number("yaw_inertia");
    c.vehicle.lever_front = v.required_number("lever_front");
    c.vehicle.lever_rear = v.required_number("lever_rear");
    c.vehicle.track_front = v.required_number("track_front");
    c.vehicle.stiffness_front = v.required_number("stiffness_front");
    c.vehicle.stiffness_rear = v.required_number("stiffness_rear");
    c.vehicle.imu_lever_x = v.number("imu_lever_x", 0.0);
    c.vehicle.imu_lever_y = v.number("imu_lever_y", 0.0);
    v.finish();
  }
  if (root.has("tire")) {
    Section t(root.child("tire"), "tire");
    c.tire.unloaded_radius = t.number("unloaded_radius", c.tire.unloaded_radius);
    c.tire.camber_stiffness_ratio = t.number("camber_stiffness_ratio", c.tire.camber_stiffness_ratio);
    c.tire.turn_slip_enabled = t.boolean("turn_slip_enabled", c.tire.turn_slip_enabled);
    c.deviation.coefficient = t.number("ackermann_deviation", c.deviation.coefficient);
    t.finish();
  }
  if (root.has("lateral_model")) {
    Section l(root.child("lateral_model"), "lateral_model");
    const std::string kind = l.string("kind", std::string(to_string(c.lateral_kind)));
    try {
      c.lateral_kind = lateral_model_from_string(kind);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("lateral_model.kind: {}", e.what()));
    }
    c.x_rho_forward = l.number("x_rho_forward", c.x_rho_forward);
    c.x_rho_reverse = l.number("x_rho_reverse", c.x_rho_reverse);
    l.finish();
  }
  if (root.has("filter")) {
    Section f(root.child("filter"), "filter");
    FilterConfig& fc = c.filter;
    fc.accel_noise_density = f.number("accel_noise_density", fc.accel_noise_density);
    fc.gyro_noise_density = f.number("gyro_noise_density", fc.gyro_noise_density);
    fc.sigma_vx = f.number("sigma_vx", fc.sigma_vx);
    fc.sigma_vy = f.number("sigma_vy", fc.sigma_vy);
    fc.sigma_vz = f.number("sigma_vz", fc.sigma_vz);
    fc.init_sigma_velocity = f.number("init_sigma_velocity", fc.init_sigma_velocity);
    fc.init_sigma_attitude = f.number("init_sigma_attitude", fc.init_sigma_attitude);
    fc.init_sigma_position = f.number("init_sigma_position", fc.init_sigma_position);
    fc.gate_chi2 = f.number("gate_chi2", fc.gate_chi2);
    f.finish();
  }
  if (root.has("noise")) {
    Section n(root.child("noise"), "noise");
    SensorNoise& sn = c.noise;
    sn.gyro_bias = n.number("gyro_bias", sn.gyro_bias);
    sn.gyro_sigma = n.number("gyro_sigma", sn.gyro_sigma);
    sn.accel_bias = n.number("accel_bias", sn.accel_bias);
    sn.accel_sigma = n.number("accel_sigma", sn.accel_sigma);
    sn.encoder_quantization = n.number("encoder_quantization", sn.encoder_quantization);
    sn.steering_offset = n.number("steering_offset", sn.steering_offset);
    sn.seed = n.unsigned_integer("seed", sn.seed);
    n.finish();
  }
  if (root.has("scenario")) c.scenario = parse_scenario(root.child("scenario"), "scenario");
  if (root.has("calibration")) {
    Section g(root.child("calibration"), "calibration");
    c.gates.min_speed = g.number("min_speed", c.gates.min_speed);
    c.gates.min_yaw_rate = g.number("min_yaw_rate", c.gates.min_yaw_rate);
    c.gates.max_lateral_accel = g.number("max_lateral_accel", c.gates.max_lateral_accel);
    g.finish();
  }
  if (root.has("evaluation")) {
    Section e(root.child("evaluation"), "evaluation");
    const std::string r = e.string("reduction", to_string(c.reduction));
    try {
      c.reduction = error_reduction_from_string(r);
    } catch (const ValidationError& err) {
      throw ValidationError(fmt::format("evaluation.reduction: {}", err.what()));
    }
    e.finish();
  }
  if (root.has("paths")) {
    Section p(root.child("paths"), "paths");
    c.out_dir = p.string("out", c.out_dir.string());
    p.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path));
}

json scenario_to_json(const Scenario& sc) {
  json segs = json::array();
  for (const auto& s : sc.segments) {
    json j = {{"duration", s.duration}, {"vx", s.vx}};
    if (s.steering) j["steering"] = *s.steering;
    if (s.yaw_rate) j["yaw_rate"] = *s.yaw_rate;
    segs.push_back(j);
  }
  return {{"sample_rate", sc.sample_rate}, {"sim_dt", sc.sim_dt},
          {"ramp_time", sc.ramp_time},     {"model", to_string(sc.model)},
          {"x_rho_forward", sc.x_rho_forward}, {"x_rho_reverse", sc.x_rho_reverse},
          {"x0", sc.x0}, {"y0", sc.y0}, {"yaw0", sc.yaw0}, {"segments", segs}};
}

json run_config_to_json(const RunConfig& c) {
  const VehicleParams& v = c.vehicle;
  const FilterConfig& f = c.filter;
  const SensorNoise& n = c.noise;
  return {
      {"vehicle",
       {{"mass", v.mass}, {"yaw_inertia", v.yaw_inertia}, {"lever_front", v.lever_front},
        {"lever_rear", v.lever_rear}, {"track_front", v.track_front},
        {"stiffness_front", v.stiffness_front}, {"stiffness_rear", v.stiffness_rear},
        {"imu_lever_x", v.imu_lever_x}, {"imu_lever_y", v.imu_lever_y}}},
      {"tire",
       {{"unloaded_radius", c.tire.unloaded_radius},
        {"camber_stiffness_ratio", c.tire.camber_stiffness_ratio},
        {"turn_slip_enabled", c.tire.turn_slip_enabled},
        {"ackermann_deviation", c.deviation.coefficient}}},
      {"lateral_model",
       {{"kind", std::string(to_string(c.lateral_kind))}, {"x_rho_forward", c.x_rho_forward},
        {"x_rho_reverse", c.x_rho_reverse}}},
      {"filter",
       {{"accel_noise_density", f.accel_noise_density}, {"gyro_noise_density", f.gyro_noise_density},
        {"sigma_vx", f.sigma_vx}, {"sigma_vy", f.sigma_vy}, {"sigma_vz", f.sigma_vz},
        {"init_sigma_velocity", f.init_sigma_velocity},
        {"init_sigma_attitude", f.init_sigma_attitude},
        {"init_sigma_position", f.init_sigma_position}, {"gate_chi2", f.gate_chi2}}},
      {"noise",
       {{"gyro_bias", n.gyro_bias}, {"gyro_sigma", n.gyro_sigma}, {"accel_bias", n.accel_bias},
        {"accel_sigma", n.accel_sigma}, {"encoder_quantization", n.encoder_quantization},
        {"steering_offset", n.steering_offset}, {"seed", n.seed}}},
      {"scenario", scenario_to_json(c.scenario)},
      {"calibration",
       {{"min_speed", c.gates.min_speed}, {"min_yaw_rate", c.gates.min_yaw_rate},
        {"max_lateral_accel", c.gates.max_lateral_accel}}},
      {"evaluation", {{"reduction", to_string(c.reduction)}}},
      {"paths", {{"out", c.out_dir.generic_string()}}},
  };
}

}  // namespace parkloc
