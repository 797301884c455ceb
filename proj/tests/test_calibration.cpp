#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"

#include "parkloc/calibration.hpp"
#include "parkloc/lateral_models.hpp"
#include "parkloc/vehicle_sim.hpp"
#include "test_support.hpp"

using namespace parkloc;

namespace {

constexpr double kWheelbase = 2.9;

// Log whose truth follows the given v_x profile; other channels are irrelevant.
ManeuverLog speed_profile_log(const std::vector<double>& vx, double yaw_rate = 0.2) {
  ManeuverLog log;
  std::vector<GroundTruthSample> truth;
  for (std::size_t i = 0; i < vx.size(); ++i) {
    SensorSample s;
    s.t = 0.01 * static_cast<double>(i);
    log.sensors.push_back(s);
    GroundTruthSample g;
    g.t = s.t;
    g.vx = vx[i];
    g.yaw_rate = yaw_rate;
    truth.push_back(g);
  }
  log.truth = truth;
  return log;
}

std::vector<CalibrationSample> linear_samples(double slope, double sigma, int n,
                                              std::mt19937_64& rng, int direction = 1) {
  std::uniform_real_distribution<double> w(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<CalibrationSample> out;
  for (int i = 0; i < n; ++i) {
    CalibrationSample s;
    s.yaw_rate = w(rng);
    s.lateral_velocity = slope * s.yaw_rate + (sigma > 0.0 ? noise(rng) : 0.0);
    s.direction = direction;
    out.push_back(s);
  }
  return out;
}

double rms_yaw_rate(const std::vector<CalibrationSample>& samples) {
  double s = 0.0;
  for (const auto& c : samples) s += c.yaw_rate * c.yaw_rate;
  return std::sqrt(s / static_cast<double>(samples.size()));
}

}  // namespace

TEST_CASE("segment_by_direction") {
  const auto fwd = segment_by_direction(speed_profile_log(std::vector<double>(100, 1.0)));
  REQUIRE(fwd.size() == 1);
  CHECK(fwd[0].direction == 1);
  CHECK(fwd[0].begin == 0);
  CHECK(fwd[0].end == 100);

  std::vector<double> profile(50, 1.0);
  profile.insert(profile.end(), 20, 0.0);
  profile.insert(profile.end(), 50, -1.0);
  const auto two = segment_by_direction(speed_profile_log(profile));
  REQUIRE(two.size() == 2);
  CHECK(two[0].direction == 1);
  CHECK(two[0].end == 50);
  CHECK(two[1].direction == -1);
  CHECK(two[1].begin == 70);

  CHECK(segment_by_direction(speed_profile_log(std::vector<double>(30, 0.05))).empty());

  ManeuverLog no_truth;
  no_truth.sensors.resize(3);
  CHECK_THROWS_AS(segment_by_direction(no_truth), ValidationError);
}

TEST_CASE("gate_samples") {
  const GateThresholds gates;
  {
    const auto log = speed_profile_log({0.05, 0.05, 0.05});
    CHECK(gate_samples(log, {0, 3, 1}, gates, CalibrationVariant::kOmegaVy).empty());
  }
  {
    const auto log = speed_profile_log({1.0, 1.0, 1.0}, 0.2);  // a_y = 0.2
    GateCounts counts;
    const auto kept = gate_samples(log, {0, 3, 1}, gates, CalibrationVariant::kOmegaVy, &counts);
    CHECK(kept.size() == 3);
    CHECK(counts.considered == 3);
    CHECK(kept[0].beta == 0.0);
    CHECK(kept[0].direction == 1);
  }
  {
    const auto log = speed_profile_log({1.0, 1.0}, 0.01);  // |omega| below the gate
    CHECK(gate_samples(log, {0, 2, 1}, gates, CalibrationVariant::kOmegaVy).empty());
    CHECK(gate_samples(log, {0, 2, 1}, gates, CalibrationVariant::kDeltaBeta).size() == 2);
  }
  {
    const auto log = speed_profile_log({3.0, 3.0}, 0.5);  // a_y = 1.5
    CHECK(gate_samples(log, {0, 2, 1}, gates, CalibrationVariant::kOmegaVy).empty());
  }
  const auto log = speed_profile_log({1.0});
  CHECK(gate_samples(log, {0, 0, 1}, gates, CalibrationVariant::kOmegaVy).empty());
  CHECK_THROWS_AS(gate_samples(log, {0, 5, 1}, gates, CalibrationVariant::kOmegaVy),
                  ValidationError);
  CHECK_THROWS_AS(gate_samples(log, {0, 1, 1}, GateThresholds{0.0, 0.05, 1.0},
                               CalibrationVariant::kOmegaVy),
                  ValidationError);
}

TEST_CASE("estimate_omega_vy: noisy recovery within three standard errors") {
  std::mt19937_64 rng(1234);
  const double sigma = 0.005;
  const auto samples = linear_samples(0.15, sigma, 10000, rng);
  const auto r = estimate_omega_vy(samples, kWheelbase);
  REQUIRE(r.forward.has_value());
  CHECK_FALSE(r.reverse.has_value());
  const double bound = 3.0 * sigma / (std::sqrt(10000.0) * rms_yaw_rate(samples));
  CHECK(std::abs(r.forward->slope - 0.15) <= bound);
  CHECK(std::abs(r.forward->slope - 0.15) <= 0.003);
  CHECK(r.forward->x_rho == -r.forward->slope);
  CHECK(r.forward->rms == doctest::Approx(sigma).epsilon(0.05));
  // The reported standard error matches the analytic sigma / (sqrt(N) rms(omega)).
  CHECK(r.forward->stderr_slope ==
        doctest::Approx(sigma / (100.0 * rms_yaw_rate(samples))).epsilon(0.05));
}

TEST_CASE("estimate_omega_vy: noise-free recovery and parameter consistency") {
  std::mt19937_64 rng(5);
  auto samples = linear_samples(0.21, 0.0, 200, rng, -1);
  const auto fwd = linear_samples(-0.05, 0.0, 200, rng, 1);
  samples.insert(samples.end(), fwd.begin(), fwd.end());
  const auto r = estimate_omega_vy(samples, kWheelbase);
  REQUIRE(r.forward);
  REQUIRE(r.reverse);
  CHECK(std::abs(r.reverse->slope - 0.21) <= 1e-12);
  CHECK(std::abs(r.forward->slope + 0.05) <= 1e-12);
  for (const auto& e : {*r.forward, *r.reverse}) {
    CHECK(std::abs(e.k_rho - e.x_rho / (kWheelbase - e.x_rho)) <= 1e-12);
    CHECK(std::abs(x_from_k(e.k_rho, kWheelbase) - e.x_rho) <= 1e-12);
  }
}

TEST_CASE("estimate_omega_vy: scale equivariance") {
  std::mt19937_64 rng(17);
  const auto samples = linear_samples(0.15, 0.005, 500, rng);
  auto scaled = samples;
  for (auto& s : scaled) {
    s.yaw_rate *= 3.7;
    s.lateral_velocity *= 3.7;
  }
  CHECK(estimate_omega_vy(scaled, kWheelbase).forward->slope ==
        doctest::Approx(estimate_omega_vy(samples, kWheelbase).forward->slope).epsilon(1e-12));
}

TEST_CASE("estimate_omega_vy: error shrinks as 1/sqrt(N)") {
  std::mt19937_64 rng(99);
  auto rms_error = [&](int n) {
    double acc = 0.0;
    constexpr int kTrials = 200;
    for (int t = 0; t < kTrials; ++t) {
      const double e = estimate_omega_vy(linear_samples(0.15, 0.005, n, rng), kWheelbase)
                           .forward->slope -
                       0.15;
      acc += e * e;
    }
    return std::sqrt(acc / kTrials);
  };
  const double e2 = rms_error(100), e3 = rms_error(1000), e4 = rms_error(10000);
  CHECK(e2 / e3 == doctest::Approx(std::sqrt(10.0)).epsilon(0.25));
  CHECK(e3 / e4 == doctest::Approx(std::sqrt(10.0)).epsilon(0.25));
}

TEST_CASE("estimators: error paths") {
  std::mt19937_64 rng(3);
  CHECK_THROWS_AS(estimate_omega_vy(linear_samples(0.1, 0.0, 49, rng), kWheelbase),
                  InsufficientSamplesError);
  CHECK_THROWS_AS(estimate_omega_vy({}, kWheelbase), InsufficientSamplesError);
  auto flat = linear_samples(0.1, 0.0, 60, rng);
  for (auto& s : flat) s.yaw_rate = 0.0;
  CHECK_THROWS_AS(estimate_omega_vy(flat, kWheelbase), RankDeficientError);
  auto bad = linear_samples(0.1, 0.0, 60, rng);
  bad[0].direction = 0;
  CHECK_THROWS_AS(estimate_omega_vy(bad, kWheelbase), ValidationError);
  CHECK_THROWS_AS(estimate_omega_vy(linear_samples(0.1, 0.0, 60, rng), 0.0), ValidationError);
}

TEST_CASE("estimate_delta_beta: noise-free steady-state sweep recovers k") {
  const double x_fwd = 0.05, x_rev = -0.21;
  std::vector<CalibrationSample> samples;
  for (int dir : {1, -1}) {
    const double x = dir > 0 ? x_fwd : x_rev;
    const double vx = 0.8 * dir;
    for (int i = -40; i <= 40; ++i) {
      if (i == 0) continue;
      const double tan_delta = 0.5 * i / 40.0;
      const double w = vx * tan_delta / (kWheelbase - x);
      CalibrationSample s;
      s.tan_steering = tan_delta;
      s.yaw_rate = w;
      s.lateral_velocity = vy_omega_model(w, x);
      s.beta = s.lateral_velocity / std::abs(vx);  // small-angle ratio, exact in the model
      s.direction = dir;
      samples.push_back(s);
    }
  }
  const auto r = estimate_delta_beta(samples, kWheelbase);
  REQUIRE(r.forward);
  REQUIRE(r.reverse);
  CHECK(std::abs(r.forward->k_rho - k_from_x(x_fwd, kWheelbase)) <= 1e-10);
  CHECK(std::abs(r.reverse->k_rho - k_from_x(x_rev, kWheelbase)) <= 1e-10);
  CHECK(std::abs(r.reverse->x_rho - x_rev) <= 1e-10);
  // The omega-vy estimator agrees on the same samples.
  const auto w = estimate_omega_vy(samples, kWheelbase);
  CHECK(std::abs(w.reverse->x_rho - x_rev) <= 1e-12);
}

TEST_CASE("steering offset biases delta-beta more than omega-vy") {
  Scenario sc;
  sc.x_rho_forward = 0.05;
  sc.x_rho_reverse = -0.21;
  sc.ramp_time = 0.0;
  for (double vx : {0.8, -0.8}) {
    for (double w : {0.3, -0.3, 0.15, -0.15, 0.45, -0.45}) {
      sc.segments.push_back({3.0, vx, std::nullopt, w});
    }
  }
  const auto model = parkloc::testing::test_two_track();
  SensorNoise noise;
  noise.steering_offset = 0.5 * M_PI / 180.0;
  const ManeuverLog log = synthesize_sensors(simulate_scenario(sc, model), model.vehicle, noise);
  const double L = model.vehicle.wheelbase();
  const auto wv = calibrate_log(log, {}, CalibrationVariant::kOmegaVy, L);
  const auto db = calibrate_log(log, {}, CalibrationVariant::kDeltaBeta, L);
  for (int dir : {1, -1}) {
    const double truth = dir > 0 ? 0.05 : -0.21;
    const double err_wv = std::abs(wv.for_direction(dir)->x_rho - truth);
    const double err_db = std::abs(db.for_direction(dir)->x_rho - truth);
    CHECK(err_db >= err_wv);
    CHECK(err_wv < 1e-6);
  }
  CHECK(wv.rejected_fraction >= 0.0);
  CHECK(wv.rejected_fraction < 1.0);
}

TEST_CASE("calibration report and scatter CSV") {
  std::mt19937_64 rng(8);
  const auto samples = linear_samples(0.15, 0.0, 60, rng);
  const auto r = estimate_omega_vy(samples, kWheelbase);
  const auto doc = nlohmann::json::parse(calibration_report_json({r}));
  REQUIRE(doc.is_array());
  CHECK(doc[0]["variant"] == "omega-vy");
  CHECK(doc[0]["reverse"].is_null());
  CHECK(doc[0]["forward"]["n"] == 60);
  for (const char* key : {"x_rho", "k_rho", "stderr", "n", "rms"}) {
    CHECK(doc[0]["forward"].contains(key));
  }
  const std::string csv = calibration_scatter_csv(samples, CalibrationVariant::kOmegaVy);
  CHECK(csv.rfind("x,y,direction\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 61);
}
