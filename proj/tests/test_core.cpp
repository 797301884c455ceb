#include <random>
#include <sstream>

#include "doctest.h"

#include "parkloc/core.hpp"
#include "parkloc/log_io.hpp"

using namespace parkloc;

TEST_CASE("transfer_planar_velocity examples") {
  const Eigen::Vector2d a = transfer_planar_velocity({1.0, 0.0}, 0.0, {1.5, 0.0});
  CHECK(a.x() == 1.0);
  CHECK(a.y() == 0.0);
  const Eigen::Vector2d b = transfer_planar_velocity({0.0, 0.0}, 0.3, {1.5, 0.0});
  CHECK(b.x() == doctest::Approx(0.0));
  CHECK(b.y() == doctest::Approx(0.45).epsilon(1e-15));
  const Eigen::Vector2d c = transfer_planar_velocity({1.0, 0.2}, 0.5, {0.0, 0.4});
  CHECK(c.x() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(c.y() == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("transfer_planar_velocity round trip") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d v(u(rng), u(rng));
    const Eigen::Vector2d r(u(rng), u(rng));
    const double w = u(rng);
    const Eigen::Vector2d back = transfer_planar_velocity(transfer_planar_velocity(v, w, r), w, -r);
    CHECK((back - v).norm() <= 1e-12);
  }
}

TEST_CASE("driving_direction_sign") {
  CHECK(driving_direction_sign(0.5, 0.1) == 1);
  CHECK(driving_direction_sign(-0.5, 0.1) == -1);
  CHECK(driving_direction_sign(0.05, 0.1) == 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng);
    CHECK(driving_direction_sign(-v) == -driving_direction_sign(v));
  }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(3.0 * M_PI / 2.0) == doctest::Approx(-M_PI / 2.0));
  CHECK(wrap_angle(0.25) == 0.25);
}

TEST_CASE("VehicleParams validation names the field") {
  VehicleParams p{1600, 2600, 1.3, 1.6, 1.6, 120000, 140000, 1.5, 0.0};
  CHECK_NOTHROW(p.validate());
  CHECK(p.side_slip_gradient() == doctest::Approx(1600 * 1.3 / (140000 * 2.9)));
  p.mass = 0.0;
  try {
    p.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("vehicle.mass") != std::string::npos);
  }
}

TEST_CASE("AckermannDeviationMap is odd and zero at zero") {
  const AckermannDeviationMap m{-0.1};
  CHECK(m(0.0) == 0.0);
  CHECK(m(0.3) == -m(-0.3));
}

namespace {

ManeuverLog small_log() {
  ManeuverLog log;
  for (int i = 0; i < 5; ++i) {
    SensorSample s;
    s.t = 0.01 * i;
    s.accel = {0.1 * i, -0.2, -9.81};
    s.gyro = {0.0, 0.0, 0.123456789012345};
    s.ws_fl = s.ws_fr = s.ws_rl = s.ws_rr = 1.0 / 3.0;
    s.steering_front = 0.01;
    s.gear = Gear::kReverse;
    log.sensors.push_back(s);
  }
  return log;
}

}  // namespace

TEST_CASE("ManeuverLog validation") {
  ManeuverLog log = small_log();
  CHECK_NOTHROW(log.validate());
  log.sensors[2].t = log.sensors[1].t;
  CHECK_THROWS_AS(log.validate(), ValidationError);

  log = small_log();
  log.sensors[3].ws_rl = -0.1;
  CHECK_THROWS_AS(log.validate(), ValidationError);

  log = small_log();
  log.sensors[4].t += 0.005;  // 50% jitter
  CHECK_THROWS_AS(log.validate(), ValidationError);

  log = small_log();
  log.truth = std::vector<GroundTruthSample>{{10.0, 0, 0, 0, 0, 0, 0}, {10.01, 0, 0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(log.validate(), ValidationError);
}

TEST_CASE("sensor CSV round trip preserves values exactly") {
  const ManeuverLog log = small_log();
  std::stringstream ss;
  write_sensor_csv(ss, log.sensors);
  const std::string text = ss.str();
  CHECK(text.rfind(std::string(kSensorCsvHeader) + "\n", 0) == 0);
  const auto back = read_sensor_csv(ss);
  REQUIRE(back.size() == log.sensors.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].t == log.sensors[i].t);
    CHECK(back[i].accel == log.sensors[i].accel);
    CHECK(back[i].gyro == log.sensors[i].gyro);
    CHECK(back[i].ws_rr == log.sensors[i].ws_rr);
    CHECK(back[i].gear == Gear::kReverse);
  }
}

TEST_CASE("truth CSV round trip and malformed input") {
  std::vector<GroundTruthSample> truth{{0.0, 1.0 / 7.0, 2.0, 0.5, 1.0, 0.01, 0.2},
                                       {0.01, 1.1, 2.1, 0.51, 1.0, 0.01, 0.2}};
  std::stringstream ss;
  write_truth_csv(ss, truth);
  const auto back = read_truth_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].x == truth[0].x);

  std::stringstream bad("t,X,Y,psi,vx,vy,wz\n0,1,2,x,4,5,6\n");
  CHECK_THROWS_AS(read_truth_csv(bad), ValidationError);
  std::stringstream wrong_header("a,b\n");
  CHECK_THROWS_AS(read_truth_csv(wrong_header), ValidationError);
}

TEST_CASE("format_double keeps at least 9 significant digits") {
  CHECK(std::stod(format_double(0.123456789012)) == doctest::Approx(0.123456789012).epsilon(1e-11));
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("interpolate_truth") {
  std::vector<GroundTruthSample> truth{{0.0, 0.0, 0.0, 3.1, 1.0, 0.0, 0.0},
                                       {1.0, 1.0, 2.0, -3.1, 1.0, 0.0, 0.0}};
  const auto mid = interpolate_truth(truth, 0.5);
  CHECK(mid.x == doctest::Approx(0.5));
  CHECK(mid.y == doctest::Approx(1.0));
  // Heading interpolates across the +-pi seam, not through zero.
  CHECK(std::abs(mid.yaw) == doctest::Approx(M_PI).epsilon(1e-9));
  CHECK_THROWS_AS(interpolate_truth(truth, 1.5), ValidationError);
}
