#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "parkloc/disturbance.hpp"
#include "parkloc/evaluation.hpp"
#include "parkloc/strapdown_ekf.hpp"
#include "parkloc/vehicle_sim.hpp"
#include "test_support.hpp"

using namespace parkloc;

namespace {

NavVector random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NavVector x;
  for (int i = 0; i < kNavStateDim; ++i) x[i] = 2.0 * u(rng);
  x.segment<4>(3).normalize();
  return x;
}

ImuReading random_imu(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {{2.0 * u(rng), 2.0 * u(rng), -9.81 + u(rng)}, {0.3 * u(rng), 0.3 * u(rng), u(rng)}};
}

// Max over entries of |a - b| / max(|b|, 1).
double max_relative_error(const NavMatrix& a, const NavMatrix& b) {
  return ((a - b).array().abs() / b.array().abs().max(1.0)).maxCoeff();
}

NavMatrix central_difference_jacobian(const NavVector& x, const ImuReading& imu, double dt) {
  constexpr double h = 1e-6;
  NavMatrix j;
  for (int k = 0; k < kNavStateDim; ++k) {
    NavVector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (mechanize(xp, imu, dt) - mechanize(xm, imu, dt)) / (2.0 * h);
  }
  return j;
}

bool symmetric_positive_definite(const NavMatrix& p) {
  if ((p - p.transpose()).norm() >= 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<NavMatrix> es(p);
  return es.eigenvalues().minCoeff() > 0.0;
}

FilterConfig config_for(LateralModelKind kind, double x_rho_forward, double x_rho_reverse) {
  const VehicleParams p = parkloc::testing::test_vehicle();
  FilterConfig c;
  c.model = kind;
  c.lateral = {x_rho_forward, x_rho_reverse, p.wheelbase()};
  c.imu_lever_x = p.imu_lever_x;
  return c;
}

ManeuverLog circle_log(double vx, double yaw_rate, double duration, double x_rho) {
  Scenario sc;
  sc.x_rho_forward = x_rho;
  sc.x_rho_reverse = x_rho;
  sc.segments = {{duration, vx, std::nullopt, yaw_rate}};
  const auto model = parkloc::testing::test_two_track();
  return synthesize_sensors(simulate_scenario(sc, model), model.vehicle, {});
}

}  // namespace

TEST_CASE("mechanize: stationary and level is a fixed point") {
  NavState s;
  const NavState next = mechanize(s, ImuReading{{0.0, 0.0, -9.81}, {0.0, 0.0, 0.0}}, 0.01);
  CHECK(next.velocity.norm() == 0.0);
  CHECK(next.position.norm() == 0.0);
  CHECK(next.attitude.w() == 1.0);
}

TEST_CASE("mechanize: centripetal balance on a steady circle") {
  NavState s;
  s.velocity = {1.0, 0.0, 0.0};
  const NavState next = mechanize(s, ImuReading{{0.0, 0.5, -9.81}, {0.0, 0.0, 0.5}}, 0.01);
  CHECK((next.velocity - s.velocity).norm() < 1e-15);
}

TEST_CASE("mechanize: pure yaw matches the quaternion exponential") {
  NavState s;
  const ImuReading imu{{0.0, 0.0, -9.81}, {0.0, 0.0, M_PI / 2.0}};
  for (int i = 0; i < 100; ++i) s = mechanize(s, imu, 0.01);
  const Eigen::Quaterniond oracle(Eigen::AngleAxisd(M_PI / 2.0, Eigen::Vector3d::UnitZ()));
  CHECK(std::abs(s.yaw() - M_PI / 2.0) < 1e-9);
  CHECK(s.attitude.angularDistance(oracle) < 1e-9);
}

TEST_CASE("mechanize: dt = 0 leaves the state unchanged") {
  std::mt19937_64 rng(1);
  const NavVector x = random_state(rng);
  CHECK(mechanize(x, random_imu(rng), 0.0) == x);
  CHECK(mechanize_jacobian(x, random_imu(rng), 0.0) == NavMatrix::Identity());
}

TEST_CASE("mechanize_jacobian matches central differences") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const NavVector x = random_state(rng);
    const ImuReading imu = random_imu(rng);
    const double dt = 0.01;
    worst = std::max(worst, max_relative_error(mechanize_jacobian(x, imu, dt),
                                               central_difference_jacobian(x, imu, dt)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("rotation helpers agree with Eigen") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const NavVector x = random_state(rng);
    const Eigen::Quaterniond q(x[3], x[4], x[5], x[6]);
    CHECK((rotation_matrix(q) - q.toRotationMatrix()).norm() < 1e-12);
    const Eigen::Quaterniond p = Eigen::Quaterniond::UnitRandom();
    const Eigen::Quaterniond pq = p * q;
    const Eigen::Vector4d qv(q.w(), q.x(), q.y(), q.z());
    const Eigen::Vector4d pv(p.w(), p.x(), p.y(), p.z());
    const Eigen::Vector4d expected(pq.w(), pq.x(), pq.y(), pq.z());
    CHECK((quat_left_matrix(p) * qv - expected).norm() < 1e-12);
    CHECK((quat_right_matrix(q) * pv - expected).norm() < 1e-12);
  }
}

TEST_CASE("quaternion norm stays at one over many random steps") {
  std::mt19937_64 rng(8);
  NavVector x = random_state(rng);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    x = mechanize(x, random_imu(rng), 0.01);
    worst = std::max(worst, std::abs(x.segment<4>(3).norm() - 1.0));
    if (i % 1000 == 0) x.segment<3>(0).setZero();  // keep velocity bounded
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("predict: dt = 0 is a no-op and the covariance never shrinks") {
  std::mt19937_64 rng(12);
  FilterConfig cfg;
  cfg.accel_noise_density = 1e-12;
  cfg.gyro_noise_density = 1e-12;
  StrapdownEkf ekf(cfg, NavState{});
  const NavMatrix p0 = ekf.covariance();
  ekf.predict(random_imu(rng), 0.0);
  CHECK(ekf.covariance() == p0);
  CHECK(ekf.state().velocity.norm() == 0.0);
  for (int i = 0; i < 1000; ++i) {
    const double before = ekf.covariance().trace();
    ekf.predict(random_imu(rng), 0.01);
    CHECK(ekf.covariance().trace() >= before);
    REQUIRE(symmetric_positive_definite(ekf.covariance()));
  }
  CHECK_THROWS_AS(ekf.predict(random_imu(rng), -0.01), ValidationError);
}

TEST_CASE("velocity pseudo-measurements") {
  SensorSample s;
  s.gyro = {0.0, 0.0, 0.3};
  s.ws_rl = s.ws_rr = 1.0;
  s.gear = Gear::kReverse;
  FilterConfig cfg = config_for(LateralModelKind::kOmegaVy, 0.0, -0.21);
  cfg.imu_lever_x = 1.5;
  StrapdownEkf ekf(cfg, NavState{});
  const auto z = ekf.velocity_measurements(s);
  REQUIRE(z.has_value());
  CHECK(z->x() == -1.0);
  CHECK(z->y() == doctest::Approx(1.71 * 0.3).epsilon(1e-14));
  CHECK(z->y() == doctest::Approx(0.513).epsilon(1e-12));

  StrapdownEkf zero_slip(config_for(LateralModelKind::kZeroSlip, 0.0, -0.21), NavState{});
  CHECK(zero_slip.velocity_measurements(s)->y() == doctest::Approx(1.5 * 0.3).epsilon(1e-14));

  s.gear = Gear::kNeutral;
  CHECK_FALSE(ekf.velocity_measurements(s).has_value());
  const auto records = ekf.measure_velocity(s);
  REQUIRE(records.size() == 1);
  CHECK(records[0].channel == VelocityChannel::kVz);
}

TEST_CASE("update: zero innovation keeps the state and shrinks the covariance") {
  NavState init;
  init.velocity = {1.0, 0.2, 0.0};
  StrapdownEkf ekf(FilterConfig{}, init);
  const NavMatrix p0 = ekf.covariance();
  const auto rec = ekf.update_velocity(VelocityChannel::kVx, 1.0, 0.03, 0.0);
  CHECK(rec.accepted);
  CHECK(rec.innovation == 0.0);
  CHECK(ekf.state().velocity == init.velocity);
  CHECK(ekf.covariance()(0, 0) < p0(0, 0));
  CHECK(ekf.covariance().trace() < p0.trace());
  CHECK(symmetric_positive_definite(ekf.covariance()));
}

TEST_CASE("update: chi-square gate rejects outliers without touching the filter") {
  StrapdownEkf ekf(FilterConfig{}, NavState{});
  const NavMatrix p0 = ekf.covariance();
  const auto rec = ekf.update_velocity(VelocityChannel::kVy, 5.0, 0.02, 1.0);
  CHECK_FALSE(rec.accepted);
  CHECK(rec.innovation == 5.0);
  CHECK(ekf.state().velocity.norm() == 0.0);
  CHECK(ekf.covariance() == p0);
}

TEST_CASE("FilterConfig validation") {
  FilterConfig c;
  c.sigma_vy = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = FilterConfig{};
  c.model = LateralModelKind::kOmegaVy;
  c.lateral = {0.0, -0.21, 0.0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("run_filter: empty log") {
  CHECK_THROWS_AS(run_filter(ManeuverLog{}, FilterConfig{}), ValidationError);
}

TEST_CASE("run_filter: stationary log stays at the origin") {
  ManeuverLog log;
  for (int i = 0; i <= 1000; ++i) {
    SensorSample s;
    s.t = 0.01 * i;
    s.accel = {0.0, 0.0, -kGravity};
    s.gear = Gear::kNeutral;
    log.sensors.push_back(s);
  }
  const FilterOutput out = run_filter(log, FilterConfig{});
  CHECK(out.samples.back().reference_position.norm() < 1e-6);
}

TEST_CASE("run_filter: matched model on a noise-free circle") {
  const ManeuverLog log = circle_log(1.0, 0.3, 20.0, -0.21);
  const auto cfg = config_for(LateralModelKind::kOmegaVy, -0.21, -0.21);
  const FilterOutput out = run_filter(log, cfg);
  const auto report = trajectory_error(out, *log.truth);
  CHECK(report.error.back() < 1e-3);

  // Velocity-state consistency: the body velocity at the IMU matches truth.
  const auto& last = out.samples.back();
  const auto& g = log.truth->back();
  const Eigen::Vector2d v_imu = transfer_planar_velocity({g.vx, g.vy}, g.yaw_rate, {1.5, 0.0});
  CHECK((last.state.velocity.head<2>() - v_imu).norm() < 1e-6);
}

TEST_CASE("run_filter: covariance stays symmetric positive definite through every update") {
  const ManeuverLog log = circle_log(-0.8, -0.25, 5.0, -0.21);
  StrapdownEkf ekf(config_for(LateralModelKind::kOmegaVy, 0.0, -0.21),
                   nav_state_from_truth(log.truth->front(),
                                        config_for(LateralModelKind::kOmegaVy, 0.0, -0.21)));
  for (std::size_t k = 0; k < log.sensors.size(); ++k) {
    if (k > 0) {
      const auto& a = log.sensors[k - 1];
      const auto& b = log.sensors[k];
      ekf.predict({0.5 * (a.accel + b.accel), 0.5 * (a.gyro + b.gyro)}, b.t - a.t);
    }
    ekf.measure_velocity(log.sensors[k]);
    REQUIRE(symmetric_positive_definite(ekf.covariance()));
    REQUIRE(std::abs(ekf.state().attitude.norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("run_filter: output invariant under a uniform time shift") {
  ManeuverLog log = circle_log(1.0, 0.3, 5.0, 0.0);
  const auto cfg = config_for(LateralModelKind::kZeroSlip, 0.0, 0.0);
  const FilterOutput a = run_filter(log, cfg);
  for (auto& s : log.sensors) s.t += 1000.0;
  for (auto& g : *log.truth) g.t += 1000.0;
  const FilterOutput b = run_filter(log, cfg);
  REQUIRE(a.samples.size() == b.samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    worst = std::max(worst,
                     (a.samples[i].reference_position - b.samples[i].reference_position).norm());
  }
  // Timestamps near 1000 s carry ~1e-13 s of rounding in the step sizes.
  CHECK(worst < 1e-9);
}

TEST_CASE("run_filter: mis-modelled x_rho reproduces the steady-circle error formula") {
  const double x_true = -0.21, yaw_rate = 0.3;
  const ManeuverLog log = circle_log(1.0, yaw_rate, 2.0 * M_PI / yaw_rate, x_true);
  const auto cfg = config_for(LateralModelKind::kZeroSlip, 0.0, 0.0);
  const auto report = trajectory_error(run_filter(log, cfg), *log.truth);
  // 2 % of the closed form, floored at 2 % of 0.1 e_max near the zero crossings at
  // phase 0 and 2 pi where a relative bound is meaningless.
  const double floor = 0.1 * max_position_error(x_true);
  double worst = 0.0;
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    const double expected = position_error(x_true, yaw_rate * report.t[i]);
    worst = std::max(worst, std::abs(report.error[i] - expected) / std::max(expected, floor));
  }
  CHECK(worst <= 0.02);
}
