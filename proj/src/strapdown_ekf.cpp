#include "parkloc/strapdown_ekf.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <fmt/format.h>

namespace parkloc {

namespace {

const Eigen::Vector3d kGravityVector(0.0, 0.0, kGravity);

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d m;
  m << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return m;
}

Eigen::Vector4d wxyz(const Eigen::Quaterniond& q) { return {q.w(), q.x(), q.y(), q.z()}; }

Eigen::Quaterniond quat_from_wxyz(const Eigen::Vector4d& v) {
  return Eigen::Quaterniond(v[0], v[1], v[2], v[3]);
}

Eigen::Quaterniond conjugate(const Eigen::Quaterniond& q) {
  return Eigen::Quaterniond(q.w(), -q.x(), -q.y(), -q.z());
}

}  // namespace

NavVector NavState::to_vector() const {
  NavVector x;
  x.segment<3>(0) = velocity;
  x.segment<4>(3) = wxyz(attitude);
  x.segment<3>(7) = position;
  return x;
}

NavState NavState::from_vector(const NavVector& x) {
  NavState s;
  s.velocity = x.segment<3>(0);
  s.attitude = quat_from_wxyz(x.segment<4>(3));
  s.position = x.segment<3>(7);
  return s;
}

double NavState::yaw() const {
  const auto& q = attitude;
  return std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()),
                    1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
}

Eigen::Matrix3d rotation_matrix(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d u = q.vec();
  const double w = q.w();
  return (w * w - u.squaredNorm()) * Eigen::Matrix3d::Identity() + 2.0 * u * u.transpose() +
         2.0 * w * skew(u);
}

Eigen::Matrix<double, 3, 4> rotate_jacobian(const Eigen::Quaterniond& q, const Eigen::Vector3d& a) {
  const Eigen::Vector3d u = q.vec();
  const double w = q.w();
  Eigen::Matrix<double, 3, 4> j;
  j.col(0) = 2.0 * (w * a + u.cross(a));
  j.rightCols<3>() = 2.0 * (u.dot(a) * Eigen::Matrix3d::Identity() + u * a.transpose() -
                            a * u.transpose() - w * skew(a));
  return j;
}

Eigen::Matrix4d quat_left_matrix(const Eigen::Quaterniond& p) {
  Eigen::Matrix4d m;
  m << p.w(), -p.x(), -p.y(), -p.z(),
       p.x(), p.w(), -p.z(), p.y(),
       p.y(), p.z(), p.w(), -p.x(),
       p.z(), -p.y(), p.x(), p.w();
  return m;
}

Eigen::Matrix4d quat_right_matrix(const Eigen::Quaterniond& q) {
  Eigen::Matrix4d m;
  m << q.w(), -q.x(), -q.y(), -q.z(),
       q.x(), q.w(), q.z(), -q.y(),
       q.y(), -q.z(), q.w(), q.x(),
       q.z(), q.y(), -q.x(), q.w();
  return m;
}

Eigen::Quaterniond rotation_increment(const Eigen::Vector3d& omega, double dt) {
  const double half_angle = 0.5 * omega.norm() * dt;
  // sin(h) / |omega| written so that it stays exact as |omega| -> 0.
  double scale;
  if (half_angle < 1e-5) {
    scale = 0.5 * dt * (1.0 - half_angle * half_angle / 6.0);
  } else {
    scale = std::sin(half_angle) / omega.norm();
  }
  return Eigen::Quaterniond(std::cos(half_angle), scale * omega.x(), scale * omega.y(),
                            scale * omega.z());
}

NavVector mechanize(const NavVector& x, const ImuReading& imu, double dt) {
  if (dt == 0.0) return x;
  const Eigen::Vector3d v = x.segment<3>(0);
  const Eigen::Quaterniond q = quat_from_wxyz(x.segment<4>(3));
  const Eigen::Vector3d& w = imu.angular_rate;

  const Eigen::Vector3d v_next =
      v + dt * (imu.specific_force + rotation_matrix(conjugate(q)) * kGravityVector - w.cross(v));
  const Eigen::Vector4d q_next =
      quat_right_matrix(rotation_increment(w, dt)) * x.segment<4>(3);
  const Eigen::Quaterniond q_half = q * rotation_increment(w, 0.5 * dt);
  const Eigen::Vector3d p_next =
      x.segment<3>(7) + dt * rotation_matrix(q_half) * (0.5 * (v + v_next));

  NavVector out;
  out.segment<3>(0) = v_next;
  out.segment<4>(3) = q_next / q_next.norm();
  out.segment<3>(7) = p_next;
  return out;
}

NavState mechanize(const NavState& state, const ImuReading& imu, double dt) {
  return NavState::from_vector(mechanize(state.to_vector(), imu, dt));
}

NavMatrix mechanize_jacobian(const NavVector& x, const ImuReading& imu, double dt,
                             bool include_normalization) {
  NavMatrix f = NavMatrix::Identity();
  if (dt == 0.0) return f;
  const Eigen::Vector3d v = x.segment<3>(0);
  const Eigen::Quaterniond q = quat_from_wxyz(x.segment<4>(3));
  const Eigen::Vector3d& w = imu.angular_rate;

  // Velocity.
  const Eigen::Matrix3d dv_dv = Eigen::Matrix3d::Identity() - dt * skew(w);
  Eigen::Matrix<double, 3, 4> dv_dq = dt * rotate_jacobian(conjugate(q), kGravityVector);
  dv_dq.rightCols<3>() *= -1.0;  // d(conj q)/dq = diag(1, -1, -1, -1)

  // Attitude.
  const Eigen::Matrix4d right_inc = quat_right_matrix(rotation_increment(w, dt));
  const Eigen::Vector4d q_next = right_inc * x.segment<4>(3);
  const double norm = q_next.norm();
  Eigen::Matrix4d normalize = Eigen::Matrix4d::Identity() / norm;
  if (include_normalization) {
    const Eigen::Vector4d unit = q_next / norm;
    normalize -= unit * unit.transpose() / norm;
  }

  // Position.
  const Eigen::Vector3d v_next =
      v + dt * (imu.specific_force + rotation_matrix(conjugate(q)) * kGravityVector - w.cross(v));
  const Eigen::Vector3d v_mean = 0.5 * (v + v_next);
  const Eigen::Quaterniond inc_half = rotation_increment(w, 0.5 * dt);
  const Eigen::Quaterniond q_half = q * inc_half;
  const Eigen::Matrix3d r_half = rotation_matrix(q_half);

  f.block<3, 3>(0, 0) = dv_dv;
  f.block<3, 4>(0, 3) = dv_dq;
  f.block<4, 4>(3, 3) = normalize * right_inc;
  f.block<3, 3>(7, 0) = dt * r_half * 0.5 * (Eigen::Matrix3d::Identity() + dv_dv);
  f.block<3, 4>(7, 3) =
      dt * (rotate_jacobian(q_half, v_mean) * quat_right_matrix(inc_half) + r_half * 0.5 * dv_dq);
  return f;
}

void FilterConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ValidationError(fmt::format("filter.{}: must be > 0", name));
    }
  };
  positive(accel_noise_density, "accel_noise_density");
  positive(gyro_noise_density, "gyro_noise_density");
  positive(sigma_vx, "sigma_vx");
  positive(sigma_vy, "sigma_vy");
  positive(sigma_vz, "sigma_vz");
  positive(init_sigma_velocity, "init_sigma_velocity");
  positive(init_sigma_attitude, "init_sigma_attitude");
  positive(init_sigma_position, "init_sigma_position");
  positive(gate_chi2, "gate_chi2");
  if (model != LateralModelKind::kZeroSlip) lateral.validate();
}

StrapdownEkf::StrapdownEkf(const FilterConfig& config, const NavState& initial)
    : config_(config), state_(initial) {
  config_.validate();
  state_.attitude.normalize();
  covariance_.setZero();
  covariance_.diagonal().segment<3>(0).setConstant(std::pow(config_.init_sigma_velocity, 2));
  covariance_.diagonal().segment<4>(3).setConstant(std::pow(config_.init_sigma_attitude, 2));
  covariance_.diagonal().segment<3>(7).setConstant(std::pow(config_.init_sigma_position, 2));
}

void StrapdownEkf::check_covariance(const char* where) {
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  if (!covariance_.allFinite()) {
    throw NumericalError(fmt::format("{}: covariance became non-finite", where));
  }
  Eigen::LLT<NavMatrix> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(fmt::format("{}: covariance lost positive definiteness", where));
  }
}

void StrapdownEkf::predict(const ImuReading& imu, double dt) {
  if (dt < 0.0) throw ValidationError("predict: negative time step");
  if (dt == 0.0) return;
  const NavVector x = state_.to_vector();
  const NavMatrix f = mechanize_jacobian(x, imu, dt, false);

  // Noise input matrices for accelerometer and gyro white noise.
  const Eigen::Quaterniond q = state_.attitude;
  const Eigen::Quaterniond q_half = q * rotation_increment(imu.angular_rate, 0.5 * dt);
  Eigen::Matrix<double, kNavStateDim, 3> g_accel = Eigen::Matrix<double, kNavStateDim, 3>::Zero();
  g_accel.block<3, 3>(0, 0) = dt * Eigen::Matrix3d::Identity();
  g_accel.block<3, 3>(7, 0) = 0.5 * dt * dt * rotation_matrix(q_half);
  Eigen::Matrix<double, kNavStateDim, 3> g_gyro = Eigen::Matrix<double, kNavStateDim, 3>::Zero();
  g_gyro.block<3, 3>(0, 0) = dt * skew(state_.velocity);
  g_gyro.block<4, 3>(3, 0) = 0.5 * dt * quat_left_matrix(q).rightCols<3>();
  const double var_accel = config_.accel_noise_density * config_.accel_noise_density / dt;
  const double var_gyro = config_.gyro_noise_density * config_.gyro_noise_density / dt;

  state_ = NavState::from_vector(mechanize(x, imu, dt));
  covariance_ = f * covariance_ * f.transpose() +
                var_accel * g_accel * g_accel.transpose() + var_gyro * g_gyro * g_gyro.transpose();
  check_covariance("predict");
}

InnovationRecord StrapdownEkf::update_velocity(VelocityChannel channel, double measurement,
                                               double sigma, double t) {
  const int index = static_cast<int>(channel);
  InnovationRecord rec;
  rec.t = t;
  rec.channel = channel;
  rec.measurement = measurement;
  rec.innovation = measurement - state_.velocity[index];
  const double r = sigma * sigma;
  rec.variance = covariance_(index, index) + r;
  if (rec.innovation * rec.innovation / rec.variance > config_.gate_chi2) {
    rec.accepted = false;
    return rec;
  }
  const NavVector gain = covariance_.col(index) / rec.variance;
  NavVector x = state_.to_vector();
  x += gain * rec.innovation;
  // Joseph form: (I - K H) P (I - K H)^T + K r K^T.
  NavMatrix i_kh = NavMatrix::Identity();
  i_kh.col(index) -= gain;
  covariance_ = i_kh * covariance_ * i_kh.transpose() + r * gain * gain.transpose();
  state_ = NavState::from_vector(x);
  state_.attitude.normalize();
  check_covariance("update");
  return rec;
}

std::optional<Eigen::Vector2d> StrapdownEkf::velocity_measurements(
    const SensorSample& sample) const {
  const int direction = gear_sign(sample.gear);
  if (direction == 0) return std::nullopt;
  const double yaw_rate = sample.gyro.z();
  const double vx_rear = direction * 0.5 * (sample.ws_rl + sample.ws_rr);
  const double vy_rear =
      predicted_rear_lateral_velocity(config_.model, config_.lateral, direction, yaw_rate,
                                      std::tan(sample.steering_front), vx_rear);
  const Eigen::Vector2d v_imu = transfer_planar_velocity(
      {vx_rear, vy_rear}, yaw_rate, {config_.imu_lever_x, config_.imu_lever_y});
  return v_imu;
}

std::vector<InnovationRecord> StrapdownEkf::measure_velocity(const SensorSample& sample) {
  std::vector<InnovationRecord> records;
  if (const auto v = velocity_measurements(sample)) {
    records.push_back(update_velocity(VelocityChannel::kVx, v->x(), config_.sigma_vx, sample.t));
    records.push_back(update_velocity(VelocityChannel::kVy, v->y(), config_.sigma_vy, sample.t));
  }
  records.push_back(update_velocity(VelocityChannel::kVz, 0.0, config_.sigma_vz, sample.t));
  return records;
}

Eigen::Vector3d StrapdownEkf::reference_position() const {
  const Eigen::Vector3d lever(config_.imu_lever_x, config_.imu_lever_y, 0.0);
  return state_.position - rotation_matrix(state_.attitude) * lever;
}

NavState nav_state_from_truth(const GroundTruthSample& truth, const FilterConfig& config) {
  NavState s;
  s.attitude = Eigen::Quaterniond(Eigen::AngleAxisd(truth.yaw, Eigen::Vector3d::UnitZ()));
  const Eigen::Vector2d lever(config.imu_lever_x, config.imu_lever_y);
  const Eigen::Vector2d v = transfer_planar_velocity({truth.vx, truth.vy}, truth.yaw_rate, lever);
  s.velocity = {v.x(), v.y(), 0.0};
  s.position = Eigen::Vector3d(truth.x, truth.y, 0.0) +
               rotation_matrix(s.attitude) * Eigen::Vector3d(lever.x(), lever.y(), 0.0);
  return s;
}

FilterOutput run_filter(const ManeuverLog& log, const FilterConfig& config,
                        const std::optional<Pose2>& initial_pose) {
  if (log.sensors.empty()) {
    throw ValidationError("run_filter: empty log");
  }
  log.validate();
  const SensorSample& first = log.sensors.front();

  GroundTruthSample start;
  start.t = first.t;
  if (log.has_truth()) {
    start = interpolate_truth(*log.truth, first.t);
  } else {
    const int direction = gear_sign(first.gear);
    start.vx = direction * 0.5 * (first.ws_rl + first.ws_rr);
    start.yaw_rate = first.gyro.z();
  }
  if (initial_pose) {
    start.x = initial_pose->x;
    start.y = initial_pose->y;
    start.yaw = initial_pose->yaw;
  }

  StrapdownEkf ekf(config, nav_state_from_truth(start, config));
  FilterOutput out;
  out.samples.reserve(log.sensors.size());
  auto record = [&](double t) {
    FilterSample s;
    s.t = t;
    s.state = ekf.state();
    s.reference_position = ekf.reference_position();
    s.covariance_diagonal = ekf.covariance().diagonal();
    out.samples.push_back(s);
  };

  for (std::size_t k = 0; k < log.sensors.size(); ++k) {
    const SensorSample& s = log.sensors[k];
    if (k > 0) {
      const SensorSample& prev = log.sensors[k - 1];
      // First-order hold between consecutive IMU samples.
      ekf.predict({0.5 * (prev.accel + s.accel), 0.5 * (prev.gyro + s.gyro)}, s.t - prev.t);
    }
    auto records = ekf.measure_velocity(s);
    out.innovations.insert(out.innovations.end(), records.begin(), records.end());
    record(s.t);
  }
  return out;
}

}  // namespace parkloc
