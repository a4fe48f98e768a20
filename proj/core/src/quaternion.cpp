#include "dmpp/quaternion.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {
constexpr double kSmallAngle = 1e-7;   // below this theta the identity/zero limits apply
constexpr double kAngleCap = M_PI - 1e-6;

std::atomic<bool> g_range_warned{false};

void warn_angle_clamp() {
  if (!g_range_warned.exchange(true)) {
    std::cerr << "dmpp: rotation angle clamped to pi - 1e-6 in log-Jacobian evaluation\n";
  }
}

struct AngleAxis2 {
  double theta2 = 0.0;  // half angle
  Eigen::Vector3d k = Eigen::Vector3d::UnitX();
  bool small = true;
};

AngleAxis2 split(const Eigen::Vector3d& eta) {
  AngleAxis2 r;
  const double theta = eta.norm();
  if (theta < kSmallAngle) return r;
  double th = theta;
  if (th > kAngleCap) {
    warn_angle_clamp();
    th = kAngleCap;
  }
  r.theta2 = 0.5 * th;
  r.k = eta / theta;
  r.small = false;
  return r;
}
}  // namespace

double UnitQuaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

UnitQuaternion UnitQuaternion::normalized() const {
  const double n = norm();
  if (n < 1e-300) throw ArgumentError("quaternion normalize: zero norm");
  return {w / n, x / n, y / n, z / n};
}

UnitQuaternion UnitQuaternion::canonical() const {
  if (w > 0.0) return *this;
  if (w < 0.0) return {-w, -x, -y, -z};
  if (x != 0.0) return x > 0.0 ? *this : UnitQuaternion{w, -x, -y, -z};
  if (y != 0.0) return y > 0.0 ? *this : UnitQuaternion{w, -x, -y, -z};
  return z >= 0.0 ? *this : UnitQuaternion{w, -x, -y, -z};
}

Eigen::Vector3d UnitQuaternion::rotate(const Eigen::Vector3d& v) const {
  const UnitQuaternion p{0.0, v.x(), v.y(), v.z()};
  const UnitQuaternion r = quat_mul(quat_mul(*this, p), conj());
  return r.imag();
}

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Eigen::Vector3d quat_log(const UnitQuaternion& q_in) {
  const UnitQuaternion q = q_in.canonical();
  const Eigen::Vector3d v = q.imag();
  const double vn = v.norm();
  if (vn < 1e-14) return 2.0 * v / std::max(q.w, 1e-300);
  const double theta2 = std::atan2(vn, q.w);
  return (2.0 * theta2 / vn) * v;
}

UnitQuaternion quat_exp(const Eigen::Vector3d& eta) {
  const double theta = eta.norm();
  const double half = 0.5 * theta;
  double sinc_half;  // sin(half)/theta
  if (theta < 1e-8) {
    sinc_half = 0.5 * (1.0 - half * half / 6.0);
  } else {
    sinc_half = std::sin(half) / theta;
  }
  const Eigen::Vector3d v = sinc_half * eta;
  return UnitQuaternion{std::cos(half), v.x(), v.y(), v.z()}.canonical();
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d jacobian_eta_from_log(const Eigen::Vector3d& eta) {
  const AngleAxis2 aa = split(eta);
  if (aa.small) return Eigen::Matrix3d::Identity();
  const double t2 = aa.theta2, s2 = std::sin(t2), c2 = std::cos(t2);
  const Eigen::Matrix3d kk = aa.k * aa.k.transpose();
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - kk;
  return kk + (s2 * c2 / t2) * P + (s2 * s2 / t2) * skew(aa.k);
}

Eigen::Matrix3d jacobian_eta_pinv_from_log(const Eigen::Vector3d& eta) {
  const AngleAxis2 aa = split(eta);
  if (aa.small) return Eigen::Matrix3d::Identity();
  const double t2 = aa.theta2, s2 = std::sin(t2), c2 = std::cos(t2);
  const Eigen::Matrix3d kk = aa.k * aa.k.transpose();
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - kk;
  return kk + (t2 * c2 / s2) * P - t2 * skew(aa.k);
}

Eigen::Matrix3d jacobian_eta_dot_from_log(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot) {
  const AngleAxis2 aa = split(eta);
  if (aa.small) return Eigen::Matrix3d::Zero();
  const double t2 = aa.theta2, s2 = std::sin(t2), c2 = std::cos(t2);
  const Eigen::Vector3d& k = aa.k;
  const Eigen::Matrix3d kk = k * k.transpose();
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - kk;
  const double t2_dot = 0.5 * k.dot(eta_dot);
  const Eigen::Vector3d k_dot = (eta_dot - k * k.dot(eta_dot)) / (2.0 * t2);
  return (1.0 - s2 * c2 / t2) * (k_dot * k.transpose() + k * k_dot.transpose()) +
         (s2 * s2 / t2) * skew(k_dot) +
         ((1.0 - 2.0 * s2 * s2) / t2 - s2 * c2 / (t2 * t2)) * t2_dot * P +
         (2.0 * s2 * c2 / t2 - s2 * s2 / (t2 * t2)) * t2_dot * skew(k);
}

Eigen::Matrix3d jacobian_eta_pinv_dot_from_log(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot) {
  const AngleAxis2 aa = split(eta);
  if (aa.small) return Eigen::Matrix3d::Zero();
  const double t2 = aa.theta2, s2 = std::sin(t2), c2 = std::cos(t2);
  const Eigen::Vector3d& k = aa.k;
  const Eigen::Matrix3d kk = k * k.transpose();
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - kk;
  const double t2_dot = 0.5 * k.dot(eta_dot);
  const Eigen::Vector3d k_dot = (eta_dot - k * k.dot(eta_dot)) / (2.0 * t2);
  return (1.0 - t2 * c2 / s2) * (k_dot * k.transpose() + k * k_dot.transpose()) -
         t2_dot * skew(k) - t2 * skew(k_dot) +
         ((s2 * c2 - t2) / (s2 * s2)) * t2_dot * P;
}

Eigen::Matrix3d jacobian_eta(const UnitQuaternion& q) {
  return jacobian_eta_from_log(quat_log(q));
}

Eigen::Matrix3d jacobian_eta_pinv(const UnitQuaternion& q) {
  return jacobian_eta_pinv_from_log(quat_log(q));
}

Eigen::Matrix3d jacobian_eta_dot(const UnitQuaternion& q, const Eigen::Vector3d& eta_dot) {
  return jacobian_eta_dot_from_log(quat_log(q), eta_dot);
}

Eigen::Matrix3d jacobian_eta_pinv_dot(const UnitQuaternion& q, const Eigen::Vector3d& eta_dot) {
  return jacobian_eta_pinv_dot_from_log(quat_log(q), eta_dot);
}

void omega_from_eta(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot,
                    const Eigen::Vector3d& eta_ddot, Eigen::Vector3d& omega,
                    Eigen::Vector3d& omega_dot) {
  const Eigen::Matrix3d J = jacobian_eta_from_log(eta);
  const Eigen::Matrix3d Jd = jacobian_eta_dot_from_log(eta, eta_dot);
  omega = J * eta_dot;
  omega_dot = J * eta_ddot + Jd * eta_dot;
}

void eta_from_omega(const UnitQuaternion& q, const Eigen::Vector3d& omega,
                    const Eigen::Vector3d& omega_dot, Eigen::Vector3d& eta_dot,
                    Eigen::Vector3d& eta_ddot) {
  const Eigen::Vector3d eta = quat_log(q);
  const Eigen::Matrix3d Jp = jacobian_eta_pinv_from_log(eta);
  eta_dot = Jp * omega;
  const Eigen::Matrix3d Jpd = jacobian_eta_pinv_dot_from_log(eta, eta_dot);
  eta_ddot = Jp * omega_dot + Jpd * omega;
}

Eigen::Vector3d torque_to_eta(const UnitQuaternion& q, const Eigen::Vector3d& tau) {
  return jacobian_eta(q).transpose() * tau;
}

Eigen::Vector3d torque_from_eta(const UnitQuaternion& q, const Eigen::Vector3d& tau_eta) {
  return jacobian_eta_pinv(q).transpose() * tau_eta;
}

}  // namespace dmpp
