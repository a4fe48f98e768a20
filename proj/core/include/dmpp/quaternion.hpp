#pragma once

#include <Eigen/Dense>

namespace dmpp {

// Unit quaternion, scalar first. Orientation state and demonstrations are
// mapped through the rotation-vector log/exp pair, so all quaternions here
// live on the canonical hemisphere (w >= 0) where the log has angle <= pi.
struct UnitQuaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  UnitQuaternion() = default;
  UnitQuaternion(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_vec(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

  Eigen::Vector4d vec() const { return {w, x, y, z}; }
  Eigen::Vector3d imag() const { return {x, y, z}; }
  double norm() const;
  UnitQuaternion normalized() const;
  // Sign-flipped onto the w >= 0 hemisphere (deterministic tie-break at w == 0).
  UnitQuaternion canonical() const;
  UnitQuaternion conj() const { return {w, -x, -y, -z}; }
  double dot(const UnitQuaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Eigen::Vector3d rotate(const Eigen::Vector3d& v) const;
};

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b);

// Rotation-vector maps: eta = theta * k with theta in [0, pi] on the
// canonical hemisphere.
Eigen::Vector3d quat_log(const UnitQuaternion& q);
UnitQuaternion quat_exp(const Eigen::Vector3d& eta);

// Jacobian of the world-frame angular velocity with respect to the log
// rate: omega = J_eta * eta_dot, and its pseudo-inverse (exact inverse away
// from theta = 0 where both reduce to the identity).
Eigen::Matrix3d jacobian_eta(const UnitQuaternion& q);
Eigen::Matrix3d jacobian_eta_pinv(const UnitQuaternion& q);
Eigen::Matrix3d jacobian_eta_dot(const UnitQuaternion& q, const Eigen::Vector3d& eta_dot);
Eigen::Matrix3d jacobian_eta_pinv_dot(const UnitQuaternion& q, const Eigen::Vector3d& eta_dot);

// Same maps parameterized directly by eta = quat_log(q).
Eigen::Matrix3d jacobian_eta_from_log(const Eigen::Vector3d& eta);
Eigen::Matrix3d jacobian_eta_pinv_from_log(const Eigen::Vector3d& eta);
Eigen::Matrix3d jacobian_eta_dot_from_log(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot);
Eigen::Matrix3d jacobian_eta_pinv_dot_from_log(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot);

// omega = J eta_dot, omega_dot = J eta_ddot + Jdot eta_dot, and the inverse
// pair eta_dot = J+ omega, eta_ddot = J+ omega_dot + J+dot omega.
void omega_from_eta(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot,
                    const Eigen::Vector3d& eta_ddot, Eigen::Vector3d& omega,
                    Eigen::Vector3d& omega_dot);
void eta_from_omega(const UnitQuaternion& q, const Eigen::Vector3d& omega,
                    const Eigen::Vector3d& omega_dot, Eigen::Vector3d& eta_dot,
                    Eigen::Vector3d& eta_ddot);

// Power-preserving torque maps between the two parameterizations.
Eigen::Vector3d torque_to_eta(const UnitQuaternion& q, const Eigen::Vector3d& tau);
Eigen::Vector3d torque_from_eta(const UnitQuaternion& q, const Eigen::Vector3d& tau_eta);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

}  // namespace dmpp
