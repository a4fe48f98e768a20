#include "dmpp/quaternion.hpp"

#include <random>

#include <gtest/gtest.h>

namespace dmpp {
namespace {

Eigen::Vector3d random_rotvec(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> n;
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  if (v.norm() < 1e-12) v = Eigen::Vector3d::UnitX();
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return v.normalized() * u(rng);
}

// Angular velocity by finite differences of q(t) = exp(eta + t*eta_dot):
// omega = 2 * (dq/dt) * conj(q), vector part.
Eigen::Vector3d omega_fd(const Eigen::Vector3d& eta, const Eigen::Vector3d& eta_dot) {
  const double h = 1e-7;
  UnitQuaternion qp = quat_exp(eta + h * eta_dot);
  UnitQuaternion qm = quat_exp(eta - h * eta_dot);
  Eigen::Vector4d dq = (qp.vec() - qm.vec()) / (2 * h);
  UnitQuaternion q = quat_exp(eta);
  UnitQuaternion dqq{dq[0], dq[1], dq[2], dq[3]};
  UnitQuaternion w = quat_mul(dqq, q.conj());
  return 2.0 * w.imag();
}

TEST(Quaternion, ExpLogRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 0.98 * M_PI);
    Eigen::Vector3d back = quat_log(quat_exp(eta));
    EXPECT_LE((back - eta).norm(), 1e-12 * (1.0 + eta.norm())) << eta.transpose();
  }
}

TEST(Quaternion, LogExpRoundTripUpToSign) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int i = 0; i < 200; ++i) {
    UnitQuaternion q{n(rng), n(rng), n(rng), n(rng)};
    q = q.normalized();
    UnitQuaternion back = quat_exp(quat_log(q));
    const double d = std::min((back.vec() - q.vec()).norm(), (back.vec() + q.vec()).norm());
    EXPECT_LE(d, 1e-12);
  }
}

TEST(Quaternion, IdentityLimitsExact) {
  EXPECT_EQ(quat_log(UnitQuaternion::identity()).norm(), 0.0);
  UnitQuaternion q = quat_exp(Eigen::Vector3d::Zero());
  EXPECT_EQ(q.w, 1.0);
  EXPECT_EQ(q.imag().norm(), 0.0);
  EXPECT_EQ((jacobian_eta_from_log(Eigen::Vector3d::Zero()) - Eigen::Matrix3d::Identity()).norm(),
            0.0);
  EXPECT_EQ(
      (jacobian_eta_pinv_from_log(Eigen::Vector3d::Zero()) - Eigen::Matrix3d::Identity()).norm(),
      0.0);
}

TEST(Quaternion, MulIdentityAndInverse) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    UnitQuaternion q{n(rng), n(rng), n(rng), n(rng)};
    q = q.normalized();
    UnitQuaternion e = quat_mul(q, q.conj());
    EXPECT_NEAR(e.w, 1.0, 1e-12);
    EXPECT_LE(e.imag().norm(), 1e-12);
    UnitQuaternion id = quat_mul(q, UnitQuaternion::identity());
    EXPECT_LE((id.vec() - q.vec()).norm(), 1e-15);
  }
}

TEST(Quaternion, RotateMatchesMatrix) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 3.0);
    UnitQuaternion q = quat_exp(eta);
    // Rotation of the basis vectors must be orthonormal and match
    // conjugation q v q^-1.
    Eigen::Matrix3d R;
    R.col(0) = q.rotate(Eigen::Vector3d::UnitX());
    R.col(1) = q.rotate(Eigen::Vector3d::UnitY());
    R.col(2) = q.rotate(Eigen::Vector3d::UnitZ());
    EXPECT_LE((R * R.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  }
}

TEST(Quaternion, JacobianPseudoInverse) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 0.95 * M_PI);
    UnitQuaternion q = quat_exp(eta);
    Eigen::Matrix3d J = jacobian_eta(q);
    Eigen::Matrix3d Jp = jacobian_eta_pinv(q);
    EXPECT_LE((J * Jp - Eigen::Matrix3d::Identity()).norm(), 1e-10) << eta.transpose();
  }
}

TEST(Quaternion, OmegaMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 2.5);
    Eigen::Vector3d eta_dot(n(rng), n(rng), n(rng));
    Eigen::Vector3d omega, omega_dot;
    omega_from_eta(eta, eta_dot, Eigen::Vector3d::Zero(), omega, omega_dot);
    EXPECT_LE((omega - omega_fd(eta, eta_dot)).norm(), 1e-5 * (1.0 + omega.norm()));
  }
}

TEST(Quaternion, OmegaEtaRoundTrip) {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 2.8);
    Eigen::Vector3d eta_dot(n(rng), n(rng), n(rng));
    Eigen::Vector3d eta_ddot(n(rng), n(rng), n(rng));
    Eigen::Vector3d omega, omega_dot;
    omega_from_eta(eta, eta_dot, eta_ddot, omega, omega_dot);
    Eigen::Vector3d back_dot, back_ddot;
    eta_from_omega(quat_exp(eta), omega, omega_dot, back_dot, back_ddot);
    EXPECT_LE((back_dot - eta_dot).norm(), 1e-8 * (1.0 + eta_dot.norm()));
    EXPECT_LE((back_ddot - eta_ddot).norm(), 1e-6 * (1.0 + eta_ddot.norm()));
  }
}

TEST(Quaternion, JacobianDotMatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n;
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d eta = random_rotvec(rng, 2.5);
    Eigen::Vector3d eta_dot(n(rng), n(rng), n(rng));
    Eigen::Matrix3d fd = (jacobian_eta_from_log(eta + h * eta_dot) -
                          jacobian_eta_from_log(eta - h * eta_dot)) /
                         (2 * h);
    Eigen::Matrix3d an = jacobian_eta_dot_from_log(eta, eta_dot);
    EXPECT_LE((an - fd).norm(), 1e-5 * (1.0 + fd.norm()));

    Eigen::Matrix3d fdp = (jacobian_eta_pinv_from_log(eta + h * eta_dot) -
                           jacobian_eta_pinv_from_log(eta - h * eta_dot)) /
                          (2 * h);
    Eigen::Matrix3d anp = jacobian_eta_pinv_dot_from_log(eta, eta_dot);
    EXPECT_LE((anp - fdp).norm(), 1e-5 * (1.0 + fdp.norm()));
  }
}

TEST(Quaternion, TorqueMapsAreInverse) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    UnitQuaternion q = quat_exp(random_rotvec(rng, 2.0));
    Eigen::Vector3d tau(n(rng), n(rng), n(rng));
    Eigen::Vector3d back = torque_from_eta(q, torque_to_eta(q, tau));
    EXPECT_LE((back - tau).norm(), 1e-9 * (1.0 + tau.norm()));
  }
}

TEST(Quaternion, SkewMatchesCrossProduct) {
  Eigen::Vector3d a(0.3, -1.2, 2.0), b(-0.7, 0.25, 1.5);
  EXPECT_LE((skew(a) * b - a.cross(b)).norm(), 1e-15);
  EXPECT_LE((skew(a) + skew(a).transpose()).norm(), 0.0);
}

TEST(Quaternion, CanonicalHemisphere) {
  UnitQuaternion q{-0.5, 0.5, 0.5, 0.5};
  UnitQuaternion c = q.canonical();
  EXPECT_GE(c.w, 0.0);
  EXPECT_LE((c.vec() + q.vec()).norm(), 1e-15);
}

}  // namespace
}  // namespace dmpp
