#include "dmpp/basis.hpp"

#include <cmath>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {
constexpr double kDenomFloor = 1e-300;

void check_phase_finite(double s) {
  if (!std::isfinite(s)) throw ArgumentError("basis evaluation: s is not finite");
}
}  // namespace

BasisModel new_basis(int K, double a_h) {
  if (K < 2) throw ArgumentError("new_basis: K must be >= 2");
  if (!(a_h >= 1.0 && a_h <= 3.0)) throw ArgumentError("new_basis: a_h must be in [1.0, 3.0]");
  BasisModel b;
  b.K = K;
  b.a_h = a_h;
  b.centers = Eigen::VectorXd::LinSpaced(K, 0.0, 1.0);
  b.widths.resize(K);
  for (int i = 0; i + 1 < K; ++i) {
    const double dc = b.centers[i + 1] - b.centers[i];
    b.widths[i] = 1.0 / std::pow(a_h * dc, 2);
  }
  b.widths[K - 1] = b.widths[K - 2];
  return b;
}

void BasisModel::eval(double s, Eigen::Ref<Eigen::VectorXd> phi_out,
                      Eigen::Ref<Eigen::VectorXd> dphi_out,
                      Eigen::Ref<Eigen::VectorXd> ddphi_out) const {
  check_phase_finite(s);
  double S = 0.0, Sp = 0.0, Spp = 0.0;
  for (int i = 0; i < K; ++i) {
    const double d = s - centers[i];
    const double h = widths[i];
    const double p = std::exp(-h * d * d);
    const double dp = -2.0 * h * d * p;
    const double ddp = (4.0 * h * h * d * d - 2.0 * h) * p;
    phi_out[i] = p;
    dphi_out[i] = dp;
    ddphi_out[i] = ddp;
    S += p;
    Sp += dp;
    Spp += ddp;
  }
  if (S < kDenomFloor) S = kDenomFloor;
  for (int i = 0; i < K; ++i) {
    const double p = phi_out[i] / S;
    const double dp = (dphi_out[i] - p * Sp) / S;
    phi_out[i] = p;
    dphi_out[i] = dp;
    ddphi_out[i] = (ddphi_out[i] - 2.0 * Sp * dp - Spp * p) / S;
  }
}

Eigen::VectorXd BasisModel::phi(double s) const {
  check_phase_finite(s);
  Eigen::VectorXd psi(K);
  double S = 0.0;
  for (int i = 0; i < K; ++i) {
    const double d = s - centers[i];
    psi[i] = std::exp(-widths[i] * d * d);
    S += psi[i];
  }
  if (S < kDenomFloor) S = kDenomFloor;
  psi /= S;
  return psi;
}

Eigen::VectorXd BasisModel::phi_prime(double s) const {
  Eigen::VectorXd p(K), dp(K), ddp(K);
  eval(s, p, dp, ddp);
  return dp;
}

Eigen::VectorXd BasisModel::phi_second(double s) const {
  Eigen::VectorXd p(K), dp(K), ddp(K);
  eval(s, p, dp, ddp);
  return ddp;
}

Eigen::MatrixXd BasisModel::block_A(double s) const {
  Eigen::MatrixXd A(K, 3);
  eval(s, A.col(0), A.col(1), A.col(2));
  return A;
}

Eigen::MatrixXd BasisModel::block_C(double s_j, double s_prev) const {
  Eigen::MatrixXd C(K, 3);
  Eigen::VectorXd ddphi_j(K);
  eval(s_j, C.col(0), C.col(1), ddphi_j);
  Eigen::VectorXd p(K), dp(K);
  eval(s_prev, p, dp, C.col(2));
  return C;
}

}  // namespace dmpp
