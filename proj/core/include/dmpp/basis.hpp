#pragma once

#include <Eigen/Dense>

namespace dmpp {

// Normalized Gaussian basis over the phase interval [0, 1]. Evaluation
// outside [0, 1] is supported (the phase may overshoot slightly).
struct BasisModel {
  int K = 0;
  double a_h = 1.5;
  Eigen::VectorXd centers;  // equally spaced in [0, 1], strictly increasing
  Eigen::VectorXd widths;   // h_i = 1 / (a_h * (c_{i+1} - c_i))^2, last reuses final spacing

  // Normalized kernel vector and its first/second derivatives with respect
  // to the phase s (not time).
  Eigen::VectorXd phi(double s) const;
  Eigen::VectorXd phi_prime(double s) const;
  Eigen::VectorXd phi_second(double s) const;

  // All three in one pass; columns [phi, phi', phi''].
  void eval(double s, Eigen::Ref<Eigen::VectorXd> phi_out,
            Eigen::Ref<Eigen::VectorXd> dphi_out,
            Eigen::Ref<Eigen::VectorXd> ddphi_out) const;

  // Boundary/state regressor blocks, K x 3.
  // block_A(s)           = [phi(s), phi'(s), phi''(s)]
  // block_C(s_j, s_prev) = [phi(s_j), phi'(s_j), phi''(s_prev)]
  Eigen::MatrixXd block_A(double s) const;
  Eigen::MatrixXd block_C(double s_j, double s_prev) const;
};

BasisModel new_basis(int K, double a_h = 1.5);

}  // namespace dmpp
