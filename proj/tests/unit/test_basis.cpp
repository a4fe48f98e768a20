#include "dmpp/basis.hpp"

#include <gtest/gtest.h>

#include "dmpp/errors.hpp"

namespace dmpp {
namespace {

TEST(Basis, PartitionOfUnity) {
  for (int K : {2, 10, 30, 80}) {
    BasisModel b = new_basis(K);
    for (int j = 0; j <= 50; ++j) {
      const double s = j / 50.0;
      EXPECT_NEAR(b.phi(s).sum(), 1.0, 1e-12) << "K=" << K << " s=" << s;
      // Derivatives of a constant sum vanish; scale the tolerance by the
      // kernel slope magnitude.
      const double scale1 = b.phi_prime(s).cwiseAbs().maxCoeff() + 1.0;
      const double scale2 = b.phi_second(s).cwiseAbs().maxCoeff() + 1.0;
      EXPECT_LE(std::abs(b.phi_prime(s).sum()), 1e-12 * scale1);
      EXPECT_LE(std::abs(b.phi_second(s).sum()), 1e-10 * scale2);
    }
  }
}

TEST(Basis, DerivativesMatchFiniteDifferences) {
  BasisModel b = new_basis(25);
  const double h = 1e-6;
  for (double s : {0.05, 0.31, 0.5, 0.77, 0.95}) {
    Eigen::VectorXd fd1 = (b.phi(s + h) - b.phi(s - h)) / (2 * h);
    Eigen::VectorXd fd2 = (b.phi_prime(s + h) - b.phi_prime(s - h)) / (2 * h);
    const double scale1 = fd1.cwiseAbs().maxCoeff() + 1.0;
    const double scale2 = fd2.cwiseAbs().maxCoeff() + 1.0;
    EXPECT_LE((b.phi_prime(s) - fd1).cwiseAbs().maxCoeff(), 1e-5 * scale1) << s;
    EXPECT_LE((b.phi_second(s) - fd2).cwiseAbs().maxCoeff(), 1e-4 * scale2) << s;
  }
}

TEST(Basis, EvalAgreesWithSingleShots) {
  BasisModel b = new_basis(12);
  Eigen::VectorXd p(12), dp(12), ddp(12);
  for (double s : {0.0, 0.33, 1.0, 1.02, -0.01}) {
    b.eval(s, p, dp, ddp);
    EXPECT_EQ((p - b.phi(s)).norm(), 0.0);
    EXPECT_EQ((dp - b.phi_prime(s)).norm(), 0.0);
    EXPECT_EQ((ddp - b.phi_second(s)).norm(), 0.0);
  }
}

TEST(Basis, RegressorBlocks) {
  BasisModel b = new_basis(9);
  Eigen::MatrixXd A = b.block_A(0.4);
  EXPECT_EQ(A.rows(), 9);
  EXPECT_EQ(A.cols(), 3);
  EXPECT_EQ((A.col(0) - b.phi(0.4)).norm(), 0.0);
  EXPECT_EQ((A.col(1) - b.phi_prime(0.4)).norm(), 0.0);
  EXPECT_EQ((A.col(2) - b.phi_second(0.4)).norm(), 0.0);

  Eigen::MatrixXd C = b.block_C(0.4, 0.38);
  EXPECT_EQ((C.col(0) - b.phi(0.4)).norm(), 0.0);
  EXPECT_EQ((C.col(1) - b.phi_prime(0.4)).norm(), 0.0);
  EXPECT_EQ((C.col(2) - b.phi_second(0.38)).norm(), 0.0);
}

TEST(Basis, CenterLayout) {
  BasisModel b = new_basis(16);
  EXPECT_EQ(b.centers.size(), 16);
  EXPECT_DOUBLE_EQ(b.centers[0], 0.0);
  EXPECT_DOUBLE_EQ(b.centers[15], 1.0);
  for (int i = 1; i < 16; ++i) EXPECT_GT(b.centers[i], b.centers[i - 1]);
  EXPECT_TRUE((b.widths.array() > 0.0).all());
}

TEST(Basis, RejectsBadArguments) {
  EXPECT_THROW(new_basis(1), ArgumentError);
  EXPECT_THROW(new_basis(0), ArgumentError);
  EXPECT_THROW(new_basis(10, 0.0), ArgumentError);
  EXPECT_THROW(new_basis(10, -1.0), ArgumentError);
}

}  // namespace
}  // namespace dmpp
