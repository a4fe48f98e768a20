#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmpp/basis.hpp"
#include "dmpp/quaternion.hpp"

namespace dmpp {

struct StateTriplet {
  Eigen::VectorXd y, dy, ddy;
};

enum class DemoKind { position, orientation };

// Recorded demonstration. Orientation demos are stored in rotation-vector
// (log) coordinates after hemisphere alignment; the raw quaternions are kept
// alongside for round-trip output.
struct Demonstration {
  DemoKind kind = DemoKind::position;
  Eigen::VectorXd t;   // m timestamps, strictly increasing, t[0] == 0
  Eigen::MatrixXd Y;   // n x m samples (n == 3 in log space for orientation)
  std::vector<UnitQuaternion> quats;  // orientation only, hemisphere-aligned

  int n() const { return static_cast<int>(Y.rows()); }
  int m() const { return static_cast<int>(Y.cols()); }
  double T_f() const { return t.size() ? t[t.size() - 1] : 0.0; }
};

void validate_demo(const Demonstration& demo);
Demonstration load_demo_csv(const std::string& path);
void save_demo_csv(const Demonstration& demo, const std::string& path);

struct TrainOptions {
  double stiffness = 300.0;
  double damping = -1.0;      // < 0 selects critical damping 2*sqrt(stiffness)
  double p0_reg_rel = 1e-10;  // eigenvalue floor for the curvature normal matrix
};

struct DmpModel {
  DemoKind kind = DemoKind::position;
  BasisModel basis;
  int n = 0;
  double T_f = 1.0;
  Eigen::MatrixXd W0;         // K x n trained weights
  Eigen::MatrixXd stiffness;  // n x n SPD
  Eigen::MatrixXd damping;    // n x n SPD
  Eigen::VectorXd demo_start, demo_goal;

  // Prior covariance of the curvature least-squares problem and its inverse,
  // kept as a consistent pair (see train_ls for the regularization).
  Eigen::MatrixXd P0;
  Eigen::MatrixXd P0_inv;
  int train_samples = 0;
  double p0_reg_rel = 1e-10;
  double train_residual = 0.0;

  // Factor by which the prior was enlarged when its raw scale was normalized
  // away. Per-step state anchors are weighted relative to the prior, so their
  // penalty weights are multiplied by this to keep the anchor-versus-prior
  // balance independent of the normalization.
  double prior_scale = 1.0;

  int K() const { return basis.K; }
};

// Least-squares fit of the reference trajectory weights on a uniform phase
// grid (the demo is resampled if its time spacing is nonuniform), plus the
// curvature-prior covariance used by the online adaptation.
DmpModel train_ls(const Demonstration& demo, int K, double a_h = 1.5,
                  const TrainOptions& opts = {});

// Reference position/velocity/acceleration at phase s for weights W:
//   y_s = W' phi(s), dy_s = W' phi'(s) sdot, ddy_s = W'(phi'' sdot^2 + phi' sddot)
StateTriplet evaluate_reference(const DmpModel& model, const Eigen::MatrixXd& W,
                                double s, double s_dot, double s_ddot);

void save_model_json(const DmpModel& model, const std::string& path);
DmpModel load_model_json(const std::string& path);

}  // namespace dmpp
