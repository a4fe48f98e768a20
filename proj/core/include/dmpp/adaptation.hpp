#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmpp/model.hpp"

namespace dmpp {

enum class ConstraintKind { boundary, goal, via, state };
enum class HistoryMode { preserve_learned, adapt_to_external };

// One weight per constraint class; smaller means harder. Positive values add
// a constraint, the same values negated remove one.
struct EpsilonProfile {
  double boundary_pos = 1e-9;
  double boundary_vel = 1e-7;
  double boundary_acc = 1e-7;
  double via = 1e-7;
  double state_pos = 1e-6;
  double state_vel = 1e-6;
  double state_acc = 1e-4;

  // Relaxed state weights for adapting to noisy external signals.
  static EpsilonProfile external_signal() {
    EpsilonProfile e;
    e.state_pos = 1e-4;
    e.state_vel = 1e-1;
    e.state_acc = 1e-1;
    return e;
  }
};

struct ViaPoint {
  std::string id;
  double s_v = 0.0;           // phase in (0, 1]
  Eigen::VectorXd y_v;        // position the reference must pass through
};

// Weighted equality constraint bundle W' H = Z with diagonal weight r
// (signed: negative removes). Via blocks carry their identity and phase so
// the bookkeeping can match them later.
struct ConstraintBlock {
  ConstraintKind kind = ConstraintKind::state;
  std::string id;
  double via_phase = 0.0;
  Eigen::MatrixXd H;  // K x l
  Eigen::MatrixXd Z;  // n x l
  Eigen::VectorXd r;  // l signed weights
};

ConstraintBlock boundary_block(const DmpModel& model, const Eigen::VectorXd& y0,
                               const EpsilonProfile& eps, double phase = 0.0);
ConstraintBlock goal_block(const DmpModel& model, const Eigen::MatrixXd& goal_triplet,
                           const EpsilonProfile& eps, bool remove = false,
                           double phase = 1.0);
ConstraintBlock via_constraint_block(const DmpModel& model, const ViaPoint& vp,
                                     const EpsilonProfile& eps, bool remove = false);
ConstraintBlock state_block(const DmpModel& model, double s, double s_prev,
                            const Eigen::MatrixXd& Y_triplet, const EpsilonProfile& eps);

struct AdaptationConfig {
  // Minimum phase advance between consecutive state constraints.
  double state_phase_grid = 1e-3;
  // Keep every applied state block so the equivalent batch problem can be
  // reconstructed (test/debug use).
  bool record_blocks = false;
};

struct StepInput {
  double s = 0.0;       // phase at this tick
  double s_prev = 0.0;  // phase one tick earlier (acceleration regressor)
  Eigen::MatrixXd goal;  // n x 3 triplet [g, g', g''] in phase derivatives
  // Measured state in phase-derivative units; consulted only in
  // adapt_to_external mode and only when want_state is set.
  bool want_state = false;
  Eigen::VectorXd y, dy_phase, ddy_phase_prev;
  std::vector<ViaPoint> via_add;
  std::vector<std::string> via_remove;
};

struct StepReport {
  bool state_applied = false;
  bool goal_changed = false;
  int vias_added = 0;
  int vias_removed = 0;
  double state_residual = 0.0;  // residual of the state block right after the step
};

struct Residuals {
  double boundary = 0.0;
  double goal = 0.0;
  double via_max = 0.0;
  std::vector<std::pair<std::string, double>> vias;
  double max_active() const { return std::max(boundary, std::max(goal, via_max)); }
};

// Equivalent one-shot problem: prior (W_prior, P0) plus boundary, goal,
// via-point and per-step state constraints. Solved by batch_solve as an
// oracle for the recursive path.
struct BatchProblem {
  Eigen::VectorXd y0;
  Eigen::MatrixXd W_prior;  // empty selects model.W0
  bool has_goal = true;
  Eigen::MatrixXd goal;     // n x 3
  double boundary_phase = 0.0;  // 1 and 0 swap roles on a reverse pass
  double goal_phase = 1.0;
  std::vector<ViaPoint> vias;
  std::vector<ConstraintBlock> state_blocks;
  EpsilonProfile eps;
};

enum class BatchMethod { penalized, exact_kkt };

// Online constrained least squares over the reference weights.
//
// Internally the state keeps an exact split: a core pair (prior plus
// boundary plus the permanent per-step state constraints, maintained by the
// rank-l covariance recursion) and a removable set (current goal triplet and
// active via-points). The public weights are the core with the removable
// block applied in one update. Weighted blocks combine order-independently,
// so this equals the downdate-then-update recursion exactly while keeping
// removals as exact bookkeeping; a literal covariance downdate of a tightly
// enforced constraint would drown in roundoff at these weights.
class AdaptationState {
 public:
  AdaptationState() = default;

  const Eigen::MatrixXd& W() const { return Wout_; }
  Eigen::MatrixXd P() const;          // covariance with removable block applied
  const Eigen::MatrixXd& W_core() const { return Wc_; }
  const Eigen::MatrixXd& P_core() const;
  int step_index() const { return i_; }
  const std::vector<ViaPoint>& vias() const { return vias_; }
  bool has_goal() const { return has_goal_; }
  const Eigen::MatrixXd& goal() const { return goal_Z_; }
  const EpsilonProfile& eps() const { return eps_; }
  HistoryMode mode() const { return mode_; }
  double boundary_phase() const { return boundary_phase_; }
  double goal_phase() const { return goal_phase_; }
  int K() const { return static_cast<int>(Wc_.rows()); }
  int n() const { return static_cast<int>(Wc_.cols()); }

  // Apply one constraint block. boundary/state blocks are permanent; a goal
  // block replaces the current goal; a via block joins the active set.
  void update(const ConstraintBlock& block);

  // Remove a previously applied goal or via block. Asserts the removable
  // entry exists with matching weights, and that the downdate target
  // -R + H'PH is negative definite up to roundoff. State and boundary
  // blocks cannot be removed.
  void downdate(const ConstraintBlock& block);

  // One execution tick: optional state constraint (gated on phase advance),
  // goal replacement when the target moved, via-point add/remove events.
  StepReport step(const StepInput& in);

  Residuals residuals() const;
  BatchProblem snapshot() const;  // requires record_blocks

  double init_residual = 0.0;

 private:
  friend AdaptationState init_adaptation(const DmpModel&, const Eigen::VectorXd&,
                                         const Eigen::VectorXd&, const EpsilonProfile&,
                                         HistoryMode, const AdaptationConfig&,
                                         const Eigen::MatrixXd*, double);

  // The covariance recursion runs in extended precision: tight weights make
  // the downdate subtract nearly equal quantities, and in double the roundoff
  // would be the same size as the surviving variance.
  using CovMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

  // Reusable buffers for the weighted fold so stepping does not allocate.
  // Regressors are kept transposed (l x K) so the kernels walk contiguous
  // l-blocks.
  struct FoldScratch {
    CovMat Ht, PHt, S, X, R, E, Z, L;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> D, acc;
    Eigen::VectorXd alpha;
  };

  void fold_block(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                  const Eigen::VectorXd& r, const CovMat& P_in, CovMat* P_out,
                  Eigen::MatrixXd& W, FoldScratch& ws, bool strict) const;
  void core_update(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                   const Eigen::VectorXd& r);
  void refresh_output();
  void compute_output(Eigen::MatrixXd& W, Eigen::MatrixXd* P) const;
  void removable_block(Eigen::MatrixXd& H, Eigen::MatrixXd& Z, Eigen::VectorXd& r) const;

  BasisModel basis_;
  EpsilonProfile eps_;
  AdaptationConfig cfg_;
  HistoryMode mode_ = HistoryMode::preserve_learned;

  Eigen::MatrixXd Wc_;         // core weights
  CovMat Pcx_;                 // core covariance (extended precision)
  mutable Eigen::MatrixXd Pc_;        // double copy of Pcx_, made on demand
  mutable bool pc_cached_ = false;
  Eigen::MatrixXd W_prior_;
  Eigen::VectorXd y0_;
  bool has_goal_ = false;
  Eigen::MatrixXd goal_Z_;     // n x 3
  std::vector<ViaPoint> vias_;
  std::vector<Eigen::VectorXd> via_phi_;  // basis columns, aligned with vias_
  double boundary_phase_ = 0.0;
  double goal_phase_ = 1.0;
  double state_weight_scale_ = 1.0;
  Eigen::MatrixXd A0_, A1_;    // cached boundary/goal regressors

  Eigen::MatrixXd Wout_;
  int i_ = 0;
  double last_state_phase_ = 0.0;
  std::vector<ConstraintBlock> state_log_;

  mutable FoldScratch core_ws_, out_ws_;
  mutable Eigen::MatrixXd rem_H_, rem_Z_;   // removable set, rebuilt per refresh
  mutable Eigen::VectorXd rem_r_;
  mutable CovMat out_P_;
  Eigen::MatrixXd step_C_, step_tmp_, step_Y_;  // state-block buffers
  Eigen::VectorXd step_r_;
};

AdaptationState init_adaptation(const DmpModel& model, const Eigen::VectorXd& y0,
                                const Eigen::VectorXd& g0, const EpsilonProfile& eps = {},
                                HistoryMode mode = HistoryMode::preserve_learned,
                                const AdaptationConfig& cfg = {},
                                const Eigen::MatrixXd* W_init = nullptr,
                                double start_phase = 0.0);

// One-shot solution of the accumulated constrained problem. The penalized
// method solves the weighted least-squares stack by QR; exact_kkt enforces
// every constraint exactly and requires the stacked regressors to have full
// column rank.
Eigen::MatrixXd batch_solve(const DmpModel& model, const BatchProblem& prob,
                            BatchMethod method = BatchMethod::penalized);

// Phase assignment for a via-point given without one: densely samples the
// current reference on (s_now, 1] and picks the closest point.
double via_phase_heuristic(const DmpModel& model, const Eigen::MatrixXd& W, double s_now,
                           const Eigen::VectorXd& y_v, int samples = 80);

}  // namespace dmpp
