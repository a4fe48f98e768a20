#include "dmpp/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {

void check_eps(const EpsilonProfile& e) {
  const double vals[] = {e.boundary_pos, e.boundary_vel, e.boundary_acc, e.via,
                         e.state_pos,    e.state_vel,    e.state_acc};
  for (double v : vals) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ArgumentError("constraint weights must be positive and finite");
  }
}

Eigen::MatrixXd triplet_from_position(const Eigen::VectorXd& y) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(y.size(), 3);
  t.col(0) = y;
  return t;
}

bool same_eps(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (std::abs(a[i]) != std::abs(b[i])) return false;
  return true;
}

}  // namespace

ConstraintBlock boundary_block(const DmpModel& model, const Eigen::VectorXd& y0,
                               const EpsilonProfile& eps, double phase) {
  if (y0.size() != model.n) throw ArgumentError("start position has wrong dimension");
  ConstraintBlock b;
  b.kind = ConstraintKind::boundary;
  b.H = model.basis.block_A(phase);
  b.Z = triplet_from_position(y0);
  b.r.resize(3);
  b.r << eps.boundary_pos, eps.boundary_vel, eps.boundary_acc;
  return b;
}

ConstraintBlock goal_block(const DmpModel& model, const Eigen::MatrixXd& goal_triplet,
                           const EpsilonProfile& eps, bool remove, double phase) {
  if (goal_triplet.rows() != model.n || goal_triplet.cols() != 3)
    throw ArgumentError("goal triplet must be n x 3");
  ConstraintBlock b;
  b.kind = ConstraintKind::goal;
  b.H = model.basis.block_A(phase);
  b.Z = goal_triplet;
  b.r.resize(3);
  b.r << eps.boundary_pos, eps.boundary_vel, eps.boundary_acc;
  if (remove) b.r = -b.r;
  return b;
}

ConstraintBlock via_constraint_block(const DmpModel& model, const ViaPoint& vp,
                                     const EpsilonProfile& eps, bool remove) {
  if (vp.y_v.size() != model.n) throw ArgumentError("via-point has wrong dimension");
  if (!(vp.s_v > 0.0) || !(vp.s_v <= 1.0))
    throw ArgumentError("via-point phase must lie in (0, 1]");
  ConstraintBlock b;
  b.kind = ConstraintKind::via;
  b.id = vp.id;
  b.via_phase = vp.s_v;
  b.H = model.basis.phi(vp.s_v);
  b.Z = vp.y_v;
  b.r.resize(1);
  b.r[0] = remove ? -eps.via : eps.via;
  return b;
}

ConstraintBlock state_block(const DmpModel& model, double s, double s_prev,
                            const Eigen::MatrixXd& Y_triplet, const EpsilonProfile& eps) {
  if (Y_triplet.rows() != model.n || Y_triplet.cols() != 3)
    throw ArgumentError("state triplet must be n x 3");
  ConstraintBlock b;
  b.kind = ConstraintKind::state;
  b.H = model.basis.block_C(s, s_prev);
  b.Z = Y_triplet;
  b.r.resize(3);
  b.r << eps.state_pos, eps.state_vel, eps.state_acc;
  b.r *= model.prior_scale;
  return b;
}

namespace {

using AdaptMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Solves L D L^T x = b in place for every column of B, unit lower L.
void ldlt_solve_cols(const AdaptMat& L, const Eigen::Matrix<long double, Eigen::Dynamic, 1>& D,
                     AdaptMat& B) {
  const Eigen::Index l = L.rows();
  const Eigen::Index cols = B.cols();
  long double* bp = B.data();
  for (Eigen::Index j = 0; j < cols; ++j, bp += l) {
    for (Eigen::Index i = 1; i < l; ++i) {
      long double a = bp[i];
      for (Eigen::Index k = 0; k < i; ++k) a -= L(i, k) * bp[k];
      bp[i] = a;
    }
    for (Eigen::Index i = 0; i < l; ++i) bp[i] /= D[i];
    for (Eigen::Index i = l - 2; i >= 0; --i) {
      long double a = bp[i];
      for (Eigen::Index k = i + 1; k < l; ++k) a -= L(k, i) * bp[k];
      bp[i] = a;
    }
  }
}

}  // namespace

// Applies the weighted block (H, Z, r) to W and the covariance in place.
// Gains come from P_in; when P_out is set the covariance correction lands
// there (P_out may alias P_in). Hand-rolled loops: the blocks are K x l with
// l of at most a handful, and the library-level matrix paths spend more time
// packing and blocking than computing at these shapes. Scratch buffers keep
// the hot path free of allocations after the first call.
void AdaptationState::fold_block(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                                 const Eigen::VectorXd& r, const CovMat& P_in,
                                 CovMat* P_out, Eigen::MatrixXd& W, FoldScratch& ws,
                                 bool strict) const {
  const Eigen::Index l = H.cols();
  const Eigen::Index K = H.rows();
  const Eigen::Index nd = Z.rows();

  // Equilibrate the block columns first. Position, slope and curvature
  // regressors differ in norm by factors of K and K^2, which inflates the
  // gain matrix condition number for no reason; dividing column c by |H_c|
  // and its weight by |H_c|^2 is the same constraint in better coordinates.
  ws.alpha.resize(l);
  for (Eigen::Index c = 0; c < l; ++c) {
    const double a = H.col(c).norm();
    ws.alpha[c] = a > 0.0 ? 1.0 / a : 1.0;
  }
  ws.Ht = (H * ws.alpha.asDiagonal()).transpose().cast<long double>();
  ws.Z = (Z * ws.alpha.asDiagonal()).cast<long double>();
  const long double* Ht = ws.Ht.data();

  // PHt(c, j) = (P H)(j, c); P is symmetric, so column j doubles as row j.
  ws.PHt.resize(l, K);
  ws.acc.resize(2 * l);
  {
    const long double* Pp = P_in.data();
    long double* a0 = ws.acc.data();
    long double* a1 = a0 + l;
    for (Eigen::Index j = 0; j < K; ++j) {
      for (Eigen::Index c = 0; c < l; ++c) a0[c] = a1[c] = 0.0L;
      const long double* pj = Pp + j * K;
      Eigen::Index k = 0;
      for (; k + 1 < K; k += 2) {
        const long double p0 = pj[k];
        const long double p1 = pj[k + 1];
        const long double* h0 = Ht + k * l;
        for (Eigen::Index c = 0; c < l; ++c) {
          a0[c] += h0[c] * p0;
          a1[c] += h0[l + c] * p1;
        }
      }
      if (k < K) {
        const long double p0 = pj[k];
        const long double* h0 = Ht + k * l;
        for (Eigen::Index c = 0; c < l; ++c) a0[c] += h0[c] * p0;
      }
      long double* out = ws.PHt.data() + j * l;
      for (Eigen::Index c = 0; c < l; ++c) out[c] = a0[c] + a1[c];
    }
  }

  // S = H^T P H + diag(r), built symmetric.
  ws.S.resize(l, l);
  for (Eigen::Index c = 0; c < l; ++c)
    for (Eigen::Index d = 0; d <= c; ++d) {
      long double a = 0.0L;
      const long double* ph = ws.PHt.data() + c;
      const long double* hh = Ht + d;
      for (Eigen::Index k = 0; k < K; ++k) a += ph[k * l] * hh[k * l];
      ws.S(c, d) = a;
      ws.S(d, c) = a;
    }
  for (Eigen::Index c = 0; c < l; ++c)
    ws.S(c, c) += static_cast<long double>(r[c] * ws.alpha[c] * ws.alpha[c]);

  // Unpivoted LDLT; S is positive definite whenever the weights are sane.
  ws.L.resize(l, l);
  ws.D.resize(l);
  for (Eigen::Index j = 0; j < l; ++j) {
    long double dj = ws.S(j, j);
    for (Eigen::Index k = 0; k < j; ++k) dj -= ws.L(j, k) * ws.L(j, k) * ws.D[k];
    ws.D[j] = dj;
    for (Eigen::Index i = j + 1; i < l; ++i) {
      long double a = ws.S(i, j);
      for (Eigen::Index k = 0; k < j; ++k) a -= ws.L(i, k) * ws.L(j, k) * ws.D[k];
      ws.L(i, j) = a / dj;
    }
  }
  const long double dmin = ws.D.minCoeff();
  const long double dmax = ws.D.maxCoeff();
  if (!std::isfinite(static_cast<double>(dmax)) || !std::isfinite(static_cast<double>(dmin)))
    throw ConditioningError("constraint gain factorization failed");
  if (!(dmin > 0.0L))
    throw ConditioningError("constraint gain matrix is not positive definite");
  if (strict && dmax / dmin > 1e15L)
    throw ConditioningError("constraint gain matrix is numerically singular; relax weights");

  // Gain solve with one refinement pass.
  ws.X = ws.PHt;
  ldlt_solve_cols(ws.L, ws.D, ws.X);
  ws.R.resize(l, K);
  for (Eigen::Index j = 0; j < K; ++j) {
    const long double* b = ws.PHt.data() + j * l;
    const long double* x = ws.X.data() + j * l;
    long double* rr = ws.R.data() + j * l;
    for (Eigen::Index c = 0; c < l; ++c) {
      long double a = b[c];
      for (Eigen::Index d = 0; d < l; ++d) a -= ws.S(c, d) * x[d];
      rr[c] = a;
    }
  }
  ldlt_solve_cols(ws.L, ws.D, ws.R);
  ws.X += ws.R;

  // E = Z - W^T H on the equilibrated block, before W moves.
  ws.E.resize(nd, l);
  for (Eigen::Index c = 0; c < l; ++c)
    for (Eigen::Index d = 0; d < nd; ++d) {
      long double a = 0.0L;
      const double* wd = W.data() + d * K;
      const long double* hc = Ht + c;
      for (Eigen::Index i = 0; i < K; ++i) a += hc[i * l] * static_cast<long double>(wd[i]);
      ws.E(d, c) = ws.Z(d, c) - a;
    }

  // W += X^T E^T
  for (Eigen::Index d = 0; d < nd; ++d) {
    long double* ed = ws.acc.data();
    for (Eigen::Index c = 0; c < l; ++c) ed[c] = ws.E(d, c);
    double* wd = W.data() + d * K;
    const long double* Xp = ws.X.data();
    for (Eigen::Index i = 0; i < K; ++i) {
      long double a = 0.0L;
      const long double* xi = Xp + i * l;
      for (Eigen::Index c = 0; c < l; ++c) a += xi[c] * ed[c];
      wd[i] += static_cast<double>(a);
    }
  }

  // P -= X^T (P H)^T, lower triangle then mirrored so symmetry is exact.
  if (P_out) {
    if (P_out != &P_in) *P_out = P_in;
    long double* Pp = P_out->data();
    const long double* Xp = ws.X.data();
    long double* ph = ws.acc.data();
    for (Eigen::Index j = 0; j < K; ++j) {
      const long double* phj = ws.PHt.data() + j * l;
      for (Eigen::Index c = 0; c < l; ++c) ph[c] = phj[c];
      long double* pj = Pp + j * K;
      for (Eigen::Index i = j; i < K; ++i) {
        long double a = 0.0L;
        const long double* xi = Xp + i * l;
        for (Eigen::Index c = 0; c < l; ++c) a += xi[c] * ph[c];
        pj[i] -= a;
      }
    }
    for (Eigen::Index j = 0; j < K; ++j) {
      const long double* pj = Pp + j * K;
      for (Eigen::Index i = j + 1; i < K; ++i) Pp[i * K + j] = pj[i];
    }
  }
}

void AdaptationState::core_update(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                                  const Eigen::VectorXd& r) {
  if (H.cols() == 0) return;
  if (r.minCoeff() <= 0.0) throw ArgumentError("update weights must be positive");
  fold_block(H, Z, r, Pcx_, &Pcx_, Wc_, core_ws_, true);
  pc_cached_ = false;
  // A non-finite covariance entry always reaches the diagonal through the
  // symmetric rank update, so scanning the diagonal is enough here.
  if (!Wc_.allFinite() || !Pcx_.diagonal().allFinite())
    throw ConditioningError("weight update produced non-finite values");
}

void AdaptationState::removable_block(Eigen::MatrixXd& H, Eigen::MatrixXd& Z,
                                      Eigen::VectorXd& r) const {
  const Eigen::Index K = Wc_.rows();
  const Eigen::Index nd = Wc_.cols();
  const Eigen::Index l = (has_goal_ ? 3 : 0) + static_cast<Eigen::Index>(vias_.size());
  H.resize(K, l);
  Z.resize(nd, l);
  r.resize(l);
  Eigen::Index c = 0;
  if (has_goal_) {
    H.middleCols(c, 3) = A1_;
    Z.middleCols(c, 3) = goal_Z_;
    r.segment(c, 3) << eps_.boundary_pos, eps_.boundary_vel, eps_.boundary_acc;
    c += 3;
  }
  for (std::size_t v = 0; v < vias_.size(); ++v) {
    H.col(c) = via_phi_[v];
    Z.col(c) = vias_[v].y_v;
    r[c] = eps_.via;
    ++c;
  }
}

void AdaptationState::compute_output(Eigen::MatrixXd& W, Eigen::MatrixXd* P) const {
  removable_block(rem_H_, rem_Z_, rem_r_);
  W = Wc_;
  if (rem_H_.cols() == 0) {
    if (P) *P = P_core();
    return;
  }
  if (!P) {
    fold_block(rem_H_, rem_Z_, rem_r_, Pcx_, nullptr, W, out_ws_, false);
  } else {
    fold_block(rem_H_, rem_Z_, rem_r_, Pcx_, &out_P_, W, out_ws_, false);
    *P = out_P_.cast<double>();
  }
}

const Eigen::MatrixXd& AdaptationState::P_core() const {
  if (!pc_cached_) {
    Pc_ = Pcx_.cast<double>();
    pc_cached_ = true;
  }
  return Pc_;
}

void AdaptationState::refresh_output() {
  compute_output(Wout_, nullptr);
}

Eigen::MatrixXd AdaptationState::P() const {
  Eigen::MatrixXd W, P;
  compute_output(W, &P);
  return P;
}

void AdaptationState::update(const ConstraintBlock& block) {
  if (block.H.rows() != Wc_.rows() || block.Z.rows() != Wc_.cols() ||
      block.H.cols() != block.Z.cols() || block.r.size() != block.H.cols())
    throw ArgumentError("constraint block has inconsistent shapes");
  if (block.r.size() > 0 && block.r.minCoeff() <= 0.0)
    throw ArgumentError("update requires positive weights; use downdate to remove");

  switch (block.kind) {
    case ConstraintKind::boundary:
    case ConstraintKind::state:
      core_update(block.H, block.Z, block.r);
      if (cfg_.record_blocks && block.kind == ConstraintKind::state)
        state_log_.push_back(block);
      break;
    case ConstraintKind::goal:
      goal_Z_ = block.Z;
      has_goal_ = true;
      break;
    case ConstraintKind::via: {
      for (const ViaPoint& vp : vias_)
        if (vp.id == block.id)
          throw ArgumentError("via-point id already active: " + block.id);
      ViaPoint vp;
      vp.id = block.id;
      vp.s_v = block.via_phase;
      vp.y_v = block.Z.col(0);
      vias_.push_back(std::move(vp));
      via_phi_.push_back(block.H.col(0));
      break;
    }
  }
  refresh_output();
}

void AdaptationState::downdate(const ConstraintBlock& block) {
  if (block.r.size() == 0 || block.r.maxCoeff() >= 0.0)
    throw ArgumentError("downdate requires negative weights");

  // Validate the removable entry exists and matches before touching state.
  Eigen::VectorXd expected;
  switch (block.kind) {
    case ConstraintKind::boundary:
    case ConstraintKind::state:
      throw DowndateError("state and boundary constraints are permanent");
    case ConstraintKind::goal: {
      if (!has_goal_) throw DowndateError("no goal constraint is active");
      if (block.Z.rows() != goal_Z_.rows() || block.Z.cols() != 3 ||
          (block.Z - goal_Z_).cwiseAbs().maxCoeff() != 0.0)
        throw DowndateError("goal downdate does not match the active goal");
      if (block.H.rows() != A1_.rows() || (block.H - A1_).cwiseAbs().maxCoeff() != 0.0)
        throw DowndateError("goal downdate regressors do not match the goal phase");
      expected.resize(3);
      expected << eps_.boundary_pos, eps_.boundary_vel, eps_.boundary_acc;
      break;
    }
    case ConstraintKind::via: {
      auto it = std::find_if(vias_.begin(), vias_.end(),
                             [&](const ViaPoint& vp) { return vp.id == block.id; });
      if (it == vias_.end())
        throw DowndateError("via-point not active: " + block.id);
      if (std::abs(it->s_v - block.via_phase) != 0.0 ||
          (it->y_v - block.Z.col(0)).cwiseAbs().maxCoeff() != 0.0)
        throw DowndateError("via downdate does not match the active via-point");
      expected.resize(1);
      expected[0] = eps_.via;
      break;
    }
  }
  if (!same_eps(block.r, expected))
    throw DowndateError("downdate weights do not match the applied constraint");

  // The removable entry is present by construction, so -R + H'PH evaluated
  // on the full covariance must be negative definite up to roundoff.
  Eigen::MatrixXd Wfull, Pfull;
  compute_output(Wfull, &Pfull);
  Eigen::MatrixXd S = block.H.transpose() * Pfull * block.H;
  const double scale = S.cwiseAbs().maxCoeff();
  S.diagonal() += block.r;  // negative entries
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()));
  const double noise = 1e-8 * (1.0 + scale);
  if (es.eigenvalues().maxCoeff() > noise)
    throw DowndateError("downdate target is not negative definite");

  if (block.kind == ConstraintKind::goal) {
    has_goal_ = false;
  } else {
    auto it = std::find_if(vias_.begin(), vias_.end(),
                           [&](const ViaPoint& vp) { return vp.id == block.id; });
    via_phi_.erase(via_phi_.begin() + (it - vias_.begin()));
    vias_.erase(it);
  }
  refresh_output();
}

StepReport AdaptationState::step(const StepInput& in) {
  StepReport rep;
  ++i_;
  if (!std::isfinite(in.s) || !std::isfinite(in.s_prev))
    throw ArgumentError("step phases must be finite");
  if (in.goal.rows() != Wc_.cols() || in.goal.cols() != 3)
    throw ArgumentError("step goal triplet must be n x 3");

  // Decide on the state constraint first and, in preserve mode, capture the
  // current reference before anything else moves this tick.
  const bool gate_open = std::abs(in.s - last_state_phase_) >= cfg_.state_phase_grid;
  bool apply_state = in.want_state && gate_open;
  if (apply_state) {
    step_C_.resize(Wc_.rows(), 3);
    step_tmp_.resize(Wc_.rows(), 2);
    basis_.eval(in.s, step_C_.col(0), step_C_.col(1), step_tmp_.col(0));
    basis_.eval(in.s_prev, step_tmp_.col(0), step_tmp_.col(1), step_C_.col(2));
    if (mode_ == HistoryMode::preserve_learned) {
      step_Y_.noalias() = Wout_.transpose().lazyProduct(step_C_);
    } else {
      if (in.y.size() != Wc_.cols() || in.dy_phase.size() != Wc_.cols() ||
          in.ddy_phase_prev.size() != Wc_.cols())
        throw ArgumentError("measured state has wrong dimension");
      step_Y_.resize(Wc_.cols(), 3);
      step_Y_.col(0) = in.y;
      step_Y_.col(1) = in.dy_phase;
      step_Y_.col(2) = in.ddy_phase_prev;
    }
  }

  for (const std::string& id : in.via_remove) {
    auto it = std::find_if(vias_.begin(), vias_.end(),
                           [&](const ViaPoint& vp) { return vp.id == id; });
    if (it == vias_.end()) throw DowndateError("via-point not active: " + id);
    via_phi_.erase(via_phi_.begin() + (it - vias_.begin()));
    vias_.erase(it);
    ++rep.vias_removed;
  }

  if (apply_state) {
    step_r_.resize(3);
    step_r_ << eps_.state_pos, eps_.state_vel, eps_.state_acc;
    step_r_ *= state_weight_scale_;
    core_update(step_C_, step_Y_, step_r_);
    last_state_phase_ = in.s;
    rep.state_applied = true;
    if (cfg_.record_blocks) {
      ConstraintBlock b;
      b.kind = ConstraintKind::state;
      b.H = step_C_;
      b.Z = step_Y_;
      b.r = step_r_;
      state_log_.push_back(std::move(b));
    }
  }

  // Replace the goal only when the target actually moved; an unchanged goal
  // entry contributes identically, so skipping the swap is exact.
  if (!has_goal_ || goal_Z_.rows() != in.goal.rows() ||
      (goal_Z_.array() != in.goal.array()).any()) {
    goal_Z_ = in.goal;
    has_goal_ = true;
    rep.goal_changed = true;
  }

  for (const ViaPoint& vp : in.via_add) {
    if (!(vp.s_v > 0.0) || !(vp.s_v <= 1.0))
      throw ArgumentError("via-point phase must lie in (0, 1]");
    if (vp.y_v.size() != Wc_.cols())
      throw ArgumentError("via-point has wrong dimension");
    for (const ViaPoint& old : vias_)
      if (old.id == vp.id) throw ArgumentError("via-point id already active: " + vp.id);
    via_phi_.push_back(basis_.phi(vp.s_v));
    vias_.push_back(vp);
    ++rep.vias_added;
  }

  refresh_output();
  if (apply_state)
    rep.state_residual =
        (Wout_.transpose().lazyProduct(step_C_) - step_Y_).cwiseAbs().maxCoeff();
  return rep;
}

Residuals AdaptationState::residuals() const {
  Residuals res;
  Eigen::MatrixXd Y0 = triplet_from_position(y0_);
  res.boundary = (Wout_.transpose() * A0_ - Y0).cwiseAbs().maxCoeff();
  if (has_goal_)
    res.goal = (Wout_.transpose() * A1_ - goal_Z_).cwiseAbs().maxCoeff();
  for (const ViaPoint& vp : vias_) {
    const double r = (Wout_.transpose() * basis_.phi(vp.s_v) - vp.y_v).cwiseAbs().maxCoeff();
    res.vias.emplace_back(vp.id, r);
    res.via_max = std::max(res.via_max, r);
  }
  return res;
}

BatchProblem AdaptationState::snapshot() const {
  if (!cfg_.record_blocks)
    throw ArgumentError("snapshot requires record_blocks");
  BatchProblem prob;
  prob.y0 = y0_;
  prob.W_prior = W_prior_;
  prob.has_goal = has_goal_;
  prob.goal = goal_Z_;
  prob.boundary_phase = boundary_phase_;
  prob.goal_phase = goal_phase_;
  prob.vias = vias_;
  prob.state_blocks = state_log_;
  prob.eps = eps_;
  return prob;
}

AdaptationState init_adaptation(const DmpModel& model, const Eigen::VectorXd& y0,
                                const Eigen::VectorXd& g0, const EpsilonProfile& eps,
                                HistoryMode mode, const AdaptationConfig& cfg,
                                const Eigen::MatrixXd* W_init, double start_phase) {
  check_eps(eps);
  if (y0.size() != model.n || g0.size() != model.n)
    throw ArgumentError("start/goal dimension does not match the model");
  if (!y0.allFinite() || !g0.allFinite())
    throw ArgumentError("start/goal must be finite");
  if (model.P0.rows() != model.K())
    throw ArgumentError("model is missing its initial covariance");
  if (start_phase != 0.0 && start_phase != 1.0)
    throw ArgumentError("start phase must be 0 (forward) or 1 (reverse)");

  AdaptationState st;
  st.basis_ = model.basis;
  st.eps_ = eps;
  st.cfg_ = cfg;
  st.mode_ = mode;
  st.state_weight_scale_ = model.prior_scale;
  if (W_init) {
    if (W_init->rows() != model.K() || W_init->cols() != model.n)
      throw ArgumentError("initial weights have wrong shape");
    st.Wc_ = *W_init;
  } else {
    st.Wc_ = model.W0;
  }
  st.W_prior_ = st.Wc_;
  st.Pcx_ = model.P0.cast<long double>();
  st.Pc_ = model.P0;
  st.pc_cached_ = true;
  st.y0_ = y0;
  st.boundary_phase_ = start_phase;
  st.goal_phase_ = 1.0 - start_phase;
  st.A0_ = model.basis.block_A(st.boundary_phase_);
  st.A1_ = model.basis.block_A(st.goal_phase_);
  st.last_state_phase_ = start_phase;

  ConstraintBlock b0 = boundary_block(model, y0, eps, st.boundary_phase_);
  st.core_update(b0.H, b0.Z, b0.r);

  st.goal_Z_ = triplet_from_position(g0);
  st.has_goal_ = true;
  st.refresh_output();
  st.init_residual = st.residuals().max_active();
  return st;
}

namespace {

// Stacks the penalized problem as weighted least-squares rows and solves by
// QR. Forming normal equations instead would square the already high
// condition number of the tight-weight rows.
Eigen::MatrixXd solve_penalized(const DmpModel& model, const BatchProblem& prob,
                                const Eigen::MatrixXd& W_prior) {
  const int K = model.K();
  const int n = model.n;
  Eigen::Index rows = K + 3 + (prob.has_goal ? 3 : 0) +
                      static_cast<Eigen::Index>(prob.vias.size());
  for (const ConstraintBlock& b : prob.state_blocks) rows += b.H.cols();

  Eigen::MatrixXd M(rows, K);
  Eigen::MatrixXd B(rows, n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.P0_inv);
  if (es.info() != Eigen::Success)
    throw OracleError("prior precision eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd sqrtPinv =
      es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  M.topRows(K) = sqrtPinv;
  B.topRows(K) = sqrtPinv * W_prior;
  Eigen::Index row = K;

  auto add_cols = [&](const Eigen::MatrixXd& H, const Eigen::MatrixXd& Z,
                      const Eigen::VectorXd& r) {
    for (Eigen::Index c = 0; c < H.cols(); ++c) {
      const double w = 1.0 / std::sqrt(r[c]);
      M.row(row) = w * H.col(c).transpose();
      B.row(row) = w * Z.col(c).transpose();
      ++row;
    }
  };

  ConstraintBlock b0 = boundary_block(model, prob.y0, prob.eps, prob.boundary_phase);
  add_cols(b0.H, b0.Z, b0.r);
  if (prob.has_goal) {
    ConstraintBlock bg = goal_block(model, prob.goal, prob.eps, false, prob.goal_phase);
    add_cols(bg.H, bg.Z, bg.r);
  }
  for (const ViaPoint& vp : prob.vias) {
    ConstraintBlock bv = via_constraint_block(model, vp, prob.eps);
    add_cols(bv.H, bv.Z, bv.r);
  }
  for (const ConstraintBlock& b : prob.state_blocks) add_cols(b.H, b.Z, b.r);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  if (qr.rank() < K) throw OracleError("penalized stack is rank deficient");
  Eigen::MatrixXd W = qr.solve(B);
  if (!W.allFinite()) throw OracleError("penalized solve produced non-finite weights");
  return W;
}

Eigen::MatrixXd solve_exact(const DmpModel& model, const BatchProblem& prob,
                            const Eigen::MatrixXd& W_prior) {
  const int K = model.K();
  const int n = model.n;
  Eigen::Index l = 3 + (prob.has_goal ? 3 : 0) +
                   static_cast<Eigen::Index>(prob.vias.size());
  for (const ConstraintBlock& b : prob.state_blocks) l += b.H.cols();
  if (l > K) throw OracleError("more hard constraints than basis functions");

  Eigen::MatrixXd H(K, l);
  Eigen::MatrixXd Z(n, l);
  Eigen::Index c = 0;
  auto put = [&](const Eigen::MatrixXd& Hb, const Eigen::MatrixXd& Zb) {
    H.middleCols(c, Hb.cols()) = Hb;
    Z.middleCols(c, Zb.cols()) = Zb;
    c += Hb.cols();
  };
  ConstraintBlock b0 = boundary_block(model, prob.y0, prob.eps, prob.boundary_phase);
  put(b0.H, b0.Z);
  if (prob.has_goal) {
    ConstraintBlock bg = goal_block(model, prob.goal, prob.eps, false, prob.goal_phase);
    put(bg.H, bg.Z);
  }
  for (const ViaPoint& vp : prob.vias) {
    ConstraintBlock bv = via_constraint_block(model, vp, prob.eps);
    put(bv.H, bv.Z);
  }
  for (const ConstraintBlock& b : prob.state_blocks) put(b.H, b.Z);

  Eigen::MatrixXd PH = model.P0 * H;
  Eigen::MatrixXd S = H.transpose() * PH;
  S = 0.5 * (S + S.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw OracleError("constraint Gram factorization failed");
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw OracleError("hard constraints are rank deficient for this prior");
  Eigen::MatrixXd Sinv = es.eigenvectors() *
                         es.eigenvalues().cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
  Eigen::MatrixXd E = Z - W_prior.transpose() * H;
  Eigen::MatrixXd W = W_prior + PH * Sinv * E.transpose();
  if (!W.allFinite()) throw OracleError("exact solve produced non-finite weights");
  return W;
}

}  // namespace

Eigen::MatrixXd batch_solve(const DmpModel& model, const BatchProblem& prob,
                            BatchMethod method) {
  if (prob.y0.size() != model.n) throw ArgumentError("batch start has wrong dimension");
  if (prob.has_goal && (prob.goal.rows() != model.n || prob.goal.cols() != 3))
    throw ArgumentError("batch goal triplet must be n x 3");
  Eigen::MatrixXd W_prior = prob.W_prior.size() > 0 ? prob.W_prior : model.W0;
  if (W_prior.rows() != model.K() || W_prior.cols() != model.n)
    throw ArgumentError("batch prior weights have wrong shape");
  switch (method) {
    case BatchMethod::penalized:
      return solve_penalized(model, prob, W_prior);
    case BatchMethod::exact_kkt:
      return solve_exact(model, prob, W_prior);
  }
  throw ArgumentError("unknown batch method");
}

double via_phase_heuristic(const DmpModel& model, const Eigen::MatrixXd& W, double s_now,
                           const Eigen::VectorXd& y_v, int samples) {
  if (samples < 1) throw ArgumentError("samples must be positive");
  if (y_v.size() != model.n) throw ArgumentError("via-point has wrong dimension");
  if (s_now >= 1.0) return 1.0;
  const double lo = std::max(s_now, 0.0);
  double best_s = 1.0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= samples; ++k) {
    const double s = lo + (1.0 - lo) * k / samples;
    const double d = (W.transpose() * model.basis.phi(s) - y_v).norm();
    if (d < best_d) {
      best_d = d;
      best_s = s;
    }
  }
  return best_s;
}

}  // namespace dmpp
