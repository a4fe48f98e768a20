#include "dmpp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dmpp/errors.hpp"

namespace dmpp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    // trim spaces
    size_t a = cur.find_first_not_of(" \t\r");
    size_t b = cur.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cur.substr(a, b - a + 1));
  }
  return out;
}

double parse_double(const std::string& tok, const std::string& ctx) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + tok + "' in " + ctx);
  }
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

// Eigenvalue-floored inverse of the curvature normal matrix. The normalized
// kernels sum to one, so their second derivatives sum to zero and the raw
// matrix always has the all-ones vector in its null space; the floor keeps
// the prior finite along that direction.
void compute_p0(const BasisModel& basis, int m, double reg_rel, Eigen::MatrixXd& P0,
                Eigen::MatrixXd& P0_inv, double& prior_scale) {
  const int K = basis.K;
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd p(K), dp(K), ddp(K);
  for (int j = 0; j < m; ++j) {
    const double s = static_cast<double>(j) / (m - 1);
    basis.eval(s, p, dp, ddp);
    N.noalias() += ddp * ddp.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N);
  if (es.info() != Eigen::Success) throw TrainingError("curvature prior: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lam_max = lam[K - 1];
  if (!(lam_max > 0.0)) throw TrainingError("curvature prior: normal matrix has no positive spectrum");
  const double floor = lam_max * reg_rel;
  Eigen::VectorXd lam_f(K), lam_inv(K);
  for (int i = 0; i < K; ++i) {
    lam_f[i] = std::max(lam[i], floor);
    lam_inv[i] = 1.0 / lam_f[i];
  }
  const double cond = lam_f[K - 1] / lam_f[0];
  if (cond > 1e12) {
    std::cerr << "dmpp: curvature prior condition number " << cond << " exceeds 1e12\n";
  }
  P0 = es.eigenvectors() * lam_inv.asDiagonal() * es.eigenvectors().transpose();
  P0_inv = es.eigenvectors() * lam_f.asDiagonal() * es.eigenvectors().transpose();
  P0 = 0.5 * (P0 + P0.transpose()).eval();
  P0_inv = 0.5 * (P0_inv + P0_inv.transpose()).eval();

  // The raw inverse-curvature scale shrinks like 1/(m K^3), which would let
  // the prior overpower later penalized updates in the slope and curvature
  // directions. Rescale so the median slope variance on the grid is one; the
  // adaptation equations are invariant to the choice of prior scale.
  std::vector<double> qv(m);
  for (int j = 0; j < m; ++j) {
    const double s = static_cast<double>(j) / (m - 1);
    basis.eval(s, p, dp, ddp);
    qv[j] = dp.dot(P0 * dp);
  }
  std::nth_element(qv.begin(), qv.begin() + m / 2, qv.end());
  double scale = qv[m / 2];
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    scale = P0.trace() / K;
  }
  prior_scale = 1.0;
  if (scale > 0.0 && std::isfinite(scale)) {
    P0 /= scale;
    P0_inv *= scale;
    prior_scale = 1.0 / scale;
  }
}

Demonstration resample_uniform(const Demonstration& demo) {
  const int m = demo.m();
  const double T = demo.T_f();
  const double dt_ref = T / (m - 1);
  bool uniform = true;
  for (int j = 0; j + 1 < m; ++j) {
    if (std::abs(demo.t[j + 1] - demo.t[j] - dt_ref) > 1e-9 * T) {
      uniform = false;
      break;
    }
  }
  if (uniform) return demo;
  Demonstration out = demo;
  out.t = Eigen::VectorXd::LinSpaced(m, 0.0, T);
  out.Y.resize(demo.n(), m);
  int seg = 0;
  for (int j = 0; j < m; ++j) {
    const double tj = out.t[j];
    while (seg + 2 < m && demo.t[seg + 1] < tj) ++seg;
    const double t0 = demo.t[seg], t1 = demo.t[seg + 1];
    const double a = (tj - t0) / (t1 - t0);
    out.Y.col(j) = (1.0 - a) * demo.Y.col(seg) + a * demo.Y.col(seg + 1);
  }
  return out;
}

}  // namespace

void validate_demo(const Demonstration& demo) {
  if (demo.m() < 2) throw ArgumentError("demonstration needs at least 2 samples");
  if (demo.t.size() != demo.m()) throw ArgumentError("demonstration: timestamp count mismatch");
  if (demo.t[0] != 0.0) throw ArgumentError("demonstration: timestamps must start at 0");
  for (int j = 0; j + 1 < demo.m(); ++j) {
    if (!(demo.t[j + 1] > demo.t[j])) throw ArgumentError("demonstration: timestamps must be strictly increasing");
  }
  if (!demo.t.allFinite() || !demo.Y.allFinite()) throw ArgumentError("demonstration: non-finite samples");
  if (demo.kind == DemoKind::orientation && demo.n() != 3) {
    throw ArgumentError("orientation demonstration must be 3-dimensional in log space");
  }
}

DmpModel train_ls(const Demonstration& demo_in, int K, double a_h, const TrainOptions& opts) {
  validate_demo(demo_in);
  if (demo_in.m() < K) throw TrainingError("training needs at least K samples");
  if (!(opts.stiffness > 0.0)) throw ArgumentError("train_ls: stiffness must be positive");

  const Demonstration demo = resample_uniform(demo_in);
  const int m = demo.m();
  const int n = demo.n();

  DmpModel model;
  model.kind = demo.kind;
  model.basis = new_basis(K, a_h);
  model.n = n;
  model.T_f = demo.T_f();
  model.train_samples = m;
  model.p0_reg_rel = opts.p0_reg_rel;

  Eigen::MatrixXd Phi_t(m, K);  // rows phi(s_j)'
  Eigen::VectorXd p(K), dp(K), ddp(K);
  for (int j = 0; j < m; ++j) {
    const double s = static_cast<double>(j) / (m - 1);
    model.basis.eval(s, p, dp, ddp);
    Phi_t.row(j) = p.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi_t);
  if (qr.rank() < K) {
    throw TrainingError("basis regressors are rank deficient (K too large for this grid)");
  }
  model.W0 = qr.solve(demo.Y.transpose());
  model.train_residual = (Phi_t * model.W0 - demo.Y.transpose()).array().abs().maxCoeff();

  compute_p0(model.basis, m, opts.p0_reg_rel, model.P0, model.P0_inv, model.prior_scale);

  const double kd = opts.damping >= 0.0 ? opts.damping : 2.0 * std::sqrt(opts.stiffness);
  model.stiffness = opts.stiffness * Eigen::MatrixXd::Identity(n, n);
  model.damping = kd * Eigen::MatrixXd::Identity(n, n);
  model.demo_start = demo.Y.col(0);
  model.demo_goal = demo.Y.col(m - 1);
  return model;
}

StateTriplet evaluate_reference(const DmpModel& model, const Eigen::MatrixXd& W, double s,
                                double s_dot, double s_ddot) {
  if (W.rows() != model.K() || W.cols() != model.n) {
    throw ArgumentError("evaluate_reference: weight matrix has wrong shape");
  }
  Eigen::VectorXd p(model.K()), dp(model.K()), ddp(model.K());
  model.basis.eval(s, p, dp, ddp);
  StateTriplet out;
  out.y = W.transpose() * p;
  out.dy = (W.transpose() * dp) * s_dot;
  out.ddy = W.transpose() * (ddp * s_dot * s_dot + dp * s_ddot);
  return out;
}

Demonstration load_demo_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open demo file " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError("empty demo file " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 2 || lower(header[0]) != "t") {
    throw ParseError("demo header must start with 't': " + path);
  }
  const bool orientation = header.size() == 5 && lower(header[1]) == "qw" && lower(header[2]) == "qx" &&
                           lower(header[3]) == "qy" && lower(header[4]) == "qz";

  std::vector<double> times;
  std::vector<Eigen::VectorXd> rows;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto toks = split_csv_line(line);
    if (toks.size() != header.size()) {
      throw ParseError("demo " + path + ": line " + std::to_string(lineno) + " has " +
                       std::to_string(toks.size()) + " fields, expected " + std::to_string(header.size()));
    }
    const std::string ctx = path + ":" + std::to_string(lineno);
    times.push_back(parse_double(toks[0], ctx));
    Eigen::VectorXd v(header.size() - 1);
    for (size_t c = 1; c < toks.size(); ++c) v[c - 1] = parse_double(toks[c], ctx);
    rows.push_back(v);
  }
  if (rows.size() < 2) throw ParseError("demo " + path + ": needs at least 2 samples");

  Demonstration demo;
  const int m = static_cast<int>(rows.size());
  demo.t.resize(m);
  const double t0 = times[0];
  for (int j = 0; j < m; ++j) demo.t[j] = times[j] - t0;

  if (orientation) {
    demo.kind = DemoKind::orientation;
    demo.quats.resize(m);
    demo.Y.resize(3, m);
    UnitQuaternion prev;
    for (int j = 0; j < m; ++j) {
      UnitQuaternion q{rows[j][0], rows[j][1], rows[j][2], rows[j][3]};
      if (q.norm() < 1e-6) throw ParseError("demo " + path + ": near-zero quaternion sample");
      q = q.normalized();
      if (j > 0 && q.dot(prev) < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
      prev = q;
      demo.quats[j] = q;
      demo.Y.col(j) = quat_log(q);
    }
  } else {
    demo.kind = DemoKind::position;
    const int n = static_cast<int>(header.size()) - 1;
    demo.Y.resize(n, m);
    for (int j = 0; j < m; ++j) demo.Y.col(j) = rows[j];
  }
  validate_demo(demo);
  return demo;
}

void save_demo_csv(const Demonstration& demo, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write demo file " + path);
  f.precision(12);
  if (demo.kind == DemoKind::orientation) {
    f << "t,qw,qx,qy,qz\n";
    for (int j = 0; j < demo.m(); ++j) {
      const UnitQuaternion& q = demo.quats[j];
      f << demo.t[j] << ',' << q.w << ',' << q.x << ',' << q.y << ',' << q.z << '\n';
    }
  } else {
    f << 't';
    for (int i = 0; i < demo.n(); ++i) f << ",y" << i + 1;
    f << '\n';
    for (int j = 0; j < demo.m(); ++j) {
      f << demo.t[j];
      for (int i = 0; i < demo.n(); ++i) f << ',' << demo.Y(i, j);
      f << '\n';
    }
  }
}

namespace {
nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) throw ParseError("model json: " + name + " must be a non-empty array");
  const size_t cols = j[0].size();
  Eigen::MatrixXd M(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != cols) throw ParseError("model json: ragged rows in " + name);
    for (size_t c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}
}  // namespace

void save_model_json(const DmpModel& model, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = model.kind == DemoKind::orientation ? "orientation" : "position";
  j["basis"] = {{"K", model.K()}, {"a_h", model.basis.a_h}};
  j["n"] = model.n;
  j["T_f"] = model.T_f;
  j["W0"] = matrix_to_json(model.W0);
  j["stiffness"] = matrix_to_json(model.stiffness);
  j["damping"] = matrix_to_json(model.damping);
  j["demo_start"] = std::vector<double>(model.demo_start.data(), model.demo_start.data() + model.n);
  j["demo_goal"] = std::vector<double>(model.demo_goal.data(), model.demo_goal.data() + model.n);
  j["train_samples"] = model.train_samples;
  j["p0_reg_rel"] = model.p0_reg_rel;
  j["train_residual"] = model.train_residual;
  std::ofstream f(path);
  if (!f) throw IoError("cannot write model file " + path);
  f << j.dump(2) << '\n';
}

DmpModel load_model_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open model file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ParseError("model json " + path + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != 1) throw ParseError("model json: unsupported schema_version");
    DmpModel model;
    model.kind = j.at("kind").get<std::string>() == "orientation" ? DemoKind::orientation : DemoKind::position;
    model.basis = new_basis(j.at("basis").at("K").get<int>(), j.at("basis").at("a_h").get<double>());
    model.n = j.at("n").get<int>();
    model.T_f = j.at("T_f").get<double>();
    model.W0 = matrix_from_json(j.at("W0"), "W0");
    model.stiffness = matrix_from_json(j.at("stiffness"), "stiffness");
    model.damping = matrix_from_json(j.at("damping"), "damping");
    const auto ds = j.at("demo_start").get<std::vector<double>>();
    const auto dg = j.at("demo_goal").get<std::vector<double>>();
    model.demo_start = Eigen::Map<const Eigen::VectorXd>(ds.data(), ds.size());
    model.demo_goal = Eigen::Map<const Eigen::VectorXd>(dg.data(), dg.size());
    model.train_samples = j.at("train_samples").get<int>();
    model.p0_reg_rel = j.at("p0_reg_rel").get<double>();
    model.train_residual = j.value("train_residual", 0.0);
    if (model.W0.rows() != model.K() || model.W0.cols() != model.n) {
      throw ParseError("model json: W0 shape mismatch");
    }
    compute_p0(model.basis, model.train_samples, model.p0_reg_rel, model.P0, model.P0_inv, model.prior_scale);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model json " + path + ": " + e.what());
  }
}

}  // namespace dmpp
