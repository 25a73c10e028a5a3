#include "mfomo/game.hpp"

#include "mfomo/game_zoo.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace mfomo {

double fd_step(const Mat& L_t) {
  return 1e-6 * std::max(1.0, L_t.cwiseAbs().maxCoeff());
}

Mat clamp_slice(const Mat& L_t) {
  return L_t.cwiseMax(0.0).cwiseMin(1.0);
}

Mat GameModel::reward_jacobian(int t, const Mat& L_t) const {
  const int sa = S() * A();
  const double h = fd_step(L_t);
  Mat J(sa, sa);
  for (int a = 0; a < A(); ++a) {
    for (int s = 0; s < S(); ++s) {
      Mat Lp = L_t, Lm = L_t;
      Lp(s, a) += h;
      Lm(s, a) -= h;
      J.col(flat_sa(s, a, S())) =
          (mat_to_vec(reward(t, Lp)) - mat_to_vec(reward(t, Lm))) / (2.0 * h);
    }
  }
  return J;
}

std::vector<Mat> GameModel::transition_jacobian(int t, const Mat& L_t) const {
  const int sa = S() * A();
  const double h = fd_step(L_t);
  std::vector<Mat> J(sa);
  for (int a = 0; a < A(); ++a) {
    for (int s = 0; s < S(); ++s) {
      Mat Lp = L_t, Lm = L_t;
      Lp(s, a) += h;
      Lm(s, a) -= h;
      J[flat_sa(s, a, S())] =
          (kernel_to_w(transition(t, Lp)) - kernel_to_w(transition(t, Lm))) / (2.0 * h);
    }
  }
  return J;
}

void GameModel::linear_reward_payload(std::vector<Mat>&, std::vector<Mat>&) const {
  throw std::logic_error("linear_reward_payload: game does not declare linear rewards");
}

std::string GameModel::to_json() const {
  throw std::logic_error("to_json: game is not serializable");
}

FiniteMdp induced_mdp(const GameModel& g, const Flow& L) {
  if (static_cast<int>(L.size()) != g.T() + 1)
    throw std::invalid_argument("induced_mdp: flow length != T+1");
  FiniteMdp m;
  m.S = g.S();
  m.A = g.A();
  m.T = g.T();
  m.mu0 = g.mu0();
  m.P.reserve(m.T);
  m.r.reserve(m.T + 1);
  for (int t = 0; t <= m.T; ++t) {
    const Mat Lc = clamp_slice(L[t]);
    if (t < m.T) m.P.push_back(g.transition(t, Lc));
    m.r.push_back(g.reward(t, Lc));
  }
  return m;
}

Flow propagate_flow(const GameModel& g, const PolicySequence& pi) {
  const int S = g.S(), A = g.A(), T = g.T();
  Flow L(static_cast<std::size_t>(T) + 1);
  L[0] = g.mu0().asDiagonal() * pi.pi[0];
  for (int t = 0; t < T; ++t) {
    const TransitionKernel kernel = g.transition(t, clamp_slice(L[t]));
    Vec marginal = Vec::Zero(S);
    for (int a = 0; a < A; ++a) marginal += kernel[a].transpose() * L[t].col(a);
    L[t + 1] = marginal.asDiagonal() * pi.pi[t + 1];
  }
  return L;
}

double exploitability(const GameModel& g, const PolicySequence& pi) {
  const Flow L = propagate_flow(g, pi);
  const FiniteMdp m = induced_mdp(g, L);
  const double best = initial_value(m, value_iteration(m).V);
  const double mine = initial_value(m, policy_evaluation(m, pi).V);
  double e = best - mine;
  if (e < 0.0 && e >= -1e-10) e = 0.0;
  return e;
}

NashReport verify_nash(const GameModel& g, const PolicySequence& pi, const Flow& L,
                       double tol) {
  NashReport rep;
  const Flow gamma = propagate_flow(g, pi);
  for (std::size_t t = 0; t < L.size(); ++t)
    rep.consistency_residual += (gamma[t] - L[t]).cwiseAbs().sum();
  rep.optimality_gap = exploitability(g, pi);
  rep.is_nash = rep.consistency_residual <= tol && rep.optimality_gap <= tol;
  return rep;
}

double flow_inf1_norm(const std::vector<TransitionKernel>& p_diff) {
  double norm = 0.0;
  for (const TransitionKernel& kernel : p_diff)
    for (const Mat& Pa : kernel)
      for (Eigen::Index s = 0; s < Pa.rows(); ++s)
        norm = std::max(norm, Pa.row(s).cwiseAbs().sum());
  return norm;
}

double flow_1inf_norm(const std::vector<Mat>& x_diff) {
  double norm = 0.0;
  for (const Mat& xt : x_diff) norm += xt.cwiseAbs().maxCoeff();
  return norm;
}

double weak_monotonicity_witness(const GameModel& g, const Flow& L1, const Flow& L2) {
  double acc = 0.0;
  for (int t = 0; t <= g.T(); ++t) {
    const Mat dr = g.reward(t, clamp_slice(L1[t])) - g.reward(t, clamp_slice(L2[t]));
    acc += (dr.array() * (L1[t] - L2[t]).array()).sum();
  }
  return acc;
}

std::pair<double, double> estimate_lipschitz_constants(const GameModel& g, int samples,
                                                       std::uint64_t seed) {
  Rng rng(seed);
  const int S = g.S(), A = g.A(), T = g.T();
  auto random_slice = [&]() {
    Mat L(S, A);
    for (int a = 0; a < A; ++a)
      for (int s = 0; s < S; ++s) L(s, a) = exp_sample(rng);
    return Mat(L / L.sum());
  };
  double cp = 0.0, cr = 0.0;
  for (int k = 0; k < samples; ++k) {
    const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(T + 1));
    const Mat L1 = random_slice(), L2 = random_slice();
    const double dl = (L1 - L2).cwiseAbs().sum();
    if (dl < 1e-12) continue;
    const Mat dr = g.reward(t, L1) - g.reward(t, L2);
    cr = std::max(cr, dr.cwiseAbs().maxCoeff() / dl);
    if (t < T) {
      const TransitionKernel k1 = g.transition(t, L1), k2 = g.transition(t, L2);
      for (int a = 0; a < A; ++a)
        for (int s = 0; s < S; ++s)
          cp = std::max(cp, (k1[a].row(s) - k2[a].row(s)).cwiseAbs().sum() / dl);
    }
  }
  return {1.5 * cp, 1.5 * cr};
}

// ---------------------------------------------------------------------------
// TabularGame

TabularGame::TabularGame(FiniteMdp mdp) : mdp_(std::move(mdp)) {
  mdp_.validate(1e-9);
  r_max_ = mdp_.r_max();
}

Mat TabularGame::reward_jacobian(int, const Mat&) const {
  return Mat::Zero(mdp_.S * mdp_.A, mdp_.S * mdp_.A);
}

std::vector<Mat> TabularGame::transition_jacobian(int, const Mat&) const {
  return std::vector<Mat>(static_cast<std::size_t>(mdp_.S) * mdp_.A,
                          Mat::Zero(mdp_.S, mdp_.S * mdp_.A));
}

void TabularGame::linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const {
  rbar = mdp_.r;
  Rbar.assign(static_cast<std::size_t>(mdp_.T) + 1,
              Mat::Zero(mdp_.S * mdp_.A, mdp_.S * mdp_.A));
}

// ---------------------------------------------------------------------------
// LinearRewardGame

LinearRewardGame::LinearRewardGame(FiniteMdp dynamics, std::vector<Mat> rbar,
                                   std::vector<Mat> Rbar, double r_max)
    : mdp_(std::move(dynamics)), Rbar_(std::move(Rbar)), r_max_(r_max) {
  mdp_.r = std::move(rbar);
  mdp_.validate(1e-9);
  if (static_cast<int>(Rbar_.size()) != mdp_.T + 1)
    throw std::invalid_argument("LinearRewardGame: Rbar size");
  for (const Mat& R : Rbar_)
    if (R.rows() != mdp_.S * mdp_.A || R.cols() != mdp_.S * mdp_.A)
      throw std::invalid_argument("LinearRewardGame: Rbar shape");
}

Mat LinearRewardGame::reward(int t, const Mat& L_t) const {
  return mdp_.r[t] + vec_to_mat(Rbar_[t] * mat_to_vec(L_t), mdp_.S, mdp_.A);
}

std::vector<Mat> LinearRewardGame::transition_jacobian(int, const Mat&) const {
  return std::vector<Mat>(static_cast<std::size_t>(mdp_.S) * mdp_.A,
                          Mat::Zero(mdp_.S, mdp_.S * mdp_.A));
}

void LinearRewardGame::linear_reward_payload(std::vector<Mat>& rbar,
                                             std::vector<Mat>& Rbar) const {
  rbar = mdp_.r;
  Rbar = Rbar_;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    json row = json::array();
    for (Eigen::Index a = 0; a < m.cols(); ++a) row.push_back(m(s, a));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  for (int s = 0; s < rows; ++s)
    for (int a = 0; a < cols; ++a) m(s, a) = j.at(s).at(a).get<double>();
  return m;
}

Vec vec_from_json(const json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
  return v;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

void renormalize_rows(Mat& m) {
  for (Eigen::Index s = 0; s < m.rows(); ++s) {
    m.row(s) = m.row(s).cwiseMax(0.0);
    const double sum = m.row(s).sum();
    if (sum > 0.0) m.row(s) /= sum;
  }
}

FiniteMdp dynamics_from_json(const json& doc, bool renormalize) {
  FiniteMdp m;
  m.S = doc.at("S").get<int>();
  m.A = doc.at("A").get<int>();
  m.T = doc.at("T").get<int>();
  m.mu0 = vec_from_json(doc.at("mu0"));
  if (renormalize) {
    m.mu0 = m.mu0.cwiseMax(0.0);
    if (m.mu0.sum() > 0.0) m.mu0 /= m.mu0.sum();
  }
  const json& Pj = doc.at("transitions");
  for (int t = 0; t < m.T; ++t) {
    TransitionKernel kernel;
    for (int a = 0; a < m.A; ++a) {
      Mat Pa = mat_from_json(Pj.at(t).at(a));
      if (renormalize) renormalize_rows(Pa);
      kernel.push_back(Pa);
    }
    m.P.push_back(kernel);
  }
  const json& rj = doc.at("rewards");
  for (int t = 0; t <= m.T; ++t) m.r.push_back(mat_from_json(rj.at(t)));
  return m;
}

json dynamics_to_json(const FiniteMdp& m) {
  json doc;
  doc["S"] = m.S;
  doc["A"] = m.A;
  doc["T"] = m.T;
  doc["mu0"] = vec_to_json(m.mu0);
  json Pj = json::array();
  for (int t = 0; t < m.T; ++t) {
    json per_t = json::array();
    for (int a = 0; a < m.A; ++a) per_t.push_back(mat_to_json(m.P[t][a]));
    Pj.push_back(per_t);
  }
  doc["transitions"] = Pj;
  json rj = json::array();
  for (int t = 0; t <= m.T; ++t) rj.push_back(mat_to_json(m.r[t]));
  doc["rewards"] = rj;
  return doc;
}

}  // namespace

std::string TabularGame::to_json() const {
  json doc = dynamics_to_json(mdp_);
  doc["type"] = "tabular";
  return doc.dump(2);
}

std::string LinearRewardGame::to_json() const {
  json doc = dynamics_to_json(mdp_);
  doc["type"] = "tabular_linear";
  json slopes = json::array();
  for (const Mat& R : Rbar_) slopes.push_back(mat_to_json(R));
  doc["reward_slopes"] = slopes;
  doc["r_max"] = r_max_;
  return doc.dump(2);
}

std::unique_ptr<GameModel> game_from_json_text(const std::string& text, bool renormalize) {
  const json doc = json::parse(text);
  const std::string type = doc.at("type").get<std::string>();
  if (type == "tabular") {
    return std::make_unique<TabularGame>(dynamics_from_json(doc, renormalize));
  }
  if (type == "tabular_linear") {
    FiniteMdp dyn = dynamics_from_json(doc, renormalize);
    std::vector<Mat> rbar = dyn.r;
    std::vector<Mat> Rbar;
    for (const json& R : doc.at("reward_slopes")) Rbar.push_back(mat_from_json(R));
    double r_max = 0.0;
    if (doc.contains("r_max")) {
      r_max = doc.at("r_max").get<double>();
    } else {
      // |rbar| + max row coefficient is a valid bound on the simplex.
      for (int t = 0; t <= dyn.T; ++t)
        for (int i = 0; i < dyn.S * dyn.A; ++i)
          r_max = std::max(r_max, std::abs(mat_to_vec(rbar[t])(i)) +
                                      Rbar[static_cast<std::size_t>(t)].row(i).cwiseAbs().maxCoeff());
    }
    return std::make_unique<LinearRewardGame>(std::move(dyn), std::move(rbar),
                                              std::move(Rbar), r_max);
  }
  if (type == "builtin") {
    return builtin_game_from_json(doc.at("name").get<std::string>(),
                                  doc.contains("params") ? doc.at("params").dump() : "{}");
  }
  throw std::invalid_argument("game_from_json_text: unknown type '" + type + "'");
}

std::unique_ptr<GameModel> game_from_json_file(const std::string& path, bool renormalize) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("game_from_json_file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return game_from_json_text(ss.str(), renormalize);
}

}  // namespace mfomo
