#include "mfomo/game_zoo.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>

using nlohmann::json;

namespace mfomo {
namespace {

Vec uniform_dist(int n) { return Vec::Constant(n, 1.0 / n); }

// ---------------------------------------------------------------------------
// Congregation game

class CongregationGame final : public GameModel {
 public:
  explicit CongregationGame(CongregationParams p) : p_(std::move(p)) {
    n_ = static_cast<int>(p_.r.size());
    if (n_ <= 0) throw std::invalid_argument("congregation_game: empty payoff vector");
    if (p_.T < 0) throw std::invalid_argument("congregation_game: negative horizon");
    if (p_.C.size() == 0) p_.C = Vec::Zero(std::max(p_.T, 1));
    if (p_.C.size() < p_.T)
      throw std::invalid_argument("congregation_game: C must have an entry per time step");
    if (p_.mu0.size() == 0) p_.mu0 = uniform_dist(n_);
    if (p_.mu0.size() != n_) throw std::invalid_argument("congregation_game: mu0 size");
  }

  int S() const override { return n_; }
  int A() const override { return n_; }
  int T() const override { return p_.T; }
  const Vec& mu0() const override { return p_.mu0; }
  double r_max() const override { return p_.r.cwiseAbs().maxCoeff(); }

  TransitionKernel transition(int t, const Mat& L) const override {
    TransitionKernel kernel(n_, Mat::Zero(n_, n_));
    if (t == 0) {
      // Deterministically move to the chosen site.
      for (int j = 0; j < n_; ++j) kernel[j].col(j).setOnes();
      return kernel;
    }
    const double C = p_.C(t);
    for (int i = 0; i < n_; ++i) {
      const double D = deviation(L, i);
      const double Q = 1.0 + n_ * C * D;
      for (int j = 0; j < n_; ++j)
        for (int i2 = 0; i2 < n_; ++i2)
          kernel[j](i, i2) = ((i2 == j ? 1.0 : 0.0) + C * D) / Q;
    }
    return kernel;
  }

  Mat reward(int t, const Mat& L) const override {
    Mat r = Mat::Zero(n_, n_);
    if (t == 0) return r;
    for (int i = 0; i < n_; ++i)
      r(i, i) = p_.r(i) * (1.0 - 0.5 * deviation(L, i));
    return r;
  }

  Mat reward_jacobian(int t, const Mat& L) const override {
    const int sa = n_ * n_;
    Mat J = Mat::Zero(sa, sa);
    if (t == 0) return J;
    for (int i = 0; i < n_; ++i) {
      const int row = flat_sa(i, i, n_);
      for (int k = 0; k < sa; ++k) {
        const double Ek = (k == flat_sa(i, i, n_)) ? 1.0 : 0.0;
        J(row, k) = -p_.r(i) * (mat_to_vec(L)(k) - Ek);
      }
    }
    return J;
  }

  std::vector<Mat> transition_jacobian(int t, const Mat& L) const override {
    const int sa = n_ * n_;
    std::vector<Mat> J(sa, Mat::Zero(n_, sa));
    if (t == 0) return J;
    const double C = p_.C(t);
    const Vec l = mat_to_vec(L);
    for (int i = 0; i < n_; ++i) {
      const double D = deviation(L, i);
      const double Q = 1.0 + n_ * C * D;
      for (int k = 0; k < sa; ++k) {
        const double Ek = (k == flat_sa(i, i, n_)) ? 1.0 : 0.0;
        const double dD = 2.0 * (l(k) - Ek);
        for (int j = 0; j < n_; ++j)
          for (int i2 = 0; i2 < n_; ++i2)
            J[k](i2, flat_sa(i, j, n_)) =
                C * (1.0 - (i2 == j ? n_ : 0.0)) / (Q * Q) * dD;
      }
    }
    return J;
  }

  std::optional<double> transition_lipschitz() const override {
    double cmax = 0.0;
    for (int t = 1; t < p_.T; ++t) cmax = std::max(cmax, p_.C(t));
    return 4.0 * (n_ - 1) * cmax;
  }
  std::optional<double> reward_lipschitz() const override { return r_max(); }

  std::string to_json() const override {
    json params;
    params["r"] = std::vector<double>(p_.r.data(), p_.r.data() + n_);
    params["C"] = std::vector<double>(p_.C.data(), p_.C.data() + p_.C.size());
    params["T"] = p_.T;
    params["mu0"] = std::vector<double>(p_.mu0.data(), p_.mu0.data() + n_);
    json doc{{"type", "builtin"}, {"name", "congregation"}, {"params", params}};
    return doc.dump(2);
  }

  const CongregationParams& params() const { return p_; }

 private:
  // || L - point mass at (i, i) ||_F^2
  double deviation(const Mat& L, int i) const {
    return mat_to_vec(L).squaredNorm() - 2.0 * L(i, i) + 1.0;
  }

  CongregationParams p_;
  int n_ = 0;
};

// ---------------------------------------------------------------------------
// SIS epidemic game

class SisGame final : public GameModel {
 public:
  explicit SisGame(SisParams p) : p_(std::move(p)) {
    if (p_.T < 0) throw std::invalid_argument("sis_game: negative horizon");
    if (p_.infection_rate < 0.0 || p_.infection_rate > 1.0)
      throw std::invalid_argument("sis_game: infection_rate outside [0,1]");
    if (p_.recovery_rate < 0.0 || p_.recovery_rate > 1.0)
      throw std::invalid_argument("sis_game: recovery_rate outside [0,1]");
    if (p_.mu0.size() == 0) {
      p_.mu0 = Vec(2);
      p_.mu0 << 0.9, 0.1;
    }
    if (p_.mu0.size() != 2) throw std::invalid_argument("sis_game: mu0 size");
    reward_ = Mat(2, 2);
    reward_(0, 0) = 0.0;
    reward_(0, 1) = -p_.distancing_cost;
    reward_(1, 0) = -p_.infection_cost;
    reward_(1, 1) = -p_.infection_cost - p_.distancing_cost;
  }

  int S() const override { return 2; }
  int A() const override { return 2; }
  int T() const override { return p_.T; }
  const Vec& mu0() const override { return p_.mu0; }
  double r_max() const override { return p_.distancing_cost + p_.infection_cost; }

  TransitionKernel transition(int, const Mat& L) const override {
    const double infected = L(1, 0) + L(1, 1);
    const double p = std::clamp(p_.infection_rate * infected, 0.0, 1.0);
    TransitionKernel kernel(2, Mat::Zero(2, 2));
    kernel[0] << 1.0 - p, p, p_.recovery_rate, 1.0 - p_.recovery_rate;  // go out
    kernel[1] << 1.0, 0.0, p_.recovery_rate, 1.0 - p_.recovery_rate;    // distance
    return kernel;
  }

  Mat reward(int, const Mat&) const override { return reward_; }
  Mat reward_jacobian(int, const Mat&) const override { return Mat::Zero(4, 4); }

  std::vector<Mat> transition_jacobian(int, const Mat& L) const override {
    std::vector<Mat> J(4, Mat::Zero(2, 4));
    const double infected = L(1, 0) + L(1, 1);
    const double p = p_.infection_rate * infected;
    if (p > 0.0 && p < 1.0) {
      // Only the susceptible/go-out column of W moves with the infected mass.
      for (int k : {flat_sa(1, 0, 2), flat_sa(1, 1, 2)}) {
        J[k](0, flat_sa(0, 0, 2)) = -p_.infection_rate;
        J[k](1, flat_sa(0, 0, 2)) = p_.infection_rate;
      }
    }
    return J;
  }

  bool mean_field_independent_dynamics() const override { return p_.infection_rate == 0.0; }
  bool linear_rewards() const override { return true; }
  void linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const override {
    rbar.assign(static_cast<std::size_t>(p_.T) + 1, reward_);
    Rbar.assign(static_cast<std::size_t>(p_.T) + 1, Mat::Zero(4, 4));
  }

  std::optional<double> transition_lipschitz() const override {
    return 2.0 * p_.infection_rate;
  }
  std::optional<double> reward_lipschitz() const override { return 0.0; }

  std::string to_json() const override {
    json params{{"infection_rate", p_.infection_rate},
                {"recovery_rate", p_.recovery_rate},
                {"distancing_cost", p_.distancing_cost},
                {"infection_cost", p_.infection_cost},
                {"T", p_.T},
                {"mu0", std::vector<double>(p_.mu0.data(), p_.mu0.data() + 2)}};
    json doc{{"type", "builtin"}, {"name", "sis"}, {"params", params}};
    return doc.dump(2);
  }

 private:
  SisParams p_;
  Mat reward_;
};

// ---------------------------------------------------------------------------
// Random smooth game

class RandomGame final : public GameModel {
 public:
  explicit RandomGame(RandomGameParams p) : p_(std::move(p)) {
    if (p_.S <= 0 || p_.A <= 0 || p_.T < 0)
      throw std::invalid_argument("random_game: bad dimensions");
    const int sa = p_.S * p_.A;
    Rng rng(p_.seed);
    mu0_ = Vec(p_.S);
    for (int s = 0; s < p_.S; ++s) mu0_(s) = exp_sample(rng);
    mu0_ /= mu0_.sum();

    const double knob = p_.lipschitz_knob;
    auto fill = [&](Mat& m, int rows, int cols, double scale) {
      m.resize(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = scale * uniform_pm1(rng);
    };
    c0_.resize(p_.T + 1);
    C1_.resize(p_.T + 1);
    C2_.resize(p_.T + 1);
    for (int t = 0; t <= p_.T; ++t) {
      fill(c0_[t], p_.S, p_.A, 1.0);
      fill(C1_[t], sa, sa, knob);
      fill(C2_[t], sa, sa, knob);
    }
    B0_.resize(p_.T);
    B1_.resize(p_.T);
    for (int t = 0; t < p_.T; ++t) {
      fill(B0_[t], p_.S, sa, 1.0);
      B1_[t].resize(sa);
      for (int i = 0; i < sa; ++i) fill(B1_[t][i], p_.S, sa, knob);
    }

    r_max_ = 0.0;
    for (int t = 0; t <= p_.T; ++t)
      for (int i = 0; i < sa; ++i) {
        const double c1m = sa > 0 ? C1_[t].row(i).cwiseAbs().maxCoeff() : 0.0;
        const double c2m = sa > 0 ? C2_[t].row(i).cwiseAbs().maxCoeff() : 0.0;
        r_max_ = std::max(r_max_, std::abs(mat_to_vec(c0_[t])(i)) + c1m + 0.5 * c2m * c2m);
      }

    const auto [cp, cr] = estimate_lipschitz_constants(*this, 200, p_.seed ^ 0x9e3779b97f4a7c15ull);
    cp_ = cp;
    cr_ = cr;
  }

  int S() const override { return p_.S; }
  int A() const override { return p_.A; }
  int T() const override { return p_.T; }
  const Vec& mu0() const override { return mu0_; }
  double r_max() const override { return r_max_; }

  Mat reward(int t, const Mat& L) const override {
    const Vec l = mat_to_vec(L);
    const Vec lin = C1_[t] * l;
    const Vec quad = C2_[t] * l;
    Mat r(p_.S, p_.A);
    for (int a = 0; a < p_.A; ++a)
      for (int s = 0; s < p_.S; ++s) {
        const int i = flat_sa(s, a, p_.S);
        r(s, a) = c0_[t](s, a) + lin(i) + 0.5 * quad(i) * quad(i);
      }
    return r;
  }

  Mat reward_jacobian(int t, const Mat& L) const override {
    const Vec quad = C2_[t] * mat_to_vec(L);
    Mat J = C1_[t];
    for (int i = 0; i < p_.S * p_.A; ++i) J.row(i) += quad(i) * C2_[t].row(i);
    return J;
  }

  TransitionKernel transition(int t, const Mat& L) const override {
    const Vec l = mat_to_vec(L);
    TransitionKernel kernel(p_.A, Mat(p_.S, p_.S));
    for (int a = 0; a < p_.A; ++a)
      for (int s = 0; s < p_.S; ++s) {
        const int i = flat_sa(s, a, p_.S);
        Vec g = B0_[t].col(i) + B1_[t][i] * l;
        g.array() -= g.maxCoeff();
        Vec e = g.array().exp();
        kernel[a].row(s) = (e / e.sum()).transpose();
      }
    return kernel;
  }

  std::vector<Mat> transition_jacobian(int t, const Mat& L) const override {
    const int sa = p_.S * p_.A;
    const Vec l = mat_to_vec(L);
    std::vector<Mat> J(sa, Mat::Zero(p_.S, sa));
    for (int i = 0; i < sa; ++i) {
      Vec g = B0_[t].col(i) + B1_[t][i] * l;
      g.array() -= g.maxCoeff();
      Vec prob = g.array().exp();
      prob /= prob.sum();
      // d softmax: p_s2 (b_{s2,k} - sum_u p_u b_{u,k})
      const Vec avg = B1_[t][i].transpose() * prob;  // length sa
      for (int k = 0; k < sa; ++k)
        for (int s2 = 0; s2 < p_.S; ++s2)
          J[k](s2, i) = prob(s2) * (B1_[t][i](s2, k) - avg(k));
    }
    return J;
  }

  bool mean_field_independent_dynamics() const override { return p_.lipschitz_knob == 0.0; }
  bool linear_rewards() const override { return p_.lipschitz_knob == 0.0; }
  void linear_reward_payload(std::vector<Mat>& rbar, std::vector<Mat>& Rbar) const override {
    if (p_.lipschitz_knob != 0.0)
      throw std::logic_error("random_game: rewards are nonlinear unless the knob is 0");
    rbar = c0_;
    Rbar.assign(static_cast<std::size_t>(p_.T) + 1,
                Mat::Zero(p_.S * p_.A, p_.S * p_.A));
  }

  std::optional<double> transition_lipschitz() const override { return cp_; }
  std::optional<double> reward_lipschitz() const override { return cr_; }

  std::string to_json() const override {
    json params{{"S", p_.S}, {"A", p_.A}, {"T", p_.T}, {"seed", p_.seed},
                {"lipschitz_knob", p_.lipschitz_knob}};
    json doc{{"type", "builtin"}, {"name", "random"}, {"params", params}};
    return doc.dump(2);
  }

 private:
  RandomGameParams p_;
  Vec mu0_;
  std::vector<Mat> c0_, C1_, C2_;     // reward coefficients per t
  std::vector<Mat> B0_;               // logit constants per t (W layout)
  std::vector<std::vector<Mat>> B1_;  // logit slopes per t and (s,a)
  double r_max_ = 0.0, cp_ = 0.0, cr_ = 0.0;
};

}  // namespace

std::unique_ptr<GameModel> congregation_game(const CongregationParams& p) {
  return std::make_unique<CongregationGame>(p);
}

NashCandidate congregation_nash(const CongregationParams& p, int j_star) {
  const int n = static_cast<int>(p.r.size());
  if (j_star < 0 || j_star >= n) throw std::invalid_argument("congregation_nash: bad site");
  if (p.r(j_star) < p.r.maxCoeff() - 1e-12)
    std::cerr << "warning: congregation_nash at non-argmax site " << j_star
              << " is not an equilibrium\n";
  NashCandidate ne;
  ne.j_star = j_star;
  Mat pure = Mat::Zero(n, n);
  pure.col(j_star).setOnes();
  ne.pi.pi.assign(static_cast<std::size_t>(p.T) + 1, pure);
  Vec mu0 = p.mu0.size() ? p.mu0 : uniform_dist(n);
  ne.L.assign(static_cast<std::size_t>(p.T) + 1, Mat::Zero(n, n));
  ne.L[0].col(j_star) = mu0;
  for (int t = 1; t <= p.T; ++t) ne.L[t](j_star, j_star) = 1.0;
  return ne;
}

std::unique_ptr<GameModel> sis_game(const SisParams& p) {
  return std::make_unique<SisGame>(p);
}

std::unique_ptr<GameModel> random_game(const RandomGameParams& p) {
  return std::make_unique<RandomGame>(p);
}

std::unique_ptr<GameModel> builtin_game_from_json(const std::string& name,
                                                  const std::string& params_json) {
  const json params = json::parse(params_json);
  auto get_vec = [&](const char* key) {
    Vec v;
    if (params.contains(key)) {
      const auto& arr = params.at(key);
      v.resize(static_cast<Eigen::Index>(arr.size()));
      for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
    }
    return v;
  };

  if (name == "congregation") {
    CongregationParams p;
    p.r = get_vec("r");
    p.T = params.at("T").get<int>();
    if (params.contains("C") && params.at("C").is_number()) {
      p.C = Vec::Constant(std::max(p.T, 1), params.at("C").get<double>());
    } else {
      p.C = get_vec("C");
    }
    p.mu0 = get_vec("mu0");
    return congregation_game(p);
  }
  if (name == "sis") {
    SisParams p;
    if (params.contains("infection_rate")) p.infection_rate = params.at("infection_rate").get<double>();
    if (params.contains("recovery_rate")) p.recovery_rate = params.at("recovery_rate").get<double>();
    if (params.contains("distancing_cost")) p.distancing_cost = params.at("distancing_cost").get<double>();
    if (params.contains("infection_cost")) p.infection_cost = params.at("infection_cost").get<double>();
    if (params.contains("T")) p.T = params.at("T").get<int>();
    p.mu0 = get_vec("mu0");
    return sis_game(p);
  }
  if (name == "random") {
    RandomGameParams p;
    if (params.contains("S")) p.S = params.at("S").get<int>();
    if (params.contains("A")) p.A = params.at("A").get<int>();
    if (params.contains("T")) p.T = params.at("T").get<int>();
    if (params.contains("seed")) p.seed = params.at("seed").get<std::uint64_t>();
    if (params.contains("lipschitz_knob")) p.lipschitz_knob = params.at("lipschitz_knob").get<double>();
    return random_game(p);
  }
  throw std::invalid_argument("builtin_game_from_json: unknown game '" + name + "'");
}

}  // namespace mfomo
