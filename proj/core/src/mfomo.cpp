#include "mfomo/mfomo.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace mfomo {
namespace {

// Z v for v of length S*A: sums the action blocks into a length-S vector.
Vec sum_actions(const Vec& v, int S, int A) {
  Vec out = Vec::Zero(S);
  for (int a = 0; a < A; ++a) out += v.segment(static_cast<Eigen::Index>(a) * S, S);
  return out;
}

// Z' w for w of length S: tiles it A times.
Vec tile_actions(const Vec& w, int A) {
  Vec out(w.size() * A);
  for (int a = 0; a < A; ++a) out.segment(a * w.size(), w.size()) = w;
  return out;
}

struct Evaluated {
  Dims d;
  std::vector<Mat> W;  // size T
  std::vector<Vec> r;  // size T+1, flattened reward tables
  Vec l;               // flattened L
  Vec u;               // consistency residual, length S(T+1)
  Vec delta;           // Bellman residual, length SA(T+1)
};

Evaluated evaluate_residuals(const GameModel& g, const ThetaPoint& th) {
  Evaluated ev;
  ev.d = Dims{g.S(), g.A(), g.T()};
  const int S = ev.d.S, A = ev.d.A, T = ev.d.T, sa = ev.d.sa();
  if (th.dims() != ev.d) throw std::invalid_argument("theta/game dimension mismatch");
  if (th.y.size() != ev.d.n_states_total() || th.z.size() != ev.d.n_flow_total())
    throw std::invalid_argument("theta block sizes do not match the game");

  ev.W.reserve(T);
  ev.r.reserve(T + 1);
  for (int t = 0; t <= T; ++t) {
    const Mat Lc = clamp_slice(th.L[t]);
    if (t < T) ev.W.push_back(kernel_to_w(g.transition(t, Lc)));
    ev.r.push_back(mat_to_vec(g.reward(t, Lc)));
  }
  ev.l = flow_to_vec(th.L);

  ev.u.resize(S * (T + 1));
  for (int t = 0; t < T; ++t)
    ev.u.segment(t * S, S) =
        ev.W[t] * ev.l.segment(t * sa, sa) - sum_actions(ev.l.segment((t + 1) * sa, sa), S, A);
  ev.u.tail(S) = sum_actions(ev.l.head(sa), S, A) - g.mu0();

  ev.delta.resize(sa * (T + 1));
  for (int t = 0; t <= T; ++t) {
    Vec block = th.z.segment(t * sa, sa) + ev.r[t];
    if (t < T) block += ev.W[t].transpose() * th.y.segment(t * S, S);
    if (t > 0)
      block -= tile_actions(th.y.segment((t - 1) * S, S), A);
    else
      block += tile_actions(th.y.tail(S), A);
    ev.delta.segment(t * sa, sa) = block;
  }
  return ev;
}

ObjectiveBreakdown breakdown_from(const Evaluated& ev, const Vec& z) {
  ObjectiveBreakdown f;
  f.consistency = ev.u.squaredNorm();
  f.bellman = ev.delta.squaredNorm();
  f.complementarity = z.dot(ev.l);
  f.total = f.consistency + f.bellman + f.complementarity;
  return f;
}

}  // namespace

Vec LinearSystem::apply(const Vec& v) const {
  const int S = dims.S, A = dims.A, T = dims.T, sa = dims.sa();
  Vec out(S * (T + 1));
  for (int t = 0; t < T; ++t)
    out.segment(t * S, S) =
        W[t] * v.segment(t * sa, sa) - sum_actions(v.segment((t + 1) * sa, sa), S, A);
  out.tail(S) = sum_actions(v.head(sa), S, A);
  return out;
}

Vec LinearSystem::apply_transpose(const Vec& y) const {
  const int S = dims.S, A = dims.A, T = dims.T, sa = dims.sa();
  Vec out = Vec::Zero(sa * (T + 1));
  for (int t = 0; t <= T; ++t) {
    Vec block = Vec::Zero(sa);
    if (t < T) block += W[t].transpose() * y.segment(t * S, S);
    if (t > 0)
      block -= tile_actions(y.segment((t - 1) * S, S), A);
    else
      block += tile_actions(y.tail(S), A);
    out.segment(t * sa, sa) = block;
  }
  return out;
}

Mat LinearSystem::dense() const {
  const int S = dims.S, A = dims.A, T = dims.T, sa = dims.sa();
  Mat M = Mat::Zero(S * (T + 1), sa * (T + 1));
  for (int t = 0; t < T; ++t) {
    M.block(t * S, t * sa, S, sa) = W[t];
    for (int a = 0; a < A; ++a)
      M.block(t * S, (t + 1) * sa + a * S, S, S) -= Mat::Identity(S, S);
  }
  for (int a = 0; a < A; ++a) M.block(T * S, a * S, S, S) = Mat::Identity(S, S);
  return M;
}

LinearSystem build_system(const GameModel& g, const Flow& L) {
  LinearSystem sys;
  sys.dims = Dims{g.S(), g.A(), g.T()};
  const int S = sys.dims.S, T = sys.dims.T, sa = sys.dims.sa();
  sys.W.reserve(T);
  sys.c.resize(sa * (T + 1));
  for (int t = 0; t <= T; ++t) {
    const Mat Lc = clamp_slice(L[t]);
    if (t < T) sys.W.push_back(kernel_to_w(g.transition(t, Lc)));
    sys.c.segment(t * sa, sa) = -mat_to_vec(g.reward(t, Lc));
  }
  sys.b = Vec::Zero(S * (T + 1));
  sys.b.tail(S) = g.mu0();
  return sys;
}

ObjectiveBreakdown objective(const GameModel& g, const ThetaPoint& th) {
  return breakdown_from(evaluate_residuals(g, th), th.z);
}

ObjectiveBreakdown objective_matrix_form(const GameModel& g, const ThetaPoint& th) {
  const LinearSystem sys = build_system(g, th.L);
  const Mat M = sys.dense();
  const Vec l = flow_to_vec(th.L);
  ObjectiveBreakdown f;
  f.consistency = (M * l - sys.b).squaredNorm();
  f.bellman = (M.transpose() * th.y + th.z - sys.c).squaredNorm();
  f.complementarity = th.z.dot(l);
  f.total = f.consistency + f.bellman + f.complementarity;
  return f;
}

Gradient gradient(const GameModel& g, const ThetaPoint& th) {
  const Evaluated ev = evaluate_residuals(g, th);
  const int S = ev.d.S, A = ev.d.A, T = ev.d.T, sa = ev.d.sa();
  const bool mfi = g.mean_field_independent_dynamics();

  Gradient grad;
  grad.y.resize(S * (T + 1));
  for (int t = 0; t < T; ++t)
    grad.y.segment(t * S, S) =
        2.0 * (ev.W[t] * ev.delta.segment(t * sa, sa) -
               sum_actions(ev.delta.segment((t + 1) * sa, sa), S, A));
  grad.y.tail(S) = 2.0 * sum_actions(ev.delta.head(sa), S, A);

  grad.z = 2.0 * ev.delta + ev.l;

  grad.L = Vec::Zero(sa * (T + 1));
  for (int t = 0; t <= T; ++t) {
    Vec block = th.z.segment(t * sa, sa);
    if (t < T) block += 2.0 * ev.W[t].transpose() * ev.u.segment(t * S, S);
    if (t > 0)
      block -= 2.0 * tile_actions(ev.u.segment((t - 1) * S, S), A);
    else
      block += 2.0 * tile_actions(ev.u.tail(S), A);

    const Mat Lc = clamp_slice(th.L[t]);
    const Mat Jr = g.reward_jacobian(t, Lc);
    block += 2.0 * Jr.transpose() * ev.delta.segment(t * sa, sa);

    if (t < T && !mfi) {
      // Flow dependence of W_t enters both residual groups; fold them into
      // one S x SA weight matrix and contract against each coordinate's dW.
      const Mat weight =
          ev.u.segment(t * S, S) * ev.l.segment(t * sa, sa).transpose() +
          th.y.segment(t * S, S) * ev.delta.segment(t * sa, sa).transpose();
      const std::vector<Mat> dW = g.transition_jacobian(t, Lc);
      for (int k = 0; k < sa; ++k)
        block(k) += 2.0 * dW[k].cwiseProduct(weight).sum();
    }
    grad.L.segment(t * sa, sa) = block;
  }
  return grad;
}

int objective_term_count(const Dims& d) {
  return d.n_states_total() + 2 * d.n_flow_total();
}

Gradient partial_gradient(const GameModel& g, const ThetaPoint& th,
                          const std::vector<int>& terms) {
  const Evaluated ev = evaluate_residuals(g, th);
  const int S = ev.d.S, A = ev.d.A, T = ev.d.T, sa = ev.d.sa();
  const int nU = S * (T + 1), nDelta = sa * (T + 1);
  const bool mfi = g.mean_field_independent_dynamics();

  // Lazy per-t Jacobian caches; a term only pays for the step it touches.
  std::vector<Mat> Jr(T + 1);
  std::vector<char> have_jr(T + 1, 0);
  std::vector<std::vector<Mat>> dW(T);
  std::vector<char> have_dw(T, 0);
  auto jr_at = [&](int t) -> const Mat& {
    if (!have_jr[t]) {
      Jr[t] = g.reward_jacobian(t, clamp_slice(th.L[t]));
      have_jr[t] = 1;
    }
    return Jr[t];
  };
  auto dw_at = [&](int t) -> const std::vector<Mat>& {
    if (!have_dw[t]) {
      dW[t] = g.transition_jacobian(t, clamp_slice(th.L[t]));
      have_dw[t] = 1;
    }
    return dW[t];
  };

  Gradient grad;
  grad.y = Vec::Zero(S * (T + 1));
  grad.z = Vec::Zero(sa * (T + 1));
  grad.L = Vec::Zero(sa * (T + 1));

  for (const int idx : terms) {
    if (idx < 0 || idx >= objective_term_count(ev.d))
      throw std::out_of_range("partial_gradient: term index");
    if (idx < nU) {
      const int t = idx / S, s2 = idx % S;
      const double uval = ev.u(idx);
      if (t < T) {
        grad.L.segment(t * sa, sa) += 2.0 * uval * ev.W[t].row(s2).transpose();
        if (!mfi) {
          const auto& dWt = dw_at(t);
          for (int k = 0; k < sa; ++k)
            grad.L(t * sa + k) +=
                2.0 * uval * dWt[k].row(s2).dot(ev.l.segment(t * sa, sa));
        }
        for (int a = 0; a < A; ++a) grad.L((t + 1) * sa + a * S + s2) -= 2.0 * uval;
      } else {
        for (int a = 0; a < A; ++a) grad.L(a * S + s2) += 2.0 * uval;
      }
    } else if (idx < nU + nDelta) {
      const int j = idx - nU;
      const int t = j / sa, i = j % sa, s = i % S;
      const double dval = ev.delta(j);
      if (t < T) grad.y.segment(t * S, S) += 2.0 * dval * ev.W[t].col(i);
      if (t > 0)
        grad.y((t - 1) * S + s) -= 2.0 * dval;
      else
        grad.y(T * S + s) += 2.0 * dval;
      grad.z(j) += 2.0 * dval;
      grad.L.segment(t * sa, sa) += 2.0 * dval * jr_at(t).row(i).transpose();
      if (t < T && !mfi) {
        const auto& dWt = dw_at(t);
        for (int k = 0; k < sa; ++k)
          grad.L(t * sa + k) += 2.0 * dval * th.y.segment(t * S, S).dot(dWt[k].col(i));
      }
    } else {
      const int k = idx - nU - nDelta;
      grad.z(k) += ev.l(k);
      grad.L(k) += th.z(k);
    }
  }
  return grad;
}

ThetaPoint warm_start(const GameModel& g, const Flow& L0) {
  const FiniteMdp m = induced_mdp(g, L0);
  const OptimalValues vi = value_iteration(m);
  const int S = m.S, A = m.A, T = m.T, sa = S * A;

  ThetaPoint th;
  th.L = L0;
  th.y.resize(S * (T + 1));
  for (int t = 0; t < T; ++t) th.y.segment(t * S, S) = vi.V[t + 1];
  th.y.tail(S) = -vi.V[0];
  th.z.resize(sa * (T + 1));
  for (int t = 0; t <= T; ++t) {
    Mat gap = vi.V[t].replicate(1, A) - vi.Q[t];  // advantage gap, >= 0
    th.z.segment(t * sa, sa) = mat_to_vec(gap);
  }
  return th;
}

ThetaPoint solution_modification(const GameModel& g, const ThetaPoint& th) {
  ThetaPoint out = warm_start(g, th.L);
  out.L = th.L;
  return out;
}

ExtractResult extract_solution(const GameModel& g, const ThetaPoint& th, double tol) {
  ExtractResult out;
  out.L = th.L;
  out.pi = policy_from_occupation(th.L);
  out.report = verify_nash(g, out.pi, th.L, tol);
  out.f = objective(g, th);
  return out;
}

double exploitability_bound_constant(int S, int A, int T, double C_P, double C_r,
                                     double r_max) {
  const double sqrtS = std::sqrt(static_cast<double>(S));
  double transition_amp, reward_amp;
  if (C_P <= 0.0) {
    transition_amp = 0.0;
    reward_amp = C_r * (T + 1.0) * (T + 2.0) * sqrtS;
  } else {
    transition_amp =
        T * (T + 1.0) * r_max * (std::pow(C_P + 1.0, T + 1) - 1.0) * sqrtS;
    reward_amp = 2.0 * C_r *
                 (std::pow(C_P + 1.0, T + 2) - (T + 2.0) * C_P - 1.0) / (C_P * C_P) *
                 sqrtS;
  }
  const double value_scale = std::pow(static_cast<double>(S), 1.5) * A *
                             std::pow(T + 2.0, 3) * r_max;
  return transition_amp + reward_amp + value_scale +
         std::sqrt(static_cast<double>(S) * A * (T + 1.0)) +
         std::sqrt(static_cast<double>(T));
}

// ---------------------------------------------------------------------------
// ThetaPoint JSON checkpoints

std::string ThetaPoint::to_json() const {
  const Dims d = dims();
  json doc;
  doc["S"] = d.S;
  doc["A"] = d.A;
  doc["T"] = d.T;
  doc["y"] = std::vector<double>(y.data(), y.data() + y.size());
  doc["z"] = std::vector<double>(z.data(), z.data() + z.size());
  json Lj = json::array();
  for (const Mat& Lt : L) {
    json rows = json::array();
    for (Eigen::Index s = 0; s < Lt.rows(); ++s) {
      json row = json::array();
      for (Eigen::Index a = 0; a < Lt.cols(); ++a) row.push_back(Lt(s, a));
      rows.push_back(row);
    }
    Lj.push_back(rows);
  }
  doc["L"] = Lj;
  return doc.dump(2);
}

ThetaPoint ThetaPoint::from_json(const std::string& text) {
  const json doc = json::parse(text);
  const int S = doc.at("S").get<int>(), A = doc.at("A").get<int>(), T = doc.at("T").get<int>();
  ThetaPoint th;
  const auto& yj = doc.at("y");
  const auto& zj = doc.at("z");
  if (static_cast<int>(yj.size()) != S * (T + 1) ||
      static_cast<int>(zj.size()) != S * A * (T + 1))
    throw std::invalid_argument("ThetaPoint::from_json: block sizes do not match dims");
  th.y.resize(S * (T + 1));
  for (int i = 0; i < th.y.size(); ++i) th.y(i) = yj.at(i).get<double>();
  th.z.resize(S * A * (T + 1));
  for (int i = 0; i < th.z.size(); ++i) th.z(i) = zj.at(i).get<double>();
  const auto& Lj = doc.at("L");
  for (int t = 0; t <= T; ++t) {
    Mat Lt(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) Lt(s, a) = Lj.at(t).at(s).at(a).get<double>();
    th.L.push_back(Lt);
  }
  return th;
}

void ThetaPoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("ThetaPoint::save: cannot open " + path);
  out << to_json() << "\n";
}

ThetaPoint ThetaPoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ThetaPoint::load: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace mfomo
