#pragma once

// The optimization variable theta = (y, z, L).
//
//   y : length S*(T+1); block t holds the multiplier vector y_t in R^S.
//   z : length S*A*(T+1); block t holds the flattened slack table z_t.
//   L : T+1 matrices S x A (candidate mean-field flow).
//
// The flat layout used by the optimizers is [y; z; vec(L)].

#include "mfomo/common.hpp"

namespace mfomo {

struct ThetaPoint {
  Vec y;
  Vec z;
  Flow L;

  Dims dims() const {
    Dims d;
    d.T = static_cast<int>(L.size()) - 1;
    if (!L.empty()) {
      d.S = static_cast<int>(L[0].rows());
      d.A = static_cast<int>(L[0].cols());
    }
    return d;
  }

  Vec to_vector() const {
    Vec out(y.size() + z.size() + flow_to_vec(L).size());
    out << y, z, flow_to_vec(L);
    return out;
  }

  static ThetaPoint from_vector(const Vec& v, const Dims& d) {
    const Eigen::Index ny = d.n_states_total(), nz = d.n_flow_total();
    if (v.size() != ny + 2 * nz)
      throw std::invalid_argument("ThetaPoint::from_vector: size mismatch");
    ThetaPoint th;
    th.y = v.head(ny);
    th.z = v.segment(ny, nz);
    th.L = vec_to_flow(v.tail(nz), d.S, d.A, d.T);
    return th;
  }

  // JSON checkpoint round-trip (explicit dimensions plus the three blocks).
  std::string to_json() const;
  static ThetaPoint from_json(const std::string& text);
  void save(const std::string& path) const;
  static ThetaPoint load(const std::string& path);
};

}  // namespace mfomo
