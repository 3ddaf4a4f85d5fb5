#pragma once

#include "model.hpp"

namespace qbh {

struct BlochPoint {
  KVec k;
  CMat Kk, Dk;  // K(k), Delta(k)
  CMat g;       // dynamical matrix
  CMat h;       // tau3 g, Hermitian
};

struct PauliDecomposition {
  double d0 = 0, d1 = 0, d2 = 0, d3 = 0;
  double e2() const { return d3 * d3 - d1 * d1 - d2 * d2; }
};

inline CMat tau3(int d) {
  CMat t = CMat::Identity(2 * d, 2 * d);
  t.bottomRightCorner(d, d) *= -1.0;
  return t;
}

inline CMat tau1(int d) {
  CMat t = CMat::Zero(2 * d, 2 * d);
  t.topRightCorner(d, d).setIdentity();
  t.bottomLeftCorner(d, d).setIdentity();
  return t;
}

// Caches the coupling list so repeated evaluations over a grid skip the map lookups.
class BlochEvaluator {
 public:
  explicit BlochEvaluator(const QBHSpec& spec) : D_(spec.D()), d_(spec.d()), terms_(spec.couplings()) {}

  int D() const { return D_; }
  int d() const { return d_; }

  BlochPoint operator()(const KVec& k) const {
    if (static_cast<int>(k.size()) != D_) throw ConfigError("momentum has wrong dimension");
    CMat Kp = CMat::Zero(d_, d_), Dp = Kp, Km = Kp, Dm = Kp;
    for (const auto& t : terms_) {
      double phase = 0.0;
      for (int a = 0; a < D_; ++a) phase += k[a] * t.r[a];
      const cplx e(std::cos(phase), std::sin(phase));
      Kp += e * t.K;
      Dp += e * t.Delta;
      Km += std::conj(e) * t.K;
      Dm += std::conj(e) * t.Delta;
    }
    BlochPoint bp;
    bp.k = k;
    bp.g.resize(2 * d_, 2 * d_);
    bp.g << Kp, Dp, -Dm.conjugate(), -Km.conjugate();
    bp.h = bp.g;
    bp.h.bottomRows(d_) *= -1.0;
    bp.Kk = std::move(Kp);
    bp.Dk = std::move(Dp);
    return bp;
  }

 private:
  int D_, d_;
  std::vector<Coupling> terms_;
};

inline BlochPoint eval_bloch(const QBHSpec& spec, const KVec& k) { return BlochEvaluator(spec)(k); }

inline double inf_norm(const CMat& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

inline double pseudo_hermiticity_residual(const BlochPoint& bp) {
  const int d = static_cast<int>(bp.g.rows() / 2);
  const CMat t3 = tau3(d);
  return (bp.g.adjoint() - t3 * bp.g * t3).cwiseAbs().maxCoeff();
}

// g*(k) = -tau1 g(-k) tau1
inline double charge_conjugation_residual(const BlochPoint& at_k, const BlochPoint& at_minus_k) {
  const int d = static_cast<int>(at_k.g.rows() / 2);
  const CMat t1 = tau1(d);
  return (at_k.g.conjugate() + t1 * at_minus_k.g * t1).cwiseAbs().maxCoeff();
}

// g = d0 s0 + i d1 s1 + i d2 s2 + d3 s3, single band only.
inline PauliDecomposition pauli_decompose(const BlochPoint& bp) {
  if (bp.g.rows() != 2) throw UnsupportedOperation("pauli_decompose requires d = 1");
  const CMat& g = bp.g;
  PauliDecomposition p;
  p.d0 = 0.5 * (g(0, 0) + g(1, 1)).real();
  p.d3 = 0.5 * (g(0, 0) - g(1, 1)).real();
  p.d1 = 0.5 * (g(0, 1) + g(1, 0)).imag();
  p.d2 = 0.5 * (g(0, 1) - g(1, 0)).real();
  return p;
}

inline CMat pauli_reconstruct(const PauliDecomposition& p) {
  const cplx I(0.0, 1.0);
  CMat g(2, 2);
  g << p.d0 + p.d3, I * p.d1 + p.d2, I * p.d1 - p.d2, p.d0 - p.d3;
  return g;
}

}  // namespace qbh
