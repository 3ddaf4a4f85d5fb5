#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>
#include <optional>

#include "bloch.hpp"

namespace qbh {

enum class PointClass { Regular, EP, KC, ComplexUnstable };

inline const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Regular: return "Regular";
    case PointClass::EP: return "EP";
    case PointClass::KC: return "KC";
    case PointClass::ComplexUnstable: return "ComplexUnstable";
  }
  return "?";
}

// Columns of `eigenvectors`: signature +1 (ascending eigenvalue), then -1 (ascending),
// then null-norm vectors (only at an EP). Definite vectors satisfy |v^dag tau3 v| = 1.
struct SpectralPoint {
  KVec k;
  int d = 1;
  double scale = 1.0;
  CVec eigenvalues;
  CMat eigenvectors;
  std::vector<int> signatures;
  RVec particle_bands;
  RVec kpr;
  PointClass classification = PointClass::Regular;

  // inputs to classify_point
  double max_imag = 0.0;
  double min_ph_distance = std::numeric_limits<double>::infinity();
  double min_kpr = 1.0;
  bool opposite_normalizable = false;
  std::optional<PauliDecomposition> pauli;

  bool regular() const { return classification == PointClass::Regular; }
  auto particle_vectors() const { return eigenvectors.leftCols(d); }
  auto hole_vectors() const { return eigenvectors.middleCols(d, d); }
};

inline double imag_threshold(double scale, const Tolerances& tol) { return std::max(tol.imag, defect_floor) * scale; }
inline double coll_threshold(double scale, const Tolerances& tol) { return std::max(tol.coll, defect_floor) * scale; }

inline PointClass classify_point(const SpectralPoint& sp, const PauliDecomposition* pd, const Tolerances& tol = {}) {
  if (sp.max_imag > imag_threshold(sp.scale, tol)) return PointClass::ComplexUnstable;
  if (sp.min_ph_distance < coll_threshold(sp.scale, tol)) {
    if (pd) {
      const double t = tol.kc * sp.scale;
      if (std::abs(pd->d1) < t && std::abs(pd->d2) < t && std::abs(pd->d3) < t) return PointClass::KC;
    } else if (sp.opposite_normalizable && sp.min_kpr >= tol.kpr) {
      return PointClass::KC;
    }
    if (sp.min_kpr < tol.kpr) return PointClass::EP;
  }
  return PointClass::Regular;
}

// Largest-magnitude component made real positive (first index among near-ties).
inline void canonical_phase(Eigen::Ref<CVec> v) {
  const double m = v.cwiseAbs().maxCoeff();
  if (m == 0.0) return;
  Eigen::Index idx = 0;
  while (std::abs(v(idx)) < m * (1.0 - 1e-12)) ++idx;
  v *= std::conj(v(idx)) / std::abs(v(idx));
}

namespace detail {

inline double scale_of(const BlochPoint& bp, double scale) {
  if (scale > 0.0) return scale;
  const double s = inf_norm(bp.g);
  return s > 0.0 ? s : 1.0;
}

inline void order_columns(SpectralPoint& sp, std::vector<double> lam, std::vector<CVec> vecs, std::vector<int> sig) {
  const double tie = 1e-12 * sp.scale;
  std::vector<std::size_t> idx(lam.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto rank = [&](int s) { return s == 1 ? 0 : (s == -1 ? 1 : 2); };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (rank(sig[a]) != rank(sig[b])) return rank(sig[a]) < rank(sig[b]);
    return lam[a] < lam[b];
  });
  // near-equal eigenvalues of one signature: order by Re of first component
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i + 1;
    while (j < idx.size() && sig[idx[j]] == sig[idx[i]] && lam[idx[j]] - lam[idx[j - 1]] <= tie) ++j;
    std::stable_sort(idx.begin() + i, idx.begin() + j,
                     [&](std::size_t a, std::size_t b) { return vecs[a](0).real() < vecs[b](0).real(); });
    i = j;
  }
  const int n = static_cast<int>(lam.size());
  sp.eigenvalues.resize(n);
  sp.eigenvectors.resize(n, n);
  sp.signatures.resize(n);
  for (int c = 0; c < n; ++c) {
    sp.eigenvalues(c) = lam[idx[c]];
    sp.eigenvectors.col(c) = vecs[idx[c]];
    sp.signatures[c] = sig[idx[c]];
  }
}

inline SpectralPoint diagonalize_closed_form(const BlochPoint& bp, double scale, const Tolerances& tol);

}  // namespace detail

// Dense path: complex eigensolver, then tau3-normalization with a Gram diagonalization
// inside each cluster of (near-)degenerate eigenvalues.
inline SpectralPoint diagonalize_dense(const BlochPoint& bp, double scale = 0.0, const Tolerances& tol = {}) {
  SpectralPoint sp;
  sp.k = bp.k;
  sp.d = static_cast<int>(bp.g.rows() / 2);
  sp.scale = detail::scale_of(bp, scale);
  const int n = 2 * sp.d;

  Eigen::ComplexEigenSolver<CMat> es(bp.g, true);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigensolver did not converge at k = " + format_k(bp.k));
  const CVec lam = es.eigenvalues();
  const CMat V = es.eigenvectors();
  for (int i = 0; i < n; ++i) sp.max_imag = std::max(sp.max_imag, std::abs(lam(i).imag()));

  if (sp.max_imag > imag_threshold(sp.scale, tol)) {
    sp.classification = PointClass::ComplexUnstable;
    sp.eigenvalues = lam;
    sp.eigenvectors = V;
    sp.signatures.assign(n, 0);
    sp.kpr = RVec::Zero(sp.d);
    sp.min_kpr = 0.0;
    return sp;
  }

  const CMat t3 = tau3(sp.d);
  const double thr = coll_threshold(sp.scale, tol);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lam(a).real() < lam(b).real(); });

  std::vector<double> out_lam;
  std::vector<CVec> out_vec;
  std::vector<int> out_sig;
  for (int i = 0; i < n;) {
    int j = i + 1;
    while (j < n && lam(order[j]).real() - lam(order[j - 1]).real() < thr) ++j;
    const int m = j - i;
    CMat Vc(n, m);
    double mean = 0.0;
    for (int c = 0; c < m; ++c) {
      Vc.col(c) = V.col(order[i + c]).normalized();
      mean += lam(order[i + c]).real() / m;
    }
    if (m > 1) {
      Eigen::JacobiSVD<CMat> svd(Vc);
      const auto sv = svd.singularValues();
      sp.min_kpr = std::min(sp.min_kpr, sv(m - 1) / sv(0));
    }
    Eigen::SelfAdjointEigenSolver<CMat> gram(Vc.adjoint() * t3 * Vc);
    bool has_pos = false, has_neg = false;
    for (int c = 0; c < m; ++c) {
      CVec w = Vc * gram.eigenvectors().col(c);
      const double q = gram.eigenvalues()(c);
      const double nrm2 = w.squaredNorm();
      int s = 0;
      double val = mean;
      if (std::abs(q) < tol.kpr * nrm2) {
        sp.min_kpr = 0.0;
        w /= std::sqrt(nrm2);
      } else {
        s = q > 0 ? 1 : -1;
        w /= std::sqrt(std::abs(q));
        val = (w.adjoint() * t3 * bp.g * w)(0).real() * s;
        (s > 0 ? has_pos : has_neg) = true;
      }
      canonical_phase(w);
      out_lam.push_back(val);
      out_vec.push_back(w);
      out_sig.push_back(s);
    }
    if (has_pos && has_neg) sp.opposite_normalizable = true;
    i = j;
  }

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (out_sig[a] == out_sig[b] && out_sig[a] != 0) continue;
      sp.min_ph_distance = std::min(sp.min_ph_distance, std::abs(out_lam[a] - out_lam[b]));
    }
  }
  detail::order_columns(sp, out_lam, out_vec, out_sig);

  const int npos = static_cast<int>(std::count(sp.signatures.begin(), sp.signatures.end(), 1));
  const int nneg = static_cast<int>(std::count(sp.signatures.begin(), sp.signatures.end(), -1));
  sp.kpr = RVec::Zero(sp.d);
  if (npos == sp.d && nneg == sp.d) {
    sp.particle_bands = sp.eigenvalues.head(sp.d).real();
    for (int c = 0; c < sp.d; ++c) {
      const double kv = 1.0 / sp.eigenvectors.col(c).squaredNorm();
      sp.kpr(c) = kv;
      sp.min_kpr = std::min(sp.min_kpr, kv);
    }
  } else {
    sp.min_kpr = 0.0;
  }
  sp.classification = classify_point(sp, nullptr, tol);
  if (sp.classification == PointClass::Regular && !(npos == sp.d && nneg == sp.d))
    throw NumericalFailure("signature count mismatch at k = " + format_k(bp.k));
  if (!sp.regular()) sp.kpr.setZero();
  return sp;
}

namespace detail {

inline SpectralPoint diagonalize_closed_form(const BlochPoint& bp, double scale, const Tolerances& tol) {
  SpectralPoint sp;
  sp.k = bp.k;
  sp.d = 1;
  sp.scale = scale_of(bp, scale);
  const PauliDecomposition p = pauli_decompose(bp);
  sp.pauli = p;
  const double e2 = p.e2();
  if (e2 < 0.0 && std::sqrt(-e2) > imag_threshold(sp.scale, tol)) {
    SpectralPoint dense = diagonalize_dense(bp, sp.scale, tol);
    dense.pauli = p;
    return dense;
  }
  const cplx I(0.0, 1.0);
  const double E = std::sqrt(std::max(e2, 0.0));
  const double s = p.d3 >= 0.0 ? 1.0 : -1.0;
  const double a = E + std::abs(p.d3);
  CVec bp_(2), bh(2);
  bp_ << a, s * (-p.d2 + I * p.d1);
  bh << s * (-p.d2 - I * p.d1), a;
  double kpr = 0.0;
  std::vector<int> sig{1, -1};
  if (E > 0.0) {
    const double N = std::sqrt(2.0 * E * a);
    bp_ /= N;
    bh /= N;
    kpr = E / std::abs(p.d3);
  } else if (a > 0.0) {
    bp_.normalize();
    bh = bp_;
    sig = {0, 0};
  } else {
    bp_ << 1.0, 0.0;
    bh << 0.0, 1.0;
  }
  sp.max_imag = e2 < 0.0 ? std::sqrt(-e2) : 0.0;
  sp.min_ph_distance = 2.0 * E;
  sp.min_kpr = kpr;
  sp.eigenvalues.resize(2);
  sp.eigenvalues << p.d0 + s * E, p.d0 - s * E;
  sp.eigenvectors.resize(2, 2);
  sp.eigenvectors << bp_, bh;
  sp.signatures = sig;
  sp.particle_bands = RVec::Constant(1, p.d0 + s * E);
  sp.kpr = RVec::Constant(1, kpr);
  sp.classification = classify_point(sp, &p, tol);
  if (sp.classification == PointClass::KC) {
    sp.eigenvectors.setIdentity();
    sp.signatures = {1, -1};
    sp.eigenvalues << bp.g(0, 0).real(), bp.g(1, 1).real();
    sp.particle_bands(0) = bp.g(0, 0).real();
  }
  if (!sp.regular()) sp.kpr.setZero();
  return sp;
}

}  // namespace detail

// d = 1 uses the closed-form Bogoliubov vectors, d > 1 the dense path.
inline SpectralPoint diagonalize(const BlochPoint& bp, double scale = 0.0, const Tolerances& tol = {}) {
  if (bp.g.rows() == 2) return detail::diagonalize_closed_form(bp, scale, tol);
  return diagonalize_dense(bp, scale, tol);
}

inline RVec kpr(const SpectralPoint& sp) { return sp.regular() ? sp.kpr : RVec::Zero(sp.d); }

// beta^dag tau3 beta' over all definite columns; equals tau3 at a regular point.
inline CMat tau3_gram(const SpectralPoint& sp) {
  return sp.eigenvectors.adjoint() * tau3(sp.d) * sp.eigenvectors;
}

}  // namespace qbh
