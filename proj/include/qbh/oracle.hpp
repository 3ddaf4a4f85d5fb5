#pragma once

#include <sstream>

#include "gaussian.hpp"

namespace qbh {

// Real-space dynamical matrix of an N-site periodic ring, Nambu index j*2d + s*d + n
// (s = 0 for a, s = 1 for a^dag).
struct RingDynamical {
  int N = 0;
  int d = 1;
  CMat G;
  CMat tau3_big;
};

inline RingDynamical build_ring(const QBHSpec& spec, int N) {
  if (spec.D() != 1) throw UnsupportedOperation("ring oracle supports D = 1 only");
  if (N <= 2 * spec.R()) throw ConfigError("ring size N must exceed 2R");
  const int d = spec.d(), n = 2 * d;
  RingDynamical rd{N, d, CMat::Zero(N * n, N * n), CMat::Zero(N * n, N * n)};
  const CMat t3 = tau3(d);
  for (const auto& c : spec.couplings()) {
    CMat gr(n, n);
    gr << c.K, c.Delta, c.Delta.conjugate(), c.K.conjugate();
    gr = t3 * gr;
    const int r = c.r[0];
    for (int j = 0; j < N; ++j) {
      const int l = ((j + r) % N + N) % N;
      rd.G.block(j * n, l * n, n, n) += gr;
    }
  }
  for (int j = 0; j < N; ++j) rd.tau3_big.block(j * n, j * n, n, n) = t3;
  return rd;
}

inline double ring_pseudo_hermiticity_residual(const RingDynamical& rd) {
  return (rd.G.adjoint() - rd.tau3_big * rd.G * rd.tau3_big).cwiseAbs().maxCoeff();
}

// QPV CM of the ring from a numerically diagonalized, tau3-normalized modal matrix.
// Degenerate eigenvalues at different lattice momenta are separated by diagonalizing
// G + mu T, T the cyclic shift (which commutes with G); eigenvalues of G are then
// recovered as Rayleigh quotients.
inline FiniteCM ring_qpv_cm(const RingDynamical& rd) {
  const int dim = static_cast<int>(rd.G.rows());
  const int n = 2 * rd.d;
  const double scale = std::max(1.0, rd.G.cwiseAbs().rowwise().sum().maxCoeff());
  CMat T = CMat::Zero(dim, dim);
  for (int j = 0; j < rd.N; ++j) T.block(((j + 1) % rd.N) * n, j * n, n, n).setIdentity();
  const cplx mu = 0.05 * scale * std::polar(1.0, 0.7);
  Eigen::ComplexEigenSolver<CMat> es(rd.G + mu * T, true);
  if (es.info() != Eigen::Success) throw NumericalFailure("ring eigensolver did not converge");
  CMat V = es.eigenvectors();
  CVec lam(dim), shift(dim);
  for (int i = 0; i < dim; ++i) {
    V.col(i).normalize();
    lam(i) = V.col(i).dot(rd.G * V.col(i));
    shift(i) = V.col(i).dot(T * V.col(i));
  }
  auto pair_msg = [&](int a, int b) {
    std::ostringstream os;
    os.precision(12);
    os << "eigenvalues " << lam(a) << " and " << lam(b);
    return os.str();
  };
  for (int i = 0; i < dim; ++i) {
    if (std::abs(lam(i).imag()) > std::max(1e-9, defect_floor) * scale) {
      int partner = i == 0 ? 1 : 0;
      for (int j = 0; j < dim; ++j)
        if (j != i && std::abs(lam(j) - std::conj(lam(i))) < std::abs(lam(partner) - std::conj(lam(i)))) partner = j;
      throw InstabilityError("ring is dynamically unstable: " + pair_msg(i, partner));
    }
  }
  // clusters of equal (eigenvalue, shift eigenvalue)
  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return lam(a).real() < lam(b).real(); });
  const double thr = std::max(1e-8, defect_floor) * scale;
  std::vector<bool> taken(dim, false);
  CMat L(dim, dim);
  int filled = 0, npos = 0;
  for (int i = 0; i < dim; ++i) {
    const int a = order[i];
    if (taken[a]) continue;
    std::vector<int> cl;
    for (int j = i; j < dim && lam(order[j]).real() - lam(a).real() < thr; ++j) {
      const int b = order[j];
      if (!taken[b] && std::abs(shift(b) - shift(a)) < 1e-6) {
        cl.push_back(b);
        taken[b] = true;
      }
    }
    const int m = static_cast<int>(cl.size());
    CMat W(dim, m);
    for (int c = 0; c < m; ++c) W.col(c) = V.col(cl[c]);
    if (m > 1) {
      Eigen::JacobiSVD<CMat> svd(W);
      if (svd.singularValues()(m - 1) < 1e-6 * svd.singularValues()(0))
        throw SingularPointError("ring has an exceptional point: defective cluster at " + pair_msg(cl.front(), cl.back()),
                                 {});
    }
    Eigen::HouseholderQR<CMat> qr(W);
    const CMat Q = qr.householderQ() * CMat::Identity(dim, m);
    const CMat Mg = Q.adjoint() * rd.tau3_big * Q;
    Eigen::SelfAdjointEigenSolver<CMat> gs(0.5 * (Mg + Mg.adjoint()));
    const RVec nu = gs.eigenvalues();
    int sp = 0, sn = 0;
    for (int c = 0; c < m; ++c) {
      if (std::abs(nu(c)) < 1e-6) throw SingularPointError("ring has a tau3-null mode at " + pair_msg(cl[c], cl[c]), {});
      (nu(c) > 0 ? sp : sn)++;
    }
    if (sp > 0 && sn > 0) throw SingularPointError("ring has a Krein collision between " + pair_msg(cl.front(), cl.back()), {});
    const CMat B = Q * gs.eigenvectors();
    for (int c = 0; c < m; ++c) L.col(filled++) = B.col(c) / std::sqrt(std::abs(nu(c)));
    npos += sp;
  }
  if (npos != rd.N * rd.d) throw NumericalFailure("ring modal matrix has the wrong signature count");
  const CMat C = L * L.adjoint();
  const int M = rd.N * rd.d;
  const CMat U = nambu_U(rd.d);
  FiniteCM cm{rd.N, rd.d, RMat::Zero(2 * M, 2 * M)};
  for (int a = 0; a < rd.N; ++a) {
    for (int b = 0; b < rd.N; ++b) {
      const RMat blk = (U.adjoint() * C.block(a * n, b * n, n, n) * U).real();
      for (int qa = 0; qa < 2; ++qa)
        for (int qb = 0; qb < 2; ++qb)
          for (int x = 0; x < rd.d; ++x)
            for (int y = 0; y < rd.d; ++y)
              cm.gamma(qa * M + a * rd.d + x, qb * M + b * rd.d + y) = blk(qa * rd.d + x, qb * rd.d + y);
    }
  }
  cm.gamma = 0.5 * (cm.gamma + cm.gamma.transpose()).eval();
  return cm;
}

// Sorted ring spectrum and sorted union of Bloch spectra at k_j = 2 pi j / N; max distance.
inline double ring_spectral_mismatch(const QBHSpec& spec, const RingDynamical& rd) {
  Eigen::ComplexEigenSolver<CMat> es(rd.G, false);
  std::vector<cplx> a(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()), b;
  BlochEvaluator ev(spec);
  for (int j = 0; j < rd.N; ++j) {
    Eigen::ComplexEigenSolver<CMat> ek(ev(KVec{2.0 * pi * j / rd.N}).g, false);
    for (Eigen::Index i = 0; i < ek.eigenvalues().size(); ++i) b.push_back(ek.eigenvalues()(i));
  }
  auto less = [](cplx x, cplx y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); };
  std::sort(a.begin(), a.end(), less);
  std::sort(b.begin(), b.end(), less);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace qbh
