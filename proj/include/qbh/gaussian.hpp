#pragma once

#include "correlations.hpp"

namespace qbh {

// Quadrature ordering [x_{1,1}..x_{N,d}, p_{1,1}..p_{N,d}], site-major within each block.
struct FiniteCM {
  int N = 0;
  int d = 1;
  RMat gamma;

  int modes() const { return N * d; }
};

inline RMat sigma_form(int modes) {
  RMat S = RMat::Zero(2 * modes, 2 * modes);
  S.topRightCorner(modes, modes).setIdentity();
  S.bottomLeftCorner(modes, modes) = -RMat::Identity(modes, modes);
  return S;
}

// gamma(r) = (1/N) sum_j e^{-i k_j r} gamma(k_j), k_j = 2 pi j / N.
inline FiniteCM finite_cm(const QBHSpec& spec, int N, const Tolerances& tol = {}) {
  if (spec.D() != 1) throw UnsupportedOperation("finite_cm supports D = 1 rings only");
  if (N < 4) throw ConfigError("finite_cm requires N >= 4");
  const int d = spec.d();
  const GridSpectrum gs = sample_grid(spec, BZGrid::default_for(1), tol);
  std::vector<CMat> gk(N);
  for (int j = 0; j < N; ++j) {
    const KVec k{2.0 * pi * j / N};
    try {
      gk[j] = qpv_cm_momentum(spec, k, gs.scale, tol).gamma;
    } catch (const SingularPointError& e) {
      throw SingularPointError(std::string(e.what()) + " (discrete momentum j = " + std::to_string(j) + ")", e.k());
    }
  }
  std::vector<RMat> block(N);
  for (int r = 0; r < N; ++r) {
    CMat acc = CMat::Zero(2 * d, 2 * d);
    for (int j = 0; j < N; ++j) {
      const double ph = 2.0 * pi * static_cast<double>((static_cast<long>(j) * r) % N) / N;
      acc += cplx(std::cos(ph), -std::sin(ph)) * gk[j];
    }
    block[r] = acc.real() / N;
  }
  FiniteCM cm{N, d, RMat::Zero(2 * N * d, 2 * N * d)};
  const int M = N * d;
  for (int i = 0; i < N; ++i) {
    for (int l = 0; l < N; ++l) {
      const RMat& B = block[((l - i) % N + N) % N];
      for (int qa = 0; qa < 2; ++qa)
        for (int qb = 0; qb < 2; ++qb)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) cm.gamma(qa * M + i * d + a, qb * M + l * d + b) = B(qa * d + a, qb * d + b);
    }
  }
  cm.gamma = 0.5 * (cm.gamma + cm.gamma.transpose()).eval();
  return cm;
}

// || (Sigma gamma)^2 + 1 ||_inf
inline double purity_residual(const RMat& gamma) {
  const int m = static_cast<int>(gamma.rows() / 2);
  const RMat SG = sigma_form(m) * gamma;
  return (SG * SG + RMat::Identity(2 * m, 2 * m)).cwiseAbs().rowwise().sum().maxCoeff();
}

// lambda_min of the Hermitian matrix gamma + i Sigma
inline double uncertainty_min(const RMat& gamma) {
  const int m = static_cast<int>(gamma.rows() / 2);
  const CMat H = gamma.cast<cplx>() + cplx(0.0, 1.0) * sigma_form(m).cast<cplx>();
  return Eigen::SelfAdjointEigenSolver<CMat>(H, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Positive half of spec(i Sigma gamma), descending. Uses gamma = L L^T, so the spectrum
// is that of the Hermitian i L^T Sigma L.
inline std::vector<double> symplectic_eigs(const RMat& gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() % 2 != 0) throw ConfigError("CM must be square of even size");
  const int m = static_cast<int>(gamma.rows() / 2);
  Eigen::LLT<RMat> llt(0.5 * (gamma + gamma.transpose()));
  if (llt.info() != Eigen::Success) throw ConfigError("CM is not positive definite");
  const RMat L = llt.matrixL();
  const CMat H = cplx(0.0, 1.0) * (L.transpose() * sigma_form(m) * L).cast<cplx>();
  const RVec ev = Eigen::SelfAdjointEigenSolver<CMat>(H, Eigen::EigenvaluesOnly).eigenvalues();
  std::vector<double> nu(ev.data() + m, ev.data() + 2 * m);
  std::sort(nu.rbegin(), nu.rend());
  return nu;
}

inline double entropy_of(double nu) {
  if (std::abs(nu - 1.0) <= 1e-12) return 0.0;
  if (nu < 1.0) throw ConfigError("symplectic eigenvalue below 1: not a physical CM");
  const double a = 0.5 * (nu + 1.0), b = 0.5 * (nu - 1.0);
  return a * std::log(a) - b * std::log(b);
}

struct SiteRange {
  int start = 0;
  int length = 0;
};

struct EntanglementResult {
  std::vector<double> symplectic_eigs;
  double entropy = 0.0;
  double log_negativity = 0.0;
};

namespace detail {

inline std::vector<int> region_modes(const FiniteCM& cm, const SiteRange& B) {
  if (B.length <= 0 || B.length >= cm.N) throw ConfigError("region must be a proper nonempty subset of the ring");
  std::vector<int> idx;
  for (int t = 0; t < B.length; ++t) {
    const int site = ((B.start + t) % cm.N + cm.N) % cm.N;
    for (int a = 0; a < cm.d; ++a) idx.push_back(site * cm.d + a);
  }
  return idx;
}

}  // namespace detail

inline RMat restrict_cm(const FiniteCM& cm, const SiteRange& B) {
  const auto modes = detail::region_modes(cm, B);
  const int m = static_cast<int>(modes.size()), M = cm.modes();
  std::vector<int> rows;
  for (int q = 0; q < 2; ++q)
    for (int i : modes) rows.push_back(q * M + i);
  RMat out(2 * m, 2 * m);
  for (int a = 0; a < 2 * m; ++a)
    for (int b = 0; b < 2 * m; ++b) out(a, b) = cm.gamma(rows[a], rows[b]);
  return out;
}

inline double entanglement_entropy(const FiniteCM& cm, const SiteRange& B) {
  double S = 0.0;
  for (double nu : symplectic_eigs(restrict_cm(cm, B))) S += entropy_of(nu);
  return S;
}

// E_N = -sum_{nu < 1} ln nu over the partially transposed CM (p -> -p on B).
inline double log_negativity(const FiniteCM& cm, const SiteRange& B) {
  RMat g = cm.gamma;
  const int M = cm.modes();
  for (int i : detail::region_modes(cm, B)) {
    g.row(M + i) *= -1.0;
    g.col(M + i) *= -1.0;
  }
  double EN = 0.0;
  for (double nu : symplectic_eigs(g)) {
    if (nu < 1.0 - 1e-12) EN -= std::log(nu);
  }
  return EN;
}

inline EntanglementResult entanglement(const FiniteCM& cm, const SiteRange& B) {
  EntanglementResult r;
  r.symplectic_eigs = symplectic_eigs(restrict_cm(cm, B));
  for (double nu : r.symplectic_eigs) r.entropy += entropy_of(nu);
  r.log_negativity = log_negativity(cm, B);
  return r;
}

inline SiteRange bisection(int N) { return {0, N / 2}; }

// F = det((g1 + g2)/2)^(-1/4) for pure zero-mean states.
inline double fidelity(const RMat& g1, const RMat& g2) {
  if (g1.rows() != g2.rows() || g1.cols() != g2.cols()) throw ConfigError("fidelity: CM sizes differ");
  if (purity_residual(g1) > 1e-8 || purity_residual(g2) > 1e-8) throw ConfigError("fidelity requires pure CMs");
  const RMat avg = 0.25 * (g1 + g2 + g1.transpose() + g2.transpose());
  const RVec ev = Eigen::SelfAdjointEigenSolver<RMat>(avg, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev.minCoeff() <= 0.0) throw NumericalFailure("fidelity: averaged CM not positive definite");
  return std::exp(-0.25 * ev.array().log().sum());
}

}  // namespace qbh
