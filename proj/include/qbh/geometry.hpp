#pragma once

#include <functional>
#include <optional>

#include "correlations.hpp"

namespace qbh {

// A smooth family of specs over named real parameters.
struct ModelFamily {
  std::vector<std::string> names;
  std::function<QBHSpec(const std::vector<double>&)> make;
};

// Interpolation model at Omega = 1, s = 1/2, J = 1, Delta = alpha, so alpha = s Delta / (Omega (1 - s)).
inline ModelFamily interpolation_alpha_family() {
  return {{"alpha"}, [](const std::vector<double>& p) { return build_model(Interpolation{1.0, 1.0, p[0], 0.5}); }};
}

inline ModelFamily double_chain_family(double K1 = 1.0, double K2 = 1.0) {
  return {{"Omega1", "Omega2"},
          [K1, K2](const std::vector<double>& p) { return build_model(DoubleChain{p[0], p[1], K1, K2}); }};
}

// Harmonic chain at Omega = 1, alpha = 2J / Omega.
inline ModelFamily harmonic_alpha_family() {
  return {{"alpha"}, [](const std::vector<double>& p) { return build_model(HarmonicChain{1.0, 0.5 * p[0]}); }};
}

// Varies the listed parameters of a built-in model, all others held at base.
inline ModelFamily family_from_params(const ModelParams& base, std::vector<std::string> names) {
  for (const auto& n : names) get_param(base, n);
  return {names, [base, names](const std::vector<double>& p) {
            ModelParams q = base;
            for (std::size_t i = 0; i < names.size(); ++i) set_param(q, names[i], p[i]);
            return build_model(q);
          }};
}

struct QMTResult {
  KVec k;
  std::vector<std::string> names;
  std::vector<double> params;
  RMat g;   // symmetrized real metric
  CMat chi; // raw geometric tensor
  int band = 0;
};

namespace detail {

inline CVec right_vector(const ModelFamily& fam, const std::vector<double>& p, const KVec& k, int band,
                         const Tolerances& tol) {
  const QBHSpec spec = fam.make(p);
  const SpectralPoint sp = diagonalize(eval_bloch(spec, k), 0.0, tol);
  if (!sp.regular())
    throw SingularPointError(std::string("singular stencil: ") + to_string(sp.classification) + " at k = " + format_k(k),
                             k);
  if (band < 0 || band >= sp.d) throw ConfigError("band index out of range");
  return sp.eigenvectors.col(band);
}

// Rotate v so that c^dag v is real and positive.
inline CVec align_phase(const CVec& v, const CVec& c) {
  const cplx o = c.dot(v);
  if (std::abs(o) == 0.0) return v;
  return v * (std::conj(o) / std::abs(o));
}

inline double fd_step(double p, double rel) { return p == 0.0 ? rel : rel * std::abs(p); }

}  // namespace detail

// chi_{mu nu} = (d_mu bL)^dag d_nu bR - (d_mu bL)^dag bR (bL^dag d_nu bR), bL = tau3 bR,
// with central differences on a phase-aligned stencil (one-sided at a domain edge).
inline QMTResult qmt(const ModelFamily& fam, const std::vector<double>& params, const KVec& k, int band = 0,
                     double h_rel = 1e-5, const Tolerances& tol = {}) {
  const std::size_t P = fam.names.size();
  if (params.size() != P) throw ConfigError("parameter vector size does not match family");
  const CVec c = detail::right_vector(fam, params, k, band, tol);
  const CMat t3 = tau3(static_cast<int>(c.size() / 2));
  std::vector<CVec> dR(P);
  for (std::size_t m = 0; m < P; ++m) {
    const double h = detail::fd_step(params[m], h_rel);
    auto at = [&](double step) {
      auto q = params;
      q[m] += step;
      return detail::align_phase(detail::right_vector(fam, q, k, band, tol), c);
    };
    auto try_at = [&](double step) -> std::optional<CVec> {
      try {
        return at(step);
      } catch (const ConfigError&) {
        return std::nullopt;  // outside the parameter domain
      }
    };
    const auto vp = try_at(h), vm = try_at(-h);
    if (vp && vm) {
      dR[m] = (*vp - *vm) / (2.0 * h);
    } else if (vp) {
      dR[m] = (4.0 * *vp - 3.0 * c - at(2.0 * h)) / (2.0 * h);
    } else if (vm) {
      dR[m] = (3.0 * c - 4.0 * *vm + at(-2.0 * h)) / (2.0 * h);
    } else {
      throw ConfigError("parameter " + fam.names[m] + " has no admissible finite-difference neighbour");
    }
  }
  const CVec cL = t3 * c;
  QMTResult res{k, fam.names, params, RMat::Zero(P, P), CMat::Zero(P, P), band};
  for (std::size_t m = 0; m < P; ++m) {
    const CVec dL = t3 * dR[m];
    for (std::size_t n = 0; n < P; ++n) res.chi(m, n) = dL.dot(dR[n]) - dL.dot(c) * cL.dot(dR[n]);
  }
  for (std::size_t m = 0; m < P; ++m)
    for (std::size_t n = 0; n < P; ++n) res.g(m, n) = 0.5 * (res.chi(m, n) + res.chi(n, m)).real();
  return res;
}

inline cplx qgt(const ModelFamily& fam, const std::vector<double>& params, const KVec& k, std::size_t mu,
                std::size_t nu, int band = 0, double h_rel = 1e-5, const Tolerances& tol = {}) {
  if (mu >= fam.names.size() || nu >= fam.names.size()) throw ConfigError("parameter index out of range");
  return qmt(fam, params, k, band, h_rel, tol).chi(mu, nu);
}

struct ScanPoint {
  std::vector<double> params;
  RMat g;
  double magnitude = 0.0;  // max |g_{mu nu}|
  bool divergent = false;
  std::string note;
};

// |g| over a list of parameter points at fixed k_c; singular or huge values are flagged.
inline std::vector<ScanPoint> qmt_divergence_scan(const ModelFamily& fam, const std::vector<std::vector<double>>& grid,
                                                  const KVec& k_c, double tol = 1e-6, int band = 0) {
  std::vector<ScanPoint> out;
  for (const auto& p : grid) {
    ScanPoint s;
    s.params = p;
    try {
      s.g = qmt(fam, p, k_c, band).g;
      s.magnitude = s.g.cwiseAbs().maxCoeff();
      s.divergent = !(s.magnitude <= 1.0 / tol);
    } catch (const Error& e) {
      s.magnitude = std::numeric_limits<double>::infinity();
      s.divergent = true;
      s.note = e.what();
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace qbh
