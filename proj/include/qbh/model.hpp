#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "types.hpp"

namespace qbh {

inline bool is_zero_offset(const Offset& r) {
  return std::all_of(r.begin(), r.end(), [](int v) { return v == 0; });
}

// Canonical half-space: r = 0 or first nonzero component positive.
inline bool is_canonical(const Offset& r) {
  for (int v : r) {
    if (v != 0) return v > 0;
  }
  return true;
}

inline Offset negate(Offset r) {
  for (int& v : r) v = -v;
  return r;
}

struct Coupling {
  Offset r;
  CMat K;
  CMat Delta;
};

// Translationally invariant QBH
//   H = sum_{j,r} a_j^dag K_r a_{j+r} + 1/2 (a_j^dag Delta_r a_{j+r}^dag + h.c.)
// Only canonical offsets are stored; K_{-r} = K_r^dag and Delta_{-r} = Delta_r^T
// are generated on access.
class QBHSpec {
 public:
  QBHSpec(int D, int d, int R) : D_(D), d_(d), R_(R) {
    if (D < 1) throw ConfigError("spatial dimension D must be >= 1");
    if (d < 1) throw ConfigError("band count d must be >= 1");
    if (R < 1) throw ConfigError("range R must be >= 1");
  }

  int D() const { return D_; }
  int d() const { return d_; }
  int R() const { return R_; }

  void set_hopping(const Offset& r, const CMat& K) { store(hop_, r, K, true); }
  void set_pairing(const Offset& r, const CMat& Delta) { store(pair_, r, Delta, false); }

  CMat hopping(const Offset& r) const { return fetch(hop_, r, true); }
  CMat pairing(const Offset& r) const { return fetch(pair_, r, false); }

  // Every offset (both half-spaces) carrying a coupling, sorted.
  std::vector<Offset> offsets() const {
    std::set<Offset> out;
    for (const auto* m : {&hop_, &pair_}) {
      for (const auto& [r, M] : *m) {
        out.insert(r);
        out.insert(negate(r));
      }
    }
    return {out.begin(), out.end()};
  }

  std::vector<Coupling> couplings() const {
    std::vector<Coupling> out;
    for (const auto& r : offsets()) out.push_back({r, hopping(r), pairing(r)});
    return out;
  }

  const std::map<Offset, CMat>& hopping_half() const { return hop_; }
  const std::map<Offset, CMat>& pairing_half() const { return pair_; }

 private:
  void check_offset(const Offset& r) const {
    if (static_cast<int>(r.size()) != D_)
      throw ConfigError("offset has " + std::to_string(r.size()) + " components, expected D=" +
                        std::to_string(D_));
    for (int v : r) {
      if (std::abs(v) > R_) throw ConfigError("offset component exceeds range R=" + std::to_string(R_));
    }
  }

  void store(std::map<Offset, CMat>& m, const Offset& r, const CMat& M, bool hermitian) {
    check_offset(r);
    if (M.rows() != d_ || M.cols() != d_) throw ConfigError("coupling matrix must be d x d");
    if (is_zero_offset(r)) {
      CMat partner = hermitian ? CMat(M.adjoint()) : CMat(M.transpose());
      double tol = 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff());
      if ((M - partner).cwiseAbs().maxCoeff() > tol)
        throw ConfigError(hermitian ? "on-site hopping K_0 must be Hermitian"
                                    : "on-site pairing Delta_0 must be symmetric");
      m[r] = 0.5 * (M + partner);
    } else if (is_canonical(r)) {
      m[r] = M;
    } else {
      m[negate(r)] = hermitian ? CMat(M.adjoint()) : CMat(M.transpose());
    }
  }

  CMat fetch(const std::map<Offset, CMat>& m, const Offset& r, bool hermitian) const {
    check_offset(r);
    if (is_canonical(r)) {
      auto it = m.find(r);
      return it == m.end() ? CMat::Zero(d_, d_) : it->second;
    }
    auto it = m.find(negate(r));
    if (it == m.end()) return CMat::Zero(d_, d_);
    return hermitian ? CMat(it->second.adjoint()) : CMat(it->second.transpose());
  }

  int D_, d_, R_;
  std::map<Offset, CMat> hop_;
  std::map<Offset, CMat> pair_;
};

// Quadrature couplings Hxx = Re(K+Delta), Hpp = Re(K-Delta), Hxp = Im(Delta-K), keyed by every
// offset (both half-spaces); constant_shift = tr(K_0)/2.
struct QuadratureForm {
  int D = 1, d = 1, R = 1;
  std::map<Offset, RMat> Hxx, Hpp, Hxp;
  double constant_shift = 0.0;
};

inline QuadratureForm to_quadrature(const QBHSpec& spec) {
  QuadratureForm q{spec.D(), spec.d(), spec.R(), {}, {}, {}, 0.0};
  for (const auto& c : spec.couplings()) {
    q.Hxx[c.r] = (c.K + c.Delta).real();
    q.Hpp[c.r] = (c.K - c.Delta).real();
    q.Hxp[c.r] = (c.Delta - c.K).imag();
  }
  Offset zero(spec.D(), 0);
  q.constant_shift = 0.5 * spec.hopping(zero).trace().real();
  return q;
}

inline QBHSpec from_quadrature(const QuadratureForm& q) {
  QBHSpec spec(q.D, q.d, q.R);
  auto get = [&](const std::map<Offset, RMat>& m, const Offset& r) -> RMat {
    auto it = m.find(r);
    return it == m.end() ? RMat::Zero(q.d, q.d) : it->second;
  };
  std::set<Offset> all;
  for (const auto* m : {&q.Hxx, &q.Hpp, &q.Hxp}) {
    for (const auto& [r, M] : *m) {
      if (M.rows() != q.d || M.cols() != q.d) throw ConfigError("quadrature coupling must be d x d");
      all.insert(r);
      all.insert(negate(r));
    }
  }
  for (const auto& r : all) {
    const Offset mr = negate(r);
    double scale = std::max({1.0, get(q.Hxx, r).cwiseAbs().maxCoeff(), get(q.Hpp, r).cwiseAbs().maxCoeff()});
    if ((get(q.Hxx, r) - get(q.Hxx, mr).transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ConfigError("Hxx is not symmetric (Hxx_{-r} != Hxx_r^T)");
    if ((get(q.Hpp, r) - get(q.Hpp, mr).transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ConfigError("Hpp is not symmetric (Hpp_{-r} != Hpp_r^T)");
  }
  const cplx I(0.0, 1.0);
  for (const auto& r : all) {
    if (!is_canonical(r)) continue;
    const RMat xx = get(q.Hxx, r), pp = get(q.Hpp, r);
    const RMat xp = get(q.Hxp, r), xpT = get(q.Hxp, negate(r)).transpose();
    CMat K = (0.5 * (xx + pp)).cast<cplx>() + I * (0.5 * (xpT - xp)).cast<cplx>();
    CMat Dl = (0.5 * (xx - pp)).cast<cplx>() + I * (0.5 * (xp + xpT)).cast<cplx>();
    if (K.cwiseAbs().maxCoeff() > 0) spec.set_hopping(r, K);
    if (Dl.cwiseAbs().maxCoeff() > 0) spec.set_pairing(r, Dl);
  }
  return spec;
}

// Built-in one-band chains.
struct HarmonicChain {
  double Omega = 1.0, J = 0.0;
};
struct ImagHopChain {
  double Omega = 1.0, J = 0.0, gamma = 0.0;
};
struct Interpolation {
  double Omega = 1.0, J = 0.0, Delta = 0.0, s = 0.0;
};
struct DoubleChain {
  double Omega1 = 0.0, Omega2 = 0.0, K1 = 1.0, K2 = 1.0;
};

using ModelParams = std::variant<HarmonicChain, ImagHopChain, Interpolation, DoubleChain>;

inline std::string model_name(const ModelParams& p) {
  struct V {
    std::string operator()(const HarmonicChain&) const { return "harmonic"; }
    std::string operator()(const ImagHopChain&) const { return "imaghop"; }
    std::string operator()(const Interpolation&) const { return "interpolation"; }
    std::string operator()(const DoubleChain&) const { return "double"; }
  };
  return std::visit(V{}, p);
}

inline ModelParams default_params(const std::string& name) {
  if (name == "harmonic") return HarmonicChain{};
  if (name == "imaghop") return ImagHopChain{};
  if (name == "interpolation") return Interpolation{};
  if (name == "double") return DoubleChain{};
  throw ConfigError("unknown model '" + name + "' (expected harmonic, imaghop, interpolation, double)");
}

namespace detail {

template <class F>
auto with_fields(ModelParams& p, F&& f) {
  return std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HarmonicChain>)
          return f(std::vector<std::pair<std::string, double*>>{{"Omega", &m.Omega}, {"J", &m.J}});
        else if constexpr (std::is_same_v<T, ImagHopChain>)
          return f(std::vector<std::pair<std::string, double*>>{{"Omega", &m.Omega}, {"J", &m.J}, {"gamma", &m.gamma}});
        else if constexpr (std::is_same_v<T, Interpolation>)
          return f(std::vector<std::pair<std::string, double*>>{
              {"Omega", &m.Omega}, {"J", &m.J}, {"Delta", &m.Delta}, {"s", &m.s}});
        else
          return f(std::vector<std::pair<std::string, double*>>{
              {"Omega1", &m.Omega1}, {"Omega2", &m.Omega2}, {"K1", &m.K1}, {"K2", &m.K2}});
      },
      p);
}

}  // namespace detail

inline std::vector<std::string> param_names(const ModelParams& p) {
  ModelParams c = p;
  return detail::with_fields(c, [](const auto& fields) {
    std::vector<std::string> out;
    for (const auto& f : fields) out.push_back(f.first);
    return out;
  });
}

inline double get_param(const ModelParams& p, const std::string& name) {
  ModelParams c = p;
  return detail::with_fields(c, [&](const auto& fields) {
    for (const auto& f : fields) {
      if (f.first == name) return *f.second;
    }
    throw ConfigError("model '" + model_name(p) + "' has no parameter '" + name + "'");
  });
}

inline void set_param(ModelParams& p, const std::string& name, double value) {
  detail::with_fields(p, [&](const auto& fields) {
    for (const auto& f : fields) {
      if (f.first == name) {
        *f.second = value;
        return 0;
      }
    }
    throw ConfigError("model '" + model_name(p) + "' has no parameter '" + name + "'");
  });
}

inline void validate(const ModelParams& p) {
  auto chain = [](double Omega, double J) {
    if (!(J >= 0.0)) throw ConfigError("constraint violated: J >= 0");
    if (!(Omega >= 2.0 * J)) throw ConfigError("constraint violated: Omega >= 2J");
  };
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, HarmonicChain>) {
          chain(m.Omega, m.J);
        } else if constexpr (std::is_same_v<T, ImagHopChain>) {
          chain(m.Omega, m.J);
          if (!std::isfinite(m.gamma)) throw ConfigError("constraint violated: gamma finite");
        } else if constexpr (std::is_same_v<T, Interpolation>) {
          if (!(m.s >= 0.0 && m.s <= 1.0)) throw ConfigError("constraint violated: s in [0,1]");
          if (!(m.Omega > 0.0)) throw ConfigError("constraint violated: Omega > 0");
          if (!std::isfinite(m.J) || !std::isfinite(m.Delta)) throw ConfigError("constraint violated: J, Delta finite");
        } else {
          if (!(m.Omega1 >= 0.0)) throw ConfigError("constraint violated: Omega1 >= 0");
          if (!(m.Omega2 >= 0.0)) throw ConfigError("constraint violated: Omega2 >= 0");
          if (!(m.K1 >= 0.0)) throw ConfigError("constraint violated: K1 >= 0");
          if (!(m.K2 >= 0.0)) throw ConfigError("constraint violated: K2 >= 0");
        }
      },
      p);
}

inline QBHSpec build_model(const ModelParams& p) {
  validate(p);
  QBHSpec spec(1, 1, 1);
  const Offset o0{0}, o1{1};
  const cplx I(0.0, 1.0);
  auto m = [](cplx v) { return CMat::Constant(1, 1, v); };
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, HarmonicChain> || std::is_same_v<T, ImagHopChain>) {
          double gamma = 0.0;
          if constexpr (std::is_same_v<T, ImagHopChain>) gamma = q.gamma;
          spec.set_hopping(o0, m(q.Omega));
          spec.set_hopping(o1, m(-0.5 * q.J - 0.5 * I * gamma));
          spec.set_pairing(o1, m(-0.5 * q.J));
        } else if constexpr (std::is_same_v<T, Interpolation>) {
          spec.set_hopping(o0, m((1.0 - q.s) * q.Omega));
          spec.set_hopping(o1, m(-0.5 * I * q.s * q.J));
          spec.set_pairing(o1, m(0.5 * I * q.s * q.Delta));
        } else {
          spec.set_hopping(o0, m(q.Omega1 + q.Omega2 + q.K1 + q.K2));
          spec.set_hopping(o1, m(-0.5 * (q.K1 + q.K2)));
          spec.set_pairing(o0, m(q.Omega2 - q.Omega1 + q.K2 - q.K1));
          spec.set_pairing(o1, m(-0.5 * (q.K2 - q.K1)));
        }
      },
      p);
  return spec;
}

// Largest residual of K_{-r} - K_r^dag and Delta_{-r} - Delta_r^T over all offsets.
inline double hermiticity_residual(const QBHSpec& spec) {
  double res = 0.0;
  for (const auto& r : spec.offsets()) {
    res = std::max(res, (spec.hopping(negate(r)) - spec.hopping(r).adjoint()).cwiseAbs().maxCoeff());
    res = std::max(res, (spec.pairing(negate(r)) - spec.pairing(r).transpose()).cwiseAbs().maxCoeff());
  }
  return res;
}

}  // namespace qbh
