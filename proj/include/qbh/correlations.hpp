#pragma once

#include <charconv>

#include "quadrature.hpp"
#include "stability.hpp"

namespace qbh {

// Nambu array [a; a^dag] = U [x; p], x = (a + a^dag)/sqrt2, p = i(a^dag - a)/sqrt2.
inline CMat nambu_U(int d) {
  const cplx I(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  CMat U(2 * d, 2 * d);
  const CMat Id = CMat::Identity(d, d);
  U << s * Id, I * s * Id, s * Id, -I * s * Id;
  return U;
}

// gamma_{ab}(k) in quadrature order [x_1..x_d, p_1..p_d]; the Fock vacuum has gamma = 1.
struct MomentumCM {
  KVec k;
  CMat gamma;
  CMat c_bosonic;
};

namespace detail {

inline CMat gamma_closed_form(const PauliDecomposition& p, double E) {
  const double f = (p.d3 >= 0.0 ? 1.0 : -1.0) / E;
  CMat g(2, 2);
  g << f * (p.d3 - p.d2), -f * p.d1, -f * p.d1, f * (p.d3 + p.d2);
  return g;
}

inline CMat gamma_from_modes(const SpectralPoint& sp) {
  const CMat L = sp.eigenvectors.leftCols(2 * sp.d);
  const CMat U = nambu_U(sp.d);
  return U.adjoint() * (L * L.adjoint()) * U;
}

}  // namespace detail

// Momentum-space CM without classification, for quadrature nodes near (but off) singular
// momenta. Returns nullopt where no tau3-normalizable mode basis exists.
class GammaEvaluator {
 public:
  GammaEvaluator(const QBHSpec& spec, double scale, Tolerances tol = {}) : ev_(spec), scale_(scale), tol_(tol) {}

  int d() const { return ev_.d(); }

  std::optional<CMat> operator()(const KVec& k) const {
    const BlochPoint bp = ev_(k);
    if (ev_.d() == 1) {
      const PauliDecomposition p = pauli_decompose(bp);
      const double e2 = p.e2();
      if (!(e2 > 0.0)) return std::nullopt;
      return detail::gamma_closed_form(p, std::sqrt(e2));
    }
    const SpectralPoint sp = diagonalize_dense(bp, scale_, tol_);
    if (sp.classification == PointClass::ComplexUnstable) return std::nullopt;
    for (int c = 0; c < 2 * sp.d; ++c) {
      if (sp.signatures[c] != (c < sp.d ? 1 : -1)) return std::nullopt;
    }
    return detail::gamma_from_modes(sp);
  }

 private:
  BlochEvaluator ev_;
  double scale_;
  Tolerances tol_;
};

inline MomentumCM qpv_cm_momentum(const QBHSpec& spec, const KVec& k, double scale = 0.0, const Tolerances& tol = {}) {
  const BlochPoint bp = eval_bloch(spec, k);
  const SpectralPoint sp = diagonalize(bp, scale, tol);
  if (sp.classification == PointClass::ComplexUnstable)
    throw InstabilityError("complex frequency at k = " + format_k(k) + ": no quasiparticle vacuum");
  if (!sp.regular())
    throw SingularPointError(std::string(to_string(sp.classification)) + " at k = " + format_k(k) +
                                 ": quasiparticle vacuum CM undefined",
                             k);
  MomentumCM cm;
  cm.k = k;
  const CMat U = nambu_U(sp.d);
  if (sp.d == 1) {
    const auto& p = *sp.pauli;
    cm.gamma = detail::gamma_closed_form(p, std::sqrt(p.e2()));
    cm.c_bosonic = U * cm.gamma * U.adjoint();
  } else {
    const CMat L = sp.eigenvectors.leftCols(2 * sp.d);
    cm.c_bosonic = L * L.adjoint();
    cm.gamma = U.adjoint() * cm.c_bosonic * U;
  }
  return cm;
}

struct KreinProjector {
  KVec k;
  CMat P;
};

inline KreinProjector krein_projector(const SpectralPoint& sp) {
  if (!sp.regular())
    throw SingularPointError(std::string("Krein projector undefined at ") + to_string(sp.classification) + " point", sp.k);
  const CMat B = sp.particle_vectors();
  return {sp.k, B * B.adjoint() * tau3(sp.d)};
}

// C = (2P - 1) tau3
inline CMat cm_from_projector(const KreinProjector& kp) {
  const int n = static_cast<int>(kp.P.rows());
  return (2.0 * kp.P - CMat::Identity(n, n)) * tau3(n / 2);
}

// max |sum_n (b+ b+^dag - b- b-^dag) tau3 - 1|
inline double resolution_residual(const SpectralPoint& sp) {
  const CMat Bp = sp.particle_vectors(), Bm = sp.hole_vectors();
  const CMat R = (Bp * Bp.adjoint() - Bm * Bm.adjoint()) * tau3(sp.d);
  return (R - CMat::Identity(R.rows(), R.cols())).cwiseAbs().maxCoeff();
}

enum class Block { xx, pp, xp, px };

inline const char* to_string(Block b) {
  switch (b) {
    case Block::xx: return "xx";
    case Block::pp: return "pp";
    case Block::xp: return "xp";
    case Block::px: return "px";
  }
  return "?";
}

// Gamma(r)_{ab} = <{R_{j,a}, R_{j+r,b}}>, blocks [[xx, xp], [px, pp]] of size 2d x 2d.
struct RealSpaceCM {
  int D = 1, d = 1;
  std::vector<Offset> separations;
  std::vector<RMat> blocks;
  std::vector<RMat> errors;
  std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> converged;
  std::string method;
  std::size_t points = 0;
  double krein_gap = 0.0;
  bool gapless = false;

  std::size_t index(const Offset& r) const {
    auto it = std::find(separations.begin(), separations.end(), r);
    if (it == separations.end()) throw ConfigError("separation not computed");
    return static_cast<std::size_t>(it - separations.begin());
  }
  const RMat& at(const Offset& r) const { return blocks[index(r)]; }
  double value(const Offset& r, Block b, int band_a = 0, int band_b = 0) const {
    const int ra = (b == Block::pp || b == Block::px) ? d : 0;
    const int cb = (b == Block::pp || b == Block::xp) ? d : 0;
    return at(r)(ra + band_a, cb + band_b);
  }
};

namespace detail {

inline std::vector<Offset> box_offsets(int D, int r_max) {
  std::vector<Offset> out;
  const int w = 2 * r_max + 1;
  std::size_t total = 1;
  for (int a = 0; a < D; ++a) total *= static_cast<std::size_t>(w);
  for (std::size_t t = 0; t < total; ++t) {
    Offset r(D);
    std::size_t rem = t;
    for (int a = D - 1; a >= 0; --a) {
      r[a] = static_cast<int>(rem % w) - r_max;
      rem /= w;
    }
    out.push_back(r);
  }
  return out;
}

struct Prepared {
  StabilityReport report;
  bool gapless = false;
  bool use_gk = false;
  std::vector<double> breaks;
};

inline Prepared prepare(const QBHSpec& spec, const QuadratureSettings& qs, const Tolerances& tol) {
  Prepared p;
  const GridSpectrum gs = sample_grid(spec, BZGrid::default_for(spec.D()), tol);
  p.report = stability_report(spec, gs, tol);
  for (const auto& [k, c] : p.report.singular_momenta) {
    if (c == PointClass::ComplexUnstable)
      throw InstabilityError("dynamically unstable (complex eigenvalues at k = " + format_k(k) + ")");
  }
  p.gapless = !p.report.singular_momenta.empty() || p.report.krein_gap_direct <= 0.0;
  if (p.gapless && !qs.allow_gapless) {
    const KVec k = p.report.singular_momenta.empty() ? p.report.gap_argmin_k : p.report.singular_momenta.front().first;
    throw SingularPointError("Krein gap closes at k = " + format_k(k), k);
  }
  p.use_gk = spec.D() == 1 && (p.gapless || p.report.krein_gap_direct < qs.near_critical_gap);
  if (p.gapless && spec.D() > 1) throw UnsupportedOperation("gapless integration is only supported for D = 1");
  if (p.use_gk) {
    std::vector<double> extra;
    for (const auto& [k, c] : p.report.singular_momenta) extra.push_back(k[0]);
    if (!p.report.gap_argmin_k.empty()) {
      extra.push_back(p.report.gap_argmin_k[0]);
      extra.push_back(-p.report.gap_argmin_k[0]);
    }
    p.breaks = make_breakpoints(extra);
  }
  return p;
}

// Integrates m components c(k) = sum over entries of Re(phase * gamma(k)) via either engine.
// integrand(gamma, k, out) writes m values.
inline QuadResult integrate_cm(const QBHSpec& spec, const Prepared& prep, std::size_t m,
                               const std::function<void(const CMat&, const KVec&, double*)>& integrand,
                               const QuadratureSettings& qs, const Tolerances& tol) {
  GammaEvaluator gamma(spec, prep.report.scale, tol);
  if (!prep.use_gk) {
    return trapezoid_bz(spec.D(), m, [&](const KVec& k, double* out) {
      auto g = gamma(k);
      if (!g) return false;
      integrand(*g, k, out);
      return true;
    }, qs);
  }
  QuadResult res = gk_integrate(m, [&](double k, double* out) {
    auto g = gamma(KVec{k});
    if (!g) return false;
    integrand(*g, KVec{k}, out);
    return true;
  }, prep.breaks, qs);
  // at a gap closing, entries whose error refuses to shrink are divergent integrals
  if (prep.gapless) {
    for (std::size_t c = 0; c < m; ++c)
      if (!res.converged[c] && !(res.error[c] < 1e-6)) res.value[c] = std::numeric_limits<double>::infinity();
  }
  return res;
}

inline cplx phase(const KVec& k, const Offset& r) {
  double ph = 0.0;
  for (std::size_t a = 0; a < k.size(); ++a) ph += k[a] * r[a];
  return {std::cos(ph), -std::sin(ph)};
}

}  // namespace detail

// Gamma(r) = <{R_j, R_{j+r}}> = integral dk/(2pi)^D e^{-ik.r} gamma(k), all r with |r|_inf <= r_max.
inline RealSpaceCM real_space_cm(const QBHSpec& spec, int r_max, const QuadratureSettings& qs = {},
                                 const Tolerances& tol = {}) {
  if (r_max < 0) throw ConfigError("r_max must be >= 0");
  const auto prep = detail::prepare(spec, qs, tol);
  RealSpaceCM cm;
  cm.D = spec.D();
  cm.d = spec.d();
  cm.separations = detail::box_offsets(spec.D(), r_max);
  cm.krein_gap = prep.report.krein_gap_direct;
  cm.gapless = prep.gapless;
  const int n = 2 * spec.d();
  const std::size_t nsep = cm.separations.size(), per = static_cast<std::size_t>(n * n);
  auto integrand = [&](const CMat& g, const KVec& k, double* out) {
    for (std::size_t s = 0; s < nsep; ++s) {
      const cplx e = detail::phase(k, cm.separations[s]);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) out[s * per + a * n + b] = (e * g(a, b)).real();
    }
  };
  const QuadResult q = detail::integrate_cm(spec, prep, nsep * per, integrand, qs, tol);
  cm.method = q.method;
  cm.points = q.points;
  for (std::size_t s = 0; s < nsep; ++s) {
    RMat B(n, n), E(n, n);
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> C(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        const std::size_t c = s * per + a * n + b;
        B(a, b) = q.value[c];
        E(a, b) = q.error[c];
        C(a, b) = q.converged[c];
      }
    }
    cm.blocks.push_back(B);
    cm.errors.push_back(E);
    cm.converged.push_back(C);
  }
  return cm;
}

// Composite operator A_j = sum_t c_t R_{q_t, band_t}(j + o_t).
struct StencilTerm {
  double coeff = 1.0;
  bool momentum = false;  // false: x, true: p
  int band = 0;
  Offset offset;
};

struct Stencil {
  std::vector<StencilTerm> terms;
};

// Grammar: term (('+'|'-') term)*, term = [number ['*']] ('x'|'p') ['[' band ']'] '@' offset,
// offset = int | '(' int (',' int)* ')'. Example: "x@0+p@1", "0.5*x[1]@(1,0) - p@0".
inline Stencil parse_stencil(const std::string& text) {
  std::string s;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  }
  auto fail = [&](const std::string& why) { throw ConfigError("bad stencil '" + text + "': " + why); };
  auto parse_int = [&](std::size_t& pos) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
    if (ec != std::errc()) fail("expected integer at position " + std::to_string(pos));
    pos = static_cast<std::size_t>(ptr - s.data());
    return v;
  };
  Stencil st;
  std::size_t pos = 0;
  if (s.empty()) fail("empty");
  while (pos < s.size()) {
    double sign = 1.0;
    if (s[pos] == '+' || s[pos] == '-') {
      sign = s[pos] == '-' ? -1.0 : 1.0;
      ++pos;
    } else if (!st.terms.empty()) {
      fail("expected '+' or '-' at position " + std::to_string(pos));
    }
    StencilTerm t;
    if (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
      double c = 0.0;
      auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), c);
      if (ec != std::errc()) fail("bad coefficient");
      pos = static_cast<std::size_t>(ptr - s.data());
      t.coeff = c;
      if (pos < s.size() && s[pos] == '*') ++pos;
    }
    t.coeff *= sign;
    if (pos >= s.size() || (s[pos] != 'x' && s[pos] != 'p')) fail("expected 'x' or 'p'");
    t.momentum = s[pos] == 'p';
    ++pos;
    if (pos < s.size() && s[pos] == '[') {
      ++pos;
      t.band = parse_int(pos);
      if (pos >= s.size() || s[pos] != ']') fail("expected ']'");
      ++pos;
    }
    if (pos >= s.size() || s[pos] != '@') fail("expected '@'");
    ++pos;
    if (pos < s.size() && s[pos] == '(') {
      ++pos;
      t.offset.push_back(parse_int(pos));
      while (pos < s.size() && s[pos] == ',') {
        ++pos;
        t.offset.push_back(parse_int(pos));
      }
      if (pos >= s.size() || s[pos] != ')') fail("expected ')'");
      ++pos;
    } else {
      t.offset.push_back(parse_int(pos));
    }
    st.terms.push_back(t);
  }
  return st;
}

struct StencilCorrelation {
  std::vector<Offset> separations;
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<bool> converged;
  std::string method;
  bool gapless = false;
};

// Symmetrized two-point function <A_j A_{j+r}>_sym = 1/2 <{A_j, A_{j+r}}>, contracted
// against gamma(k) before integration so that divergences of single entries cancel.
inline StencilCorrelation stencil_correlator(const QBHSpec& spec, const Stencil& st, const std::vector<Offset>& rs,
                                             QuadratureSettings qs = {}, const Tolerances& tol = {}) {
  const int d = spec.d();
  for (const auto& t : st.terms) {
    if (static_cast<int>(t.offset.size()) != spec.D()) throw ConfigError("stencil offset dimension mismatch");
    if (t.band < 0 || t.band >= d) throw ConfigError("stencil band index out of range");
  }
  for (const auto& r : rs) {
    if (static_cast<int>(r.size()) != spec.D()) throw ConfigError("separation dimension mismatch");
  }
  const auto prep = detail::prepare(spec, qs, tol);
  auto integrand = [&](const CMat& g, const KVec& k, double* out) {
    for (std::size_t s = 0; s < rs.size(); ++s) {
      cplx acc = 0.0;
      for (const auto& t : st.terms) {
        for (const auto& u : st.terms) {
          Offset sep = rs[s];
          for (std::size_t a = 0; a < sep.size(); ++a) sep[a] += u.offset[a] - t.offset[a];
          const int ia = (t.momentum ? d : 0) + t.band, ib = (u.momentum ? d : 0) + u.band;
          acc += t.coeff * u.coeff * detail::phase(k, sep) * g(ia, ib);
        }
      }
      out[s] = 0.5 * acc.real();
    }
  };
  const QuadResult q = detail::integrate_cm(spec, prep, rs.size(), integrand, qs, tol);
  return {rs, q.value, q.error, q.converged, q.method, prep.gapless};
}

enum class Parity { All, Even, Odd, Auto };

struct FitOptions {
  int r_min = 5;
  int r_max = 40;
  double floor = 1e-13;
  Parity parity = Parity::Auto;
  bool power_law = false;  // add a log r regressor for the algebraic prefactor
  int band_a = 0, band_b = 0;
};

struct CorrelationFit {
  double xi = 0.0;
  double amplitude = 0.0;
  std::pair<int, int> fit_window{0, 0};
  double residual = 0.0;
  int points = 0;
  double power = 0.0;  // |Gamma| ~ amplitude * r^-power * exp(-r/xi) when power_law is set
  Parity parity = Parity::All;
};

// Least-squares fit of log|Gamma_block(r)| against r (D = 1).
inline CorrelationFit correlation_length(const RealSpaceCM& cm, Block block, const FitOptions& opt = {}) {
  if (cm.D != 1) throw UnsupportedOperation("correlation_length supports D = 1 only");
  auto val = [&](int r) -> std::optional<double> {
    auto it = std::find(cm.separations.begin(), cm.separations.end(), Offset{r});
    if (it == cm.separations.end()) return std::nullopt;
    return cm.value({r}, block, opt.band_a, opt.band_b);
  };
  Parity par = opt.parity;
  if (par == Parity::Auto) {
    double me = 0.0, mo = 0.0;
    for (int r = opt.r_min; r <= opt.r_max; ++r) {
      auto v = val(r);
      if (!v || !std::isfinite(*v)) continue;
      (r % 2 == 0 ? me : mo) = std::max(r % 2 == 0 ? me : mo, std::abs(*v));
    }
    par = mo < 1e-8 * me ? Parity::Even : (me < 1e-8 * mo ? Parity::Odd : Parity::All);
  }
  std::vector<double> rr, yy;
  int hi = opt.r_min;
  for (int r = opt.r_min; r <= opt.r_max; ++r) {
    if (par == Parity::Even && r % 2 != 0) continue;
    if (par == Parity::Odd && r % 2 == 0) continue;
    auto v = val(r);
    if (!v) break;
    if (!std::isfinite(*v) || std::abs(*v) <= opt.floor) break;
    rr.push_back(r);
    yy.push_back(std::log(std::abs(*v)));
    hi = r;
  }
  const int npar = opt.power_law ? 3 : 2;
  if (rr.size() < 8) throw ConfigError("correlation_length: fewer than 8 separations above the numeric floor");
  RMat A(rr.size(), npar);
  RVec y(rr.size());
  for (std::size_t i = 0; i < rr.size(); ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = rr[i];
    if (opt.power_law) A(i, 2) = std::log(rr[i]);
    y(i) = yy[i];
  }
  const RVec c = A.colPivHouseholderQr().solve(y);
  if (!(c(1) < 0.0)) throw NumericalFailure("correlation_length: no exponential decay in the fit window");
  CorrelationFit fit;
  fit.xi = -1.0 / c(1);
  fit.amplitude = std::exp(c(0));
  fit.power = opt.power_law ? -c(2) : 0.0;
  fit.fit_window = {static_cast<int>(rr.front()), hi};
  fit.points = static_cast<int>(rr.size());
  fit.residual = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(rr.size()));
  fit.parity = par;
  return fit;
}

struct XiEstimate {
  double xi = 0.0;
  Block block = Block::xx;
  CorrelationFit fit;
};

// Asymptotic correlation length: the slower-decaying of the xx/pp channels, a window scaled
// to the first estimate, and an algebraic prefactor term in the fit.
inline XiEstimate estimate_xi(const QBHSpec& spec, const QuadratureSettings& qs = {}, const Tolerances& tol = {}) {
  auto pick = [&](const RealSpaceCM& cm, int r_lo, int r_hi) {
    std::optional<XiEstimate> best;
    double best_tail = -1.0;
    for (Block b : {Block::xx, Block::pp}) {
      FitOptions o;
      o.r_min = r_lo;
      o.r_max = r_hi;
      o.power_law = true;
      try {
        CorrelationFit f = correlation_length(cm, b, o);
        const double tail = std::abs(cm.value({f.fit_window.second}, b)) * std::exp(f.fit_window.second / f.xi);
        const double score = -static_cast<double>(f.fit_window.second) / f.xi + std::log(tail);
        if (!best || score > best_tail) {
          best = XiEstimate{f.xi, b, f};
          best_tail = score;
        }
      } catch (const Error&) {
      }
    }
    if (!best) throw NumericalFailure("no channel admits a correlation-length fit");
    return *best;
  };
  const RealSpaceCM cm0 = real_space_cm(spec, 40, qs, tol);
  const XiEstimate first = pick(cm0, 5, 40);
  const int r0 = std::max(5, static_cast<int>(std::ceil(2.0 * first.xi)));
  const int r1 = std::min(4000, std::max(r0 + 15, static_cast<int>(std::ceil(10.0 * first.xi))));
  const RealSpaceCM cm1 = real_space_cm(spec, r1, qs, tol);
  return pick(cm1, r0, r1);
}

struct PathPoint {
  double t = 0.0;
  double gap = 0.0;
  double xi = 0.0;
  bool used = false;
  std::string note;
};

struct DynamicExponent {
  double z = 0.0;
  std::vector<PathPoint> points;
};

// z from the least-squares slope of log gap against log xi along a one-parameter path.
inline DynamicExponent dynamic_exponent(const std::function<QBHSpec(double)>& path, const std::vector<double>& ts,
                                        const QuadratureSettings& qs = {}, const Tolerances& tol = {}) {
  DynamicExponent out;
  std::vector<double> lx, lg;
  for (double t : ts) {
    PathPoint p;
    p.t = t;
    try {
      const QBHSpec spec = path(t);
      p.gap = krein_gap(spec, BZGrid::default_for(spec.D()), tol).direct;
      if (!(p.gap > 0.0)) throw SingularPointError("gap closed", {});
      p.xi = estimate_xi(spec, qs, tol).xi;
      p.used = true;
      lx.push_back(std::log(p.xi));
      lg.push_back(std::log(p.gap));
    } catch (const Error& e) {
      p.note = e.what();
    }
    out.points.push_back(p);
  }
  if (lx.size() < 3) throw NumericalFailure("dynamic_exponent: fewer than 3 usable path points");
  RMat A(lx.size(), 2);
  RVec y(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = lx[i];
    y(i) = lg[i];
  }
  const RVec c = A.colPivHouseholderQr().solve(y);
  out.z = -c(1);
  return out;
}

// Per-site QPV energy: integral dk/(2pi)^D of (sum_n omega_n(k) - tr K(k)) / 2.
inline double qpv_energy_density(const QBHSpec& spec, const QuadratureSettings& qs = {}, const Tolerances& tol = {}) {
  const GridSpectrum gs = sample_grid(spec, BZGrid::default_for(spec.D()), tol);
  if (!gs.all_regular) throw InstabilityError("QPV energy requires a Krein-gapped, dynamically stable spec");
  BlochEvaluator ev(spec);
  const double scale = gs.scale;
  auto f = [&](const KVec& k, double* out) {
    const BlochPoint bp = ev(k);
    if (spec.d() == 1) {
      const PauliDecomposition p = pauli_decompose(bp);
      const double e2 = p.e2();
      if (!(e2 > 0.0)) return false;
      out[0] = 0.5 * ((p.d3 >= 0.0 ? 1.0 : -1.0) * std::sqrt(e2) - p.d3);
      return true;
    }
    const SpectralPoint sp = diagonalize(bp, scale, tol);
    if (!sp.regular()) return false;
    out[0] = 0.5 * (sp.particle_bands.sum() - bp.Kk.trace().real());
    return true;
  };
  const QuadResult q = trapezoid_bz(spec.D(), 1, f, qs);
  return q.value[0];
}

}  // namespace qbh
