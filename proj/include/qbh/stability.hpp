#pragma once

#include "grid.hpp"
#include "spectral.hpp"

namespace qbh {

enum class Thermo { BoundedBelow, BoundedAbove, Unbounded };

inline const char* to_string(Thermo t) {
  switch (t) {
    case Thermo::BoundedBelow: return "BoundedBelow";
    case Thermo::BoundedAbove: return "BoundedAbove";
    case Thermo::Unbounded: return "Unbounded";
  }
  return "?";
}

struct GridSpectrum {
  BZGrid grid;
  std::vector<BlochPoint> bloch;
  std::vector<SpectralPoint> points;
  double scale = 1.0;
  bool all_regular = true;
};

inline GridSpectrum sample_grid(const QBHSpec& spec, const BZGrid& grid, const Tolerances& tol = {}) {
  if (grid.D() != spec.D()) throw ConfigError("grid dimension does not match spec dimension");
  GridSpectrum gs{grid, {}, {}, 0.0, true};
  BlochEvaluator ev(spec);
  gs.bloch.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    gs.bloch.push_back(ev(grid.point(i)));
    gs.scale = std::max(gs.scale, inf_norm(gs.bloch.back().g));
  }
  if (gs.scale == 0.0) gs.scale = 1.0;
  gs.points.reserve(grid.size());
  for (const auto& bp : gs.bloch) {
    gs.points.push_back(diagonalize(bp, gs.scale, tol));
    if (!gs.points.back().regular()) gs.all_regular = false;
  }
  return gs;
}

// Minimizer of f on [a, b] by golden-section search.
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, int iterations = 60) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

struct GapResult {
  double direct = 0.0;
  double indirect = 0.0;
  KVec argmin_k;
  bool closed_on_grid = false;  // some grid point is not Regular
};

namespace detail {

inline double direct_pair(const RVec& wk, const RVec& wmk) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index n = 0; n < wk.size(); ++n)
    for (Eigen::Index m = 0; m < wmk.size(); ++m) best = std::min(best, std::abs(wk(n) + wmk(m)));
  return best;
}

// Coordinate-wise golden-section refinement inside one grid cell around k0.
template <class F>
std::pair<KVec, double> refine(F&& f, KVec k0, double f0, const BZGrid& grid) {
  KVec best = k0;
  double fbest = f0;
  for (int a = 0; a < grid.D(); ++a) {
    const double h = grid.spacing(a);
    auto line = [&](double t) {
      KVec k = best;
      k[a] = t;
      return f(k);
    };
    auto [t, ft] = golden_min(line, best[a] - h, best[a] + h);
    if (ft < fbest) {
      fbest = ft;
      best[a] = wrap_k(t);
    }
  }
  return {best, fbest};
}

}  // namespace detail

inline GapResult krein_gap(const QBHSpec& spec, const GridSpectrum& gs, const Tolerances& tol = {}) {
  GapResult res;
  const auto& grid = gs.grid;
  if (grid.size() == 0) throw ConfigError("empty grid");
  if (!gs.all_regular) {
    res.closed_on_grid = true;
    for (const auto& p : gs.points) {
      if (!p.regular()) {
        res.argmin_k = p.k;
        break;
      }
    }
    return res;
  }

  std::size_t arg = 0;
  double direct = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = detail::direct_pair(gs.points[i].particle_bands, gs.points[grid.neg_index(i)].particle_bands);
    if (v < direct) {
      direct = v;
      arg = i;
    }
  }

  BlochEvaluator ev(spec);
  auto bands_at = [&](const KVec& k) -> std::optional<RVec> {
    SpectralPoint sp = diagonalize(ev(k), gs.scale, tol);
    if (!sp.regular()) return std::nullopt;
    return sp.particle_bands;
  };
  auto direct_at = [&](const KVec& k) {
    KVec mk = k;
    for (double& v : mk) v = -v;
    auto a = bands_at(k), b = bands_at(mk);
    if (!a || !b) return 0.0;
    return detail::direct_pair(*a, *b);
  };
  auto [kd, fd] = detail::refine(direct_at, grid.point(arg), direct, grid);
  res.direct = fd;
  res.argmin_k = kd;

  // indirect gap: min |a + b| over the sampled band values, via a sorted two-pointer merge
  struct Sample {
    double w;
    std::size_t idx;
    int band;
  };
  std::vector<Sample> S;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (int n = 0; n < gs.points[i].particle_bands.size(); ++n) S.push_back({gs.points[i].particle_bands(n), i, n});
  std::sort(S.begin(), S.end(), [](const Sample& a, const Sample& b) { return a.w < b.w; });
  std::size_t lo = 0, hi = S.size() - 1, bl = 0, bh = hi;
  double indirect = std::numeric_limits<double>::infinity();
  while (lo <= hi) {
    const double s = S[lo].w + S[hi].w;
    if (std::abs(s) < indirect) {
      indirect = std::abs(s);
      bl = lo;
      bh = hi;
    }
    if (s > 0) {
      if (hi == 0) break;
      --hi;
    } else {
      ++lo;
    }
  }
  KVec k1 = grid.point(S[bl].idx), k2 = grid.point(S[bh].idx);
  const int n1 = S[bl].band, n2 = S[bh].band;
  auto band = [&](const KVec& k, int n) {
    auto b = bands_at(k);
    return b ? std::optional<double>((*b)(n)) : std::nullopt;
  };
  for (int round = 0; round < 2; ++round) {
    auto b2 = band(k2, n2);
    if (!b2) break;
    auto f1 = [&](const KVec& k) {
      auto b = band(k, n1);
      return b ? std::abs(*b + *b2) : 0.0;
    };
    auto r1 = detail::refine(f1, k1, indirect, grid);
    k1 = r1.first;
    indirect = std::min(indirect, r1.second);
    auto b1 = band(k1, n1);
    if (!b1) break;
    auto f2 = [&](const KVec& k) {
      auto b = band(k, n2);
      return b ? std::abs(*b1 + *b) : 0.0;
    };
    auto r2 = detail::refine(f2, k2, indirect, grid);
    k2 = r2.first;
    indirect = std::min(indirect, r2.second);
  }
  res.indirect = std::min(indirect, res.direct);
  return res;
}

inline GapResult krein_gap(const QBHSpec& spec, const BZGrid& grid, const Tolerances& tol = {}) {
  return krein_gap(spec, sample_grid(spec, grid, tol), tol);
}

struct StabilityReport {
  bool dynamically_stable = false;
  bool boundary = false;  // no complex eigenvalues, but an EP or KC on the grid
  Thermo thermo = Thermo::Unbounded;
  double krein_gap_direct = 0.0;
  double krein_gap_indirect = 0.0;
  KVec gap_argmin_k;
  std::vector<std::pair<KVec, PointClass>> singular_momenta;
  double scale = 1.0;
  std::size_t grid_points = 0;
};

inline Thermo thermo_verdict(const GridSpectrum& gs) {
  const double t1 = 1e-12 * gs.scale, t2 = 1e-12 * gs.scale * gs.scale;
  bool below = true, above = true;
  for (std::size_t i = 0; i < gs.points.size(); ++i) {
    const auto& sp = gs.points[i];
    if (sp.pauli) {
      const auto& p = *sp.pauli;
      const bool e_ok = p.e2() - p.d0 * p.d0 >= -t2;
      below = below && e_ok && p.d3 >= -t1;
      above = above && e_ok && p.d3 <= t1;
    } else {
      Eigen::SelfAdjointEigenSolver<CMat> es(gs.bloch[i].h, Eigen::EigenvaluesOnly);
      below = below && es.eigenvalues().minCoeff() >= -t1;
      above = above && es.eigenvalues().maxCoeff() <= t1;
    }
  }
  if (below) return Thermo::BoundedBelow;
  if (above) return Thermo::BoundedAbove;
  return Thermo::Unbounded;
}

inline StabilityReport stability_report(const QBHSpec& spec, const GridSpectrum& gs, const Tolerances& tol = {}) {
  StabilityReport rep;
  rep.scale = gs.scale;
  rep.grid_points = gs.grid.size();
  bool complex = false, ep = false;
  for (const auto& sp : gs.points) {
    if (sp.regular()) continue;
    rep.singular_momenta.emplace_back(sp.k, sp.classification);
    complex = complex || sp.classification == PointClass::ComplexUnstable;
    ep = ep || sp.classification == PointClass::EP;
  }
  rep.dynamically_stable = !complex && !ep;
  rep.boundary = !complex && !rep.singular_momenta.empty();
  rep.thermo = thermo_verdict(gs);
  GapResult g = krein_gap(spec, gs, tol);
  rep.krein_gap_direct = g.direct;
  rep.krein_gap_indirect = g.indirect;
  rep.gap_argmin_k = g.argmin_k;
  return rep;
}

inline StabilityReport stability_report(const QBHSpec& spec, const BZGrid& grid, const Tolerances& tol = {}) {
  return stability_report(spec, sample_grid(spec, grid, tol), tol);
}

inline StabilityReport stability_report(const QBHSpec& spec, const Tolerances& tol = {}) {
  return stability_report(spec, BZGrid::default_for(spec.D()), tol);
}

}  // namespace qbh
