#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <functional>
#include <queue>
#include <string>

#include "types.hpp"

namespace qbh {

struct QuadratureSettings {
  double tol = 1e-10;            // absolute, per entry
  int n_init = 64;               // points per axis on the first trapezoid level
  int n_max_1d = 1 << 20;        // trapezoid cap for D = 1
  int n_max_axis = 1 << 10;      // per-axis cap for D > 1
  double near_critical_gap = 0.01;
  bool allow_gapless = false;    // integrate through EP/KC momenta (D = 1 only)
  int gk_max_panels = 4000;
};

struct QuadResult {
  std::vector<double> value;
  std::vector<double> error;
  std::vector<bool> converged;
  std::size_t points = 0;
  std::string method;
};

// Mean over the BZ of m real integrands, f(k, out) fills out[0..m). Periodic trapezoid
// on k_j = 2 pi j / N with N doubled until successive levels agree to tol.
inline QuadResult trapezoid_bz(int D, std::size_t m, const std::function<bool(const KVec&, double*)>& f,
                               const QuadratureSettings& qs) {
  const int cap = D == 1 ? qs.n_max_1d : qs.n_max_axis;
  std::vector<double> sum(m, 0.0), prev(m, 0.0), buf(m);
  QuadResult res;
  res.method = "trapezoid";
  int N = std::max(2, qs.n_init);
  int level = 0;
  auto visit = [&](int n, bool only_new) {
    std::size_t total = 1;
    for (int a = 0; a < D; ++a) total *= static_cast<std::size_t>(n);
    std::vector<int> j(D, 0);
    KVec k(D);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rem = t;
      bool has_odd = false;
      for (int a = D - 1; a >= 0; --a) {
        j[a] = static_cast<int>(rem % n);
        rem /= n;
        has_odd = has_odd || (j[a] % 2 == 1);
        k[a] = 2.0 * pi * j[a] / n;
      }
      if (only_new && !has_odd) continue;
      if (!f(k, buf.data())) throw NumericalFailure("singular integrand at k = " + format_k(k));
      for (std::size_t c = 0; c < m; ++c) sum[c] += buf[c];
      ++res.points;
    }
  };
  visit(N, false);
  res.value.assign(m, 0.0);
  res.error.assign(m, std::numeric_limits<double>::infinity());
  auto norm = [&](int n) {
    double v = 1.0;
    for (int a = 0; a < D; ++a) v *= n;
    return v;
  };
  for (std::size_t c = 0; c < m; ++c) res.value[c] = sum[c] / norm(N);
  while (true) {
    if (N * 2 > cap) break;
    prev = res.value;
    N *= 2;
    visit(N, true);
    ++level;
    double worst = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      res.value[c] = sum[c] / norm(N);
      res.error[c] = std::abs(res.value[c] - prev[c]);
      worst = std::max(worst, res.error[c]);
    }
    if (worst < qs.tol) break;
  }
  res.converged.resize(m);
  for (std::size_t c = 0; c < m; ++c) res.converged[c] = res.error[c] < qs.tol;
  return res;
}

namespace detail {

struct GKPanel {
  double a, b;
  std::vector<double> value, error;
  double worst;
  int failed = 0;  // nodes where the integrand was undefined
};

// Panels with undefined nodes are not bisected below this width; near a gap closing the
// integrand is lost to cancellation within ~sqrt(eps) of the singular momentum anyway.
inline constexpr double gk_singular_width = 1e-6;

// One 61-point Kronrod panel with its embedded 30-point Gauss estimate, all components at once.
inline GKPanel gk_panel(std::size_t m, const std::function<bool(double, double*)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  using G = boost::math::quadrature::gauss<double, 30>;
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  GKPanel p{a, b, std::vector<double>(m, 0.0), std::vector<double>(m, 0.0), 0.0, 0};
  std::vector<double> gauss(m, 0.0), l1(m, 0.0), peak(m, 0.0), fp(m), fm(m);
  int failed = 0;
  auto eval = [&](double t, std::vector<double>& out) {
    if (!f(t, out.data())) {
      ++failed;
      std::fill(out.begin(), out.end(), 0.0);
    }
    for (std::size_t k = 0; k < m; ++k) peak[k] = std::max(peak[k], std::abs(out[k]));
  };
  eval(c, fp);
  for (std::size_t k = 0; k < m; ++k) {
    p.value[k] = wk[0] * fp[k];
    l1[k] = wk[0] * std::abs(fp[k]);
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    eval(c + h * x[i], fp);
    eval(c - h * x[i], fm);
    for (std::size_t k = 0; k < m; ++k) {
      const double s = fp[k] + fm[k];
      p.value[k] += wk[i] * s;
      l1[k] += wk[i] * (std::abs(fp[k]) + std::abs(fm[k]));
      if (i % 2 == 1) gauss[k] += wg[i / 2] * s;
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    p.value[k] *= h;
    double e = std::max(std::abs(p.value[k] - h * gauss[k]), 50.0 * eps * h * l1[k]);
    // a singular node was dropped: bound what it could have contributed per component
    if (failed > 0) e = std::max(e, 2.0 * h * peak[k]);
    const bool usable = failed < static_cast<int>(x.size()) * 2 - 1;
    p.error[k] = usable && std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
    p.worst = std::max(p.worst, p.error[k]);
  }
  p.failed = failed;
  return p;
}

}  // namespace detail

// (1/2pi) * integral over [-pi, pi] of m integrands by globally adaptive Gauss-Kronrod:
// the panel with the largest error is bisected until every component's summed error is
// below tol or the panel budget is spent. f(k, out) returns false at a singular node.
inline QuadResult gk_integrate(std::size_t m, const std::function<bool(double, double*)>& f,
                               const std::vector<double>& breaks, const QuadratureSettings& qs) {
  auto cmp = [](const detail::GKPanel& x, const detail::GKPanel& y) { return x.worst < y.worst; };
  std::priority_queue<detail::GKPanel, std::vector<detail::GKPanel>, decltype(cmp)> heap(cmp);
  std::vector<double> err(m, 0.0), total(m, 0.0);
  int singular = 0;  // panels with a non-finite error; excluded from the running sums
  QuadResult res;
  res.method = "gauss-kronrod";
  auto push = [&](detail::GKPanel p) {
    if (std::isfinite(p.worst)) {
      for (std::size_t k = 0; k < m; ++k) err[k] += p.error[k];
    } else {
      ++singular;
    }
    heap.push(std::move(p));
  };
  const double tol = 2.0 * pi * qs.tol;
  auto done = [&] {
    if (singular > 0) return false;
    for (std::size_t k = 0; k < m; ++k)
      if (!(err[k] < tol)) return false;
    return true;
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) push(detail::gk_panel(m, f, breaks[i], breaks[i + 1]));
  int panels = static_cast<int>(heap.size());
  std::vector<detail::GKPanel> frozen;
  while (!heap.empty() && !done() && panels < qs.gk_max_panels) {
    detail::GKPanel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) break;
    heap.pop();
    if (p.failed > 0 && std::isfinite(p.worst) && p.b - p.a < detail::gk_singular_width) {
      frozen.push_back(std::move(p));  // keeps its error bound in err
      continue;
    }
    if (std::isfinite(p.worst)) {
      for (std::size_t k = 0; k < m; ++k) err[k] -= p.error[k];
    } else {
      --singular;
    }
    push(detail::gk_panel(m, f, p.a, mid));
    push(detail::gk_panel(m, f, mid, p.b));
    ++panels;
  }
  std::fill(err.begin(), err.end(), 0.0);
  for (auto& p : frozen) heap.push(std::move(p));
  while (!heap.empty()) {
    for (std::size_t k = 0; k < m; ++k) {
      total[k] += heap.top().value[k];
      err[k] += heap.top().error[k];
    }
    heap.pop();
  }
  res.points = static_cast<std::size_t>(panels + 1) * 61;
  res.value.resize(m);
  res.error.resize(m);
  res.converged.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    res.value[k] = total[k] / (2.0 * pi);
    res.error[k] = err[k] / (2.0 * pi);
    res.converged[k] = res.error[k] < qs.tol;
  }
  return res;
}

inline std::vector<double> make_breakpoints(std::vector<double> extra) {
  std::vector<double> b{-pi, pi};
  for (double k : extra) {
    const double w = wrap_k(k);
    if (w > -pi && w < pi) b.push_back(w);
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end(), [](double x, double y) { return std::abs(x - y) < 1e-14; }), b.end());
  return b;
}

}  // namespace qbh
