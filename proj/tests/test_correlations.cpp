#include <catch_amalgamated.hpp>
#include <random>

#include <qbh/qbh.hpp>

using namespace qbh;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// plain trapezoid over the BZ; spectrally accurate for gapped periodic integrands
template <class F>
double bz_mean(F f, int n = 4096) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += f(-pi + 2.0 * pi * j / n);
  return s / n;
}

}  // namespace

TEST_CASE("decoupled sites carry the vacuum CM", "[correlations]") {
  const RealSpaceCM cm = real_space_cm(build_model(HarmonicChain{1.7, 0.0}), 3);
  CHECK((cm.at({0}) - RMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(cm.at({2}).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("momentum CM is Hermitian, positive and has unit determinant", "[correlations][property]") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> U(-pi, pi);
  const std::vector<QBHSpec> specs{build_model(HarmonicChain{1.0, 0.4}), build_model(ImagHopChain{1.0, 0.2, 0.5}),
                                   build_model(Interpolation{1.0, 2.0, 0.9, 0.4}),
                                   build_model(DoubleChain{0.3, 0.8, 1.0, 2.5})};
  for (const auto& spec : specs) {
    for (int i = 0; i < 40; ++i) {
      const CMat g = qpv_cm_momentum(spec, {U(rng)}).gamma;
      CHECK((g - g.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
      CHECK(Eigen::SelfAdjointEigenSolver<CMat>(g).eigenvalues().minCoeff() > 0.0);
      CHECK_THAT(g.determinant().real(), WithinAbs(1.0, 1e-10));
    }
  }
}

TEST_CASE("projector construction reproduces the modal CM", "[correlations]") {
  const QBHSpec spec = build_model(DoubleChain{0.2, 0.5, 1.0, 3.0});
  for (double k : {0.2, 1.1, 3.0}) {
    const SpectralPoint sp = diagonalize(eval_bloch(spec, {k}));
    const KreinProjector kp = krein_projector(sp);
    CHECK((kp.P * kp.P - kp.P).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((cm_from_projector(kp) - qpv_cm_momentum(spec, {k}).c_bosonic).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(resolution_residual(sp) < 1e-12);
  }
}

TEST_CASE("gapped harmonic chain matches a direct Fourier sum", "[correlations]") {
  const double Om = 1.0, J = 0.35;
  const RealSpaceCM cm = real_space_cm(build_model(HarmonicChain{Om, J}), 8);
  for (int r = 0; r <= 8; ++r) {
    const double xx = bz_mean([&](double k) { return std::sqrt(Om / (Om - 2.0 * J * std::cos(k))) * std::cos(k * r); });
    const double pp = bz_mean([&](double k) { return std::sqrt((Om - 2.0 * J * std::cos(k)) / Om) * std::cos(k * r); });
    CHECK_THAT(cm.value({r}, Block::xx, 0, 0), WithinAbs(xx, 1e-11));
    CHECK_THAT(cm.value({r}, Block::pp, 0, 0), WithinAbs(pp, 1e-11));
    CHECK(std::abs(cm.value({r}, Block::xp, 0, 0)) < 1e-12);
  }
}

TEST_CASE("critical harmonic chain: finite momentum block, divergent position block", "[correlations]") {
  QuadratureSettings qs;
  qs.allow_gapless = true;
  const RealSpaceCM cm = real_space_cm(build_model(HarmonicChain{1.0, 0.5}), 10, qs);
  for (int r = 0; r <= 10; ++r) {
    const double want = 2.0 * std::sqrt(2.0) / (pi * (1.0 - 4.0 * r * r));
    CHECK_THAT(cm.value({r}, Block::pp, 0, 0), WithinAbs(want, 1e-9));
    CHECK(std::isinf(cm.value({r}, Block::xx, 0, 0)));
  }
  CHECK_THROWS_AS(real_space_cm(build_model(HarmonicChain{1.0, 0.5}), 2), SingularPointError);
}

TEST_CASE("dynamically unstable specs are refused", "[correlations]") {
  CHECK_THROWS_AS(real_space_cm(build_model(Interpolation{1.0, 1.0, 3.0, 0.5}), 2), InstabilityError);
}

TEST_CASE("tightening the quadrature tolerance does not move converged values", "[correlations]") {
  const QBHSpec spec = build_model(Interpolation{1.0, 2.0, 0.8, 0.45});
  QuadratureSettings loose, tight;
  loose.tol = 1e-9;
  tight.tol = 1e-13;
  const RealSpaceCM a = real_space_cm(spec, 6, loose), b = real_space_cm(spec, 6, tight);
  for (std::size_t s = 0; s < a.separations.size(); ++s)
    CHECK((a.blocks[s] - b.blocks[s]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-operator stencil is half the CM entry", "[correlations]") {
  const QBHSpec spec = build_model(ImagHopChain{1.0, 0.3, 0.4});
  const RealSpaceCM cm = real_space_cm(spec, 4);
  std::vector<Offset> rs{{0}, {1}, {3}};
  const auto sx = stencil_correlator(spec, parse_stencil("x@0"), rs);
  const auto sp = stencil_correlator(spec, parse_stencil("2*p@0"), rs);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK_THAT(sx.values[i], WithinAbs(0.5 * cm.value(rs[i], Block::xx, 0, 0), 1e-11));
    CHECK_THAT(sp.values[i], WithinAbs(2.0 * cm.value(rs[i], Block::pp, 0, 0), 1e-11));
  }
}

TEST_CASE("stencil grammar", "[correlations]") {
  const Stencil st = parse_stencil("0.5*x[0]@1 - p@0");
  REQUIRE(st.terms.size() == 2);
  CHECK(st.terms[0].coeff == 0.5);
  CHECK(!st.terms[0].momentum);
  CHECK(st.terms[0].offset == Offset{1});
  CHECK(st.terms[1].coeff == -1.0);
  CHECK(st.terms[1].momentum);
  CHECK_THROWS_AS(parse_stencil("y@0"), ConfigError);
  CHECK_THROWS_AS(parse_stencil("x@"), ConfigError);
  CHECK_THROWS_AS(parse_stencil(""), ConfigError);
}

TEST_CASE("fitted correlation length follows 1/acosh(1/alpha)", "[correlations]") {
  for (double a : {0.3, 0.6, 0.9}) {
    const RealSpaceCM cm = real_space_cm(build_model(HarmonicChain{1.0, 0.5 * a}), 45);
    FitOptions fo;
    fo.power_law = true;
    CHECK_THAT(correlation_length(cm, Block::xx, fo).xi, WithinRel(1.0 / std::acosh(1.0 / a), 5e-3));
  }
}

TEST_CASE("ground-state energy density", "[correlations]") {
  const double Om = 1.2, J = 0.4;
  const double omega_mean = bz_mean([&](double k) { return std::sqrt(Om * (Om - 2.0 * J * std::cos(k))); });
  CHECK_THAT(qpv_energy_density(build_model(HarmonicChain{Om, J})), WithinAbs(0.5 * (omega_mean - Om), 1e-11));
  CHECK_THAT(qpv_energy_density(build_model(HarmonicChain{Om, 0.0})), WithinAbs(0.0, 1e-14));
}
