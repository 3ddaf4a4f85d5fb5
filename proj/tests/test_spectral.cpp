#include <catch_amalgamated.hpp>
#include <random>

#include <qbh/qbh.hpp>

using namespace qbh;
using Catch::Matchers::WithinAbs;

TEST_CASE("dynamical matrix is pseudo-Hermitian and charge-conjugation symmetric", "[spectral][property]") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-pi, pi);
  const QBHSpec s = build_model(DoubleChain{0.3, 0.7, 1.2, 0.8});
  const QBHSpec t = build_model(Interpolation{1.0, 2.0, 0.7, 0.4});
  for (int i = 0; i < 50; ++i) {
    const double k = U(rng);
    for (const QBHSpec* spec : {&s, &t}) {
      const BlochPoint a = eval_bloch(*spec, {k}), b = eval_bloch(*spec, {-k});
      CHECK(pseudo_hermiticity_residual(a) < 1e-13);
      CHECK(charge_conjugation_residual(a, b) < 1e-13);
      CHECK((pauli_reconstruct(pauli_decompose(a)) - a.g).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("closed form and dense diagonalization agree on regular points", "[spectral][property]") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(-pi, pi);
  const QBHSpec spec = build_model(ImagHopChain{1.0, 0.3, 0.2});
  for (int i = 0; i < 100; ++i) {
    const BlochPoint bp = eval_bloch(spec, {U(rng)});
    const SpectralPoint cf = diagonalize(bp), de = diagonalize_dense(bp);
    REQUIRE(cf.regular());
    REQUIRE(de.regular());
    CHECK_THAT(cf.particle_bands(0), WithinAbs(de.particle_bands(0), 1e-12));
    CHECK_THAT(cf.kpr(0), WithinAbs(de.kpr(0), 1e-10));
  }
}

TEST_CASE("modal matrix is tau3-orthonormal at regular points", "[spectral][property]") {
  const QBHSpec spec = build_model(DoubleChain{0.4, 0.9, 1.0, 2.0});
  for (double k : {0.1, 1.0, 2.5}) {
    const SpectralPoint sp = diagonalize(eval_bloch(spec, {k}));
    REQUIRE(sp.regular());
    CHECK((tau3_gram(sp) - tau3(sp.d)).cwiseAbs().maxCoeff() < 1e-10);
    for (int n = 0; n < sp.d; ++n) CHECK(sp.signatures[n] == 1);
  }
}

TEST_CASE("point classification", "[spectral]") {
  // harmonic chain at the stability boundary: defective zero mode at k = 0
  CHECK(diagonalize(eval_bloch(build_model(HarmonicChain{1.0, 0.5}), {0.0})).classification == PointClass::EP);
  // one massless quadrature is defective; with both massless g(0) = 0 keeps a full eigenbasis
  CHECK(diagonalize(eval_bloch(build_model(DoubleChain{0.0, 1.0, 1.0, 1.0}), {0.0})).classification ==
        PointClass::EP);
  CHECK(diagonalize(eval_bloch(build_model(DoubleChain{0.0, 0.0, 1.0, 2.0}), {0.0})).classification ==
        PointClass::KC);
  // interpolation model with alpha > 1: complex pair
  CHECK(diagonalize(eval_bloch(build_model(Interpolation{1.0, 1.0, 3.0, 0.5}), {0.0})).classification ==
        PointClass::ComplexUnstable);
  CHECK(diagonalize(eval_bloch(build_model(HarmonicChain{1.0, 0.3}), {0.0})).regular());
}

TEST_CASE("Krein phase rigidity is one away from singular points and vanishes toward an EP", "[spectral]") {
  const SpectralPoint far = diagonalize(eval_bloch(build_model(HarmonicChain{1.0, 0.1}), {0.3}));
  CHECK(kpr(far)(0) > 0.5);
  double prev = 1.0;
  for (double J : {0.4, 0.49, 0.499, 0.4999}) {
    const double r = kpr(diagonalize(eval_bloch(build_model(HarmonicChain{1.0, J}), {0.0})))(0);
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("stability verdicts of the built-in chains", "[spectral][stability]") {
  const auto ok = stability_report(build_model(HarmonicChain{1.0, 0.3}));
  CHECK(ok.dynamically_stable);
  CHECK(!ok.boundary);
  CHECK(ok.thermo == Thermo::BoundedBelow);

  const auto edge = stability_report(build_model(HarmonicChain{1.0, 0.5}));
  CHECK(!edge.dynamically_stable);
  CHECK(edge.boundary);

  const auto unstable = stability_report(build_model(Interpolation{1.0, 1.0, 3.0, 0.5}));
  CHECK(!unstable.dynamically_stable);
  CHECK(!unstable.boundary);

  // the imaginary hop tilts the spectrum; past the threshold the Hamiltonian is no longer bounded below
  const double a = 0.6, gplus = std::sqrt(0.5 * (1.0 + std::sqrt(1.0 - a * a)));
  CHECK(stability_report(build_model(ImagHopChain{1.0, 0.3, gplus - 1e-3})).thermo == Thermo::BoundedBelow);
  const auto tilted = stability_report(build_model(ImagHopChain{1.0, 0.3, gplus + 1e-3}));
  CHECK(tilted.dynamically_stable);
  CHECK(tilted.thermo == Thermo::Unbounded);
}

TEST_CASE("Krein gap matches the closed forms", "[spectral][stability]") {
  for (double a : {0.0, 0.3, 0.8}) {
    CHECK_THAT(krein_gap(build_model(HarmonicChain{1.0, 0.5 * a}), BZGrid::default_for(1)).direct,
               WithinAbs(2.0 * std::sqrt(1.0 - a), 1e-10));
  }
  CHECK_THAT(krein_gap(build_model(DoubleChain{0.25, 0.64, 1.0, 3.0}), BZGrid::default_for(1)).direct,
             WithinAbs(4.0 * 0.4, 1e-10));
}

TEST_CASE("grid parameters are validated", "[spectral]") {
  CHECK_THROWS_AS(BZGrid(1, 0), ConfigError);
  CHECK(BZGrid::default_for(1).n(0) == 1025);
  CHECK(BZGrid::default_for(2).size() == 129u * 129u);
}
