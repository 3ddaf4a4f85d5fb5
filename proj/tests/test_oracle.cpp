#include <catch_amalgamated.hpp>
#include <random>

#include <qbh/qbh.hpp>

using namespace qbh;

namespace {

QBHSpec random_two_band(std::mt19937& rng) {
  std::normal_distribution<double> N(0.0, 0.15);
  QBHSpec s(1, 2, 1);
  CMat K0(2, 2), D0(2, 2), K1(2, 2), D1(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      K0(i, j) = cplx(N(rng), N(rng));
      D0(i, j) = cplx(N(rng), N(rng));
      K1(i, j) = cplx(N(rng), N(rng));
      D1(i, j) = cplx(N(rng), N(rng));
    }
  // a large on-site term keeps the random couplings inside the stable region
  s.set_hopping({0}, 3.0 * CMat::Identity(2, 2) + K0 + K0.adjoint());
  s.set_pairing({0}, D0 + D0.transpose());
  s.set_hopping({1}, K1);
  s.set_pairing({1}, D1);
  return s;
}

}  // namespace

TEST_CASE("ring dynamical matrix is block-circulant and pseudo-Hermitian", "[oracle]") {
  const QBHSpec spec = build_model(ImagHopChain{1.0, 0.3, 0.25});
  const RingDynamical rd = build_ring(spec, 12);
  CHECK(ring_pseudo_hermiticity_residual(rd) < 1e-15);
  // Fourier transform of the first block row is the Bloch matrix
  for (int j = 0; j < 12; ++j) {
    const double k = 2.0 * pi * j / 12;
    CMat gk = CMat::Zero(2, 2);
    for (int l = 0; l < 12; ++l) gk += std::polar(1.0, k * l) * rd.G.block(0, 2 * l, 2, 2);
    CHECK((gk - eval_bloch(spec, {k}).g).cwiseAbs().maxCoeff() < 1e-13);
  }
  CHECK(ring_spectral_mismatch(spec, rd) < 1e-12);
}

TEST_CASE("ring oracle and Fourier route agree on random two-band chains", "[oracle][property]") {
  std::mt19937 rng(77);
  for (int t = 0; t < 5; ++t) {
    const QBHSpec spec = random_two_band(rng);
    REQUIRE(stability_report(spec).dynamically_stable);
    for (int N : {5, 12}) {
      const RingDynamical rd = build_ring(spec, N);
      const FiniteCM a = ring_qpv_cm(rd), b = finite_cm(spec, N);
      CHECK((a.gamma - b.gamma).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(purity_residual(a.gamma) < 1e-9);
    }
  }
}

TEST_CASE("ring oracle refuses singular and unstable rings", "[oracle]") {
  CHECK_THROWS_AS(ring_qpv_cm(build_ring(build_model(HarmonicChain{1.0, 0.5}), 8)), SingularPointError);
  CHECK_THROWS_AS(ring_qpv_cm(build_ring(build_model(DoubleChain{0.0, 0.0, 1.0, 2.0}), 8)), SingularPointError);
  CHECK_THROWS_AS(ring_qpv_cm(build_ring(build_model(Interpolation{1.0, 1.0, 3.0, 0.5}), 8)), InstabilityError);
  CHECK_THROWS_AS(build_ring(build_model(HarmonicChain{1.0, 0.2}), 2), ConfigError);
}

TEST_CASE("degenerate levels at different momenta are not mistaken for collisions", "[oracle]") {
  // flat band: every k carries the same frequency
  const QBHSpec spec = build_model(HarmonicChain{1.0, 0.0});
  const FiniteCM cm = ring_qpv_cm(build_ring(spec, 9));
  CHECK((cm.gamma - RMat::Identity(18, 18)).cwiseAbs().maxCoeff() < 1e-12);
}
