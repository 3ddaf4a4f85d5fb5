#include <catch_amalgamated.hpp>
#include <random>

#include <qbh/qbh.hpp>

using namespace qbh;
using Catch::Matchers::WithinAbs;

namespace {

// two-mode squeezed vacuum, ordering [x1, x2, p1, p2]
FiniteCM tmsv(double r) {
  const double c = std::cosh(2.0 * r), s = std::sinh(2.0 * r);
  FiniteCM cm{2, 1, RMat::Zero(4, 4)};
  cm.gamma << c, s, 0, 0, s, c, 0, 0, 0, 0, c, -s, 0, 0, -s, c;
  return cm;
}

}  // namespace

TEST_CASE("symplectic spectrum of simple states", "[gaussian]") {
  RMat thermal = 3.0 * RMat::Identity(2, 2);
  CHECK_THAT(symplectic_eigs(thermal)[0], WithinAbs(3.0, 1e-13));
  RMat squeezed(2, 2);
  squeezed << std::exp(1.4), 0.0, 0.0, std::exp(-1.4);
  CHECK_THAT(symplectic_eigs(squeezed)[0], WithinAbs(1.0, 1e-13));
  CHECK_THAT(entropy_of(3.0), WithinAbs(2.0 * std::log(2.0), 1e-14));
  CHECK(entropy_of(1.0) == 0.0);
  CHECK_THROWS_AS(entropy_of(0.5), ConfigError);
}

TEST_CASE("two-mode squeezed vacuum", "[gaussian]") {
  for (double r : {0.1, 0.5, 1.3}) {
    const FiniteCM cm = tmsv(r);
    CHECK(purity_residual(cm.gamma) < 1e-11);
    const double c2 = std::cosh(r) * std::cosh(r), s2 = std::sinh(r) * std::sinh(r);
    const EntanglementResult e = entanglement(cm, {0, 1});
    CHECK_THAT(e.entropy, WithinAbs(c2 * std::log(c2) - s2 * std::log(s2), 1e-11));
    CHECK_THAT(e.log_negativity, WithinAbs(2.0 * r, 1e-11));
  }
}

TEST_CASE("fidelity between squeezed vacua", "[gaussian]") {
  for (double r : {0.2, 0.9}) {
    RMat a(2, 2), b = RMat::Identity(2, 2);
    a << std::exp(2.0 * r), 0.0, 0.0, std::exp(-2.0 * r);
    CHECK_THAT(fidelity(a, b), WithinAbs(1.0 / std::sqrt(std::cosh(r)), 1e-13));
    CHECK_THAT(fidelity(a, a), WithinAbs(1.0, 1e-13));
  }
  CHECK_THROWS_AS(fidelity(2.0 * RMat::Identity(2, 2), RMat::Identity(2, 2)), ConfigError);
}

TEST_CASE("ring ground states are pure and satisfy the uncertainty principle", "[gaussian][property]") {
  const std::vector<QBHSpec> specs{build_model(HarmonicChain{1.0, 0.45}), build_model(ImagHopChain{1.0, 0.3, 0.6}),
                                   build_model(Interpolation{1.0, 2.0, 0.7, 0.5}),
                                   build_model(DoubleChain{0.1, 0.4, 1.0, 2.0})};
  for (const auto& spec : specs) {
    for (int N : {6, 17, 40}) {
      const FiniteCM cm = finite_cm(spec, N);
      CHECK(purity_residual(cm.gamma) < 1e-9);
      CHECK(uncertainty_min(cm.gamma) > -1e-10);
    }
  }
}

TEST_CASE("pure-state entanglement is symmetric and bounded by the negativity", "[gaussian][property]") {
  const FiniteCM cm = finite_cm(build_model(Interpolation{1.0, 2.0, 0.9, 0.45}), 24);
  for (int len : {1, 5, 12}) {
    const double s = entanglement_entropy(cm, {3, len});
    CHECK_THAT(entanglement_entropy(cm, {3 + len, 24 - len}), WithinAbs(s, 1e-9));
    CHECK(log_negativity(cm, {3, len}) >= s - 1e-10);
  }
}

TEST_CASE("local symplectic maps leave the entropy unchanged", "[gaussian][property]") {
  const FiniteCM cm = finite_cm(build_model(HarmonicChain{1.0, 0.4}), 16);
  const SiteRange B{2, 6};
  std::mt19937 rng(4);
  std::normal_distribution<double> N(0.0, 0.5);
  // squeeze-and-shear on each mode of B: x -> a x, p -> (p + c x) / a
  RMat S = RMat::Identity(32, 32);
  for (int j = B.start; j < B.start + B.length; ++j) {
    const double a = std::exp(N(rng)), c = N(rng);
    S(j, j) = a;
    S(16 + j, 16 + j) = 1.0 / a;
    S(16 + j, j) = c / a;
  }
  REQUIRE((S * sigma_form(16) * S.transpose() - sigma_form(16)).cwiseAbs().maxCoeff() < 1e-13);
  FiniteCM moved = cm;
  moved.gamma = S * cm.gamma * S.transpose();
  CHECK_THAT(entanglement_entropy(moved, B), WithinAbs(entanglement_entropy(cm, B), 1e-10));
}

TEST_CASE("decoupled ring has no entanglement", "[gaussian]") {
  const FiniteCM cm = finite_cm(build_model(HarmonicChain{1.0, 0.0}), 10);
  const EntanglementResult e = entanglement(cm, bisection(10));
  CHECK(e.entropy == 0.0);
  CHECK_THAT(e.log_negativity, WithinAbs(0.0, 1e-12));
}

TEST_CASE("finite CM argument checks", "[gaussian]") {
  const QBHSpec spec = build_model(HarmonicChain{1.0, 0.2});
  CHECK_THROWS_AS(finite_cm(spec, 3), ConfigError);
  const FiniteCM cm = finite_cm(spec, 8);
  CHECK_THROWS_AS(entanglement(cm, {0, 0}), ConfigError);
  CHECK_THROWS_AS(entanglement(cm, {0, 8}), ConfigError);
  CHECK_THROWS_AS(finite_cm(build_model(HarmonicChain{1.0, 0.5}), 8), SingularPointError);
}
