#include <catch_amalgamated.hpp>
#include <random>

#include <qbh/qbh.hpp>

using namespace qbh;
using Catch::Matchers::WithinAbs;

namespace {

QBHSpec random_spec(std::mt19937& rng, int D, int d, int R) {
  std::normal_distribution<double> N(0.0, 1.0);
  auto rnd = [&] {
    CMat M(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) M(i, j) = cplx(N(rng), N(rng));
    return M;
  };
  QBHSpec s(D, d, R);
  CMat K0 = rnd();
  s.set_hopping(Offset(D, 0), K0 + K0.adjoint());
  CMat P0 = rnd();
  s.set_pairing(Offset(D, 0), P0 + P0.transpose());
  Offset r(D, 0);
  r[0] = 1;
  s.set_hopping(r, rnd());
  s.set_pairing(r, rnd());
  return s;
}

}  // namespace

TEST_CASE("spec json round trip is exact", "[model]") {
  std::mt19937 rng(7);
  for (int t = 0; t < 20; ++t) {
    const QBHSpec s = random_spec(rng, 1 + t % 2, 1 + t % 3, 1);
    const QBHSpec back = spec_from_json(spec_to_json(s));
    REQUIRE(back.D() == s.D());
    REQUIRE(back.d() == s.d());
    for (const auto& r : s.offsets()) {
      CHECK((back.hopping(r) - s.hopping(r)).cwiseAbs().maxCoeff() == 0.0);
      CHECK((back.pairing(r) - s.pairing(r)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("stored couplings satisfy the hermiticity relations", "[model][property]") {
  std::mt19937 rng(11);
  for (int t = 0; t < 20; ++t) CHECK(hermiticity_residual(random_spec(rng, 1, 2, 1)) < 1e-14);
}

TEST_CASE("quadrature form round trip", "[model]") {
  std::mt19937 rng(3);
  for (int t = 0; t < 10; ++t) {
    const QBHSpec s = random_spec(rng, 1, 2, 1);
    const QBHSpec back = from_quadrature(to_quadrature(s));
    for (const auto& r : s.offsets()) {
      CHECK((back.hopping(r) - s.hopping(r)).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((back.pairing(r) - s.pairing(r)).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("offsets outside the range are rejected", "[model]") {
  QBHSpec s(1, 1, 1);
  CHECK_THROWS_AS(s.set_hopping({2}, CMat::Identity(1, 1)), ConfigError);
  CHECK_THROWS_AS(s.set_hopping({0, 0}, CMat::Identity(1, 1)), ConfigError);
  CHECK_THROWS_AS(s.set_pairing({0}, CMat::Identity(2, 2)), ConfigError);
  CHECK_THROWS_AS(QBHSpec(0, 1, 1), ConfigError);
}

TEST_CASE("built-in models reproduce their Bloch dispersions", "[model]") {
  const double Om = 1.3, J = 0.4;
  const QBHSpec h = build_model(HarmonicChain{Om, J});
  for (double k : {0.0, 0.7, 2.1, pi}) {
    const BlochPoint bp = eval_bloch(h, {k});
    CHECK_THAT(bp.Kk(0, 0).real(), WithinAbs(Om - J * std::cos(k), 1e-14));
    CHECK_THAT(bp.Dk(0, 0).real(), WithinAbs(-J * std::cos(k), 1e-14));
    const SpectralPoint sp = diagonalize(bp);
    CHECK_THAT(sp.particle_bands(0), WithinAbs(std::sqrt(Om * (Om - 2.0 * J * std::cos(k))), 1e-12));
  }
}

TEST_CASE("model parameter access and validation", "[model]") {
  ModelParams p = default_params("interpolation");
  CHECK(param_names(p) == std::vector<std::string>{"Omega", "J", "Delta", "s"});
  set_param(p, "s", 0.25);
  CHECK(get_param(p, "s") == 0.25);
  CHECK_THROWS_AS(get_param(p, "gamma"), ConfigError);
  set_param(p, "s", 1.5);
  CHECK_THROWS_AS(build_model(p), ConfigError);
  CHECK_THROWS_AS(build_model(HarmonicChain{1.0, 0.6}), ConfigError);
  CHECK_THROWS_AS(build_model(DoubleChain{-1.0, 1.0, 1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(default_params("kitaev"), ConfigError);
  CHECK(model_name(DoubleChain{}) == "double");
}
