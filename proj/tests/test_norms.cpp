#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "ncb/error.hpp"
#include "ncb/norms.hpp"

using namespace ncb;

TEST_CASE("weighted L2") {
  const VelocityGrid g(2, 8.0, 48);
  CHECK(l2_weighted(ScalarField(g), 0.0) == 0.0);
  CHECK(l2_weighted(ncbt::root_mu(g), 0.0) == doctest::Approx(1.0).epsilon(1e-4));
  // int <v>^2 mu = 1 + n
  CHECK(l2_weighted(ncbt::root_mu(g), 2.0) == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("anisotropic norm") {
  const VelocityGrid g(2, 6.0, 32);
  const auto cfg = NormConfig::from(ncbt::hard());
  const ScalarField c(g, 0.7);
  const auto pc = nsg_parts(c, cfg);
  CHECK(pc.semi_part == 0.0);
  CHECK(pc.total == doctest::Approx(pc.l2_part));

  const auto f = ncbt::bump(g, 0.4, -0.2, 0.8, 0.3);
  const double nf = nsg_norm(f, cfg);
  CHECK(nsg_norm(-3.0 * f, cfg) == doctest::Approx(3.0 * nf).epsilon(1e-13));

  const double coarse = nsg_norm(ncbt::root_mu(VelocityGrid(2, 8.0, 48)), cfg);
  const double fine = nsg_norm(ncbt::root_mu(VelocityGrid(2, 8.0, 64)), cfg);
  CHECK(std::isfinite(coarse));
  CHECK(fine == doctest::Approx(coarse).epsilon(0.05));

  auto bad = cfg;
  bad.cone_eps = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("isotropic Sobolev norm") {
  const VelocityGrid g(2, 6.0, 32);
  const ScalarField c(g, 1.3);
  CHECK(isotropic_hs(c, 0.25, 0.0) == doctest::Approx(std::sqrt(l2_weighted(c, 0.0))).epsilon(1e-12));

  // near the origin d ~ |v - v'|, so a small translation barely moves the norm
  const double a = isotropic_hs(ncbt::bump(g, 0.0, 0.0, 0.7), 0.25, 0.0);
  const double b = isotropic_hs(ncbt::bump(g, 0.3, 0.0, 0.7), 0.25, 0.0);
  CHECK(b == doctest::Approx(a).epsilon(0.10));
  const auto cfg = NormConfig::from(ncbt::hard());
  for (double r : {0.0, 1.0, 2.0}) {
    const auto f = ncbt::bump(g, r, 0.0, 0.7);
    const double ratio = nsg_norm(f, cfg) / isotropic_hs(f, 0.25, 0.0);
    CHECK(std::isfinite(ratio));
    CHECK(ratio > 0.0);
  }
}

TEST_CASE("cone semi-norm annihilates constants") {
  const VelocityGrid g(2, 6.0, 32);
  CHECK(cone_seminorm_N0(ScalarField(g, 2.0), NormConfig::from(ncbt::hard())) == 0.0);
  CHECK(cone_seminorm_N0(ncbt::bump(g, 0.0, 0.0, 0.8), NormConfig::from(ncbt::hard())) > 0.0);
}

TEST_CASE("sandwich ratios") {
  const VelocityGrid g(2, 8.0, 48);
  std::vector<std::pair<std::string, ScalarField>> suite{{"zero", ScalarField(g)},
                                                         {"centered", ncbt::bump(g, 0.0, 0.0, 0.6)}};
  const auto rows = sandwich_ratios(suite, ncbt::hard());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].skipped);
  CHECK_FALSE(rows[1].skipped);
  CHECK(rows[1].lower_ratio > 0.1);
  CHECK(rows[1].lower_ratio < 10.0);
  CHECK(rows[1].upper_ratio > 0.1);
  CHECK(rows[1].upper_ratio < 10.0);
}
