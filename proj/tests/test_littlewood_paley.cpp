#include <doctest.h>

#include <array>
#include <cmath>

#include "common.hpp"
#include "ncb/error.hpp"
#include "ncb/littlewood_paley.hpp"

using namespace ncb;

TEST_CASE("basis construction") {
  const auto b = build_basis(2, 0.0625, 2);
  const std::array<double, 2> zero{0.0, 0.0}, off{3.0, 0.0};
  CHECK(normalization_residual(b, zero) <= 1e-6);
  CHECK(normalization_residual(b, off) <= 1e-6);
  CHECK(normalization_residual(b, zero, true) <= 1e-6);
  for (const auto& v : {zero, off}) {
    const std::array<int, 2> e1{1, 0}, e2{0, 1};
    CHECK(std::abs(hyperplane_moment(b, true, v, e1, -1)) <= 1e-6);
    CHECK(std::abs(hyperplane_moment(b, true, v, e2, -1)) <= 1e-6);
  }
  CHECK(b.support() == doctest::Approx(1.0));
  CHECK(b.phi(1.01 * b.support()) == 0.0);
  CHECK(b.psi(2.01 * b.support()) == 0.0);
  CHECK(b.psi(1.5 * b.support()) != 0.0);
  CHECK_THROWS_AS(build_basis(2, 0.1, 2), ConfigError);
  CHECK_THROWS_AS(build_basis(1, 0.0625, 2), ConfigError);
}

TEST_CASE("projections") {
  const auto b = build_basis(2, 0.0625, 2);
  const VelocityGrid g(2, 4.0, 64);
  const ScalarField zero(g);
  CHECK(ncbt::max_abs(project_P(2, zero, b)) == 0.0);
  CHECK(ncbt::max_abs(project_Q(2, zero, b)) == 0.0);

  // P_j c -> c on interior nodes
  const ScalarField c(g, 2.0);
  double prev = 1e300;
  for (int j = 1; j <= 2; ++j) {
    const auto pc = project_P(j, c, b);
    double worst = 0.0;
    std::array<double, 2> v{};
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.node(i, v.data());
      if (norm2(v) <= 1.0) worst = std::max(worst, std::abs(pc[i] - 2.0));
    }
    MESSAGE("j = " << j << " max |P_j c - c| = " << worst);
    CHECK(worst <= prev * 1.0000001);
    prev = worst;
  }
  CHECK(prev <= 0.05);
  CHECK_THROWS_AS(project_P(LPProjector::max_resolvable(g) + 1, c, b), DomainError);
}

TEST_CASE("Q_j(1) decay") {
  const auto b = build_basis(2, 0.0625, 2);
  const VelocityGrid g(2, 8.0, 48);
  const auto d = qj_one_decay(b, g, 1, 5);
  CHECK(d.j.size() == 5);
  CHECK(d.slope <= -1.7);
  CHECK_THROWS_AS(qj_one_decay(b, g, 1, 2), DomainError);
}

TEST_CASE("square function") {
  const auto b = build_basis(2, 0.0625, 2);
  const VelocityGrid g(2, 4.0, 64);
  const auto f = ncbt::bump(g, 0.3, 0.0, 0.6);
  const auto s1 = square_function(f, 0.5, 0.25, b, 1);
  const auto s3 = square_function(f, 0.5, 0.25, b, 2);
  CHECK(s1.value >= 0.0);
  CHECK(s3.value >= s1.value);
  CHECK(s3.ratio > 0.0);
  CHECK(std::isfinite(s3.ratio));

  const auto c = square_function(ScalarField(g, 1.0), 0.0, 0.25, b, 2);
  REQUIRE(c.terms.size() == 3);
  CHECK(c.terms[1] + c.terms[2] <= 0.1 * c.terms[0]);
  CHECK_THROWS_AS(square_function(f, 0.5, 0.25, b, 3), DomainError);
}
