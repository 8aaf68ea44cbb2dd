#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "common.hpp"
#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/linearized.hpp"

using namespace ncb;

namespace {

const VelocityGrid& grid() {
  static const VelocityGrid g(2, 6.0, 32);
  return g;
}

const SphereRule& rule() {
  static const SphereRule r = SphereRule::graded(2, 24, 3.0);
  return r;
}

ScalarField mu_field(const VelocityGrid& g) {
  return ScalarField::from_function(g, [](std::span<const double> v) { return maxwellian(v); });
}

}  // namespace

TEST_CASE("collision operator on equilibria and zero") {
  const auto p = ncbt::hard();
  const auto mu = mu_field(grid());
  const auto F = ScalarField::from_function(grid(), [](std::span<const double> v) {
    return maxwellian(v) * (1.0 + 0.3 * v[0] * v[1] - 0.1 * v[0]);
  });
  const auto qff = q_apply(F, F, p, rule());
  const auto qmm = q_apply(mu, mu, p, rule());
  MESSAGE("max|Q(mu,mu)| = " << ncbt::max_abs(qmm) << ", max|Q(F,F)| = " << ncbt::max_abs(qff));
  CHECK(ncbt::max_abs(qmm) <= 1e-6 * ncbt::max_abs(qff));
  CHECK(ncbt::max_abs(q_apply(ScalarField(grid()), F, p, rule())) == 0.0);

  // collision invariants
  double l1 = 0.0;
  for (double x : qff.values) l1 += std::abs(x);
  l1 *= grid().cell_volume();
  for (auto w : {+[](std::span<const double>) { return 1.0; }, +[](std::span<const double> v) { return v[0]; },
                 +[](std::span<const double> v) { return v[1]; }, +[](std::span<const double> v) { return norm2(v); }}) {
    CHECK(std::abs(integrate(qff, w)) <= 1e-3 * l1);
  }

  auto hi = p;
  hi.s = 0.6;
  CHECK_THROWS_AS(q_apply(F, F, hi, rule(), Compensation::none), AccuracyError);
}

TEST_CASE("Gamma and the linearized operator") {
  const auto p = ncbt::hard();
  const auto M = ncbt::root_mu(grid());
  const auto g = ncbt::bump(grid(), 0.5, -0.3, 0.9, 0.4);
  CHECK(ncbt::max_abs(gamma_apply(g, ScalarField(grid()), p, rule())) == 0.0);

  // L g = -Gamma(M, g) - Gamma(g, M) and the N + K split
  const auto L = L_apply(g, p, rule());
  const auto split = n_apply(g, p, rule()) + k_apply(g, p, rule());
  const auto direct = -1.0 * (gamma_apply(M, g, p, rule()) + gamma_apply(g, M, p, rule()));
  CHECK(l2_norm(L - split) <= 1e-12 * l2_norm(L));
  CHECK(l2_norm(L - direct) <= 1e-3 * l2_norm(L));

  // null space, relative to the action on a non-null field
  const auto v1M = ScalarField::from_function(grid(), [](std::span<const double> v) { return v[0] * sqrt_maxwellian(v); });
  MESSAGE("|L M| = " << l2_norm(L_apply(M, p, rule())) << ", |L v1 M| = " << l2_norm(L_apply(v1M, p, rule()))
                     << ", |L g| = " << l2_norm(L));
  CHECK(l2_norm(L_apply(M, p, rule())) <= 1e-3 * l2_norm(L));
  CHECK(l2_norm(L_apply(v1M, p, rule())) <= 1e-3 * l2_norm(L));
}

TEST_CASE("trilinear representations") {
  const auto p = ncbt::hard();
  const auto g = ncbt::bump(grid(), 0.2, 0.1, 1.0, 0.3);
  const auto h = ncbt::bump(grid(), -0.4, 0.3, 0.8);
  const ScalarField zero(grid());
  CHECK(trilinear_sigma(g, h, zero, 0, p, rule()).value == 0.0);
  CHECK(trilinear_dual(g, h, zero, 0, p, rule()).value == 0.0);

  const auto tp = t_pieces(dyadic_window(grid()).k_min + 1, 0, zero, h, g, p, rule());
  CHECK(tp.plus == 0.0);
  CHECK(tp.minus == 0.0);
  CHECK(tp.star == 0.0);
  CHECK_THROWS_AS(t_pieces(dyadic_window(grid()).k_max + 5, 0, g, h, g, p, rule()), AccuracyError);

  // <Gamma(g,h), f> directly against the sigma representation
  const auto f = ncbt::bump(grid(), 0.3, -0.2, 1.1);
  const double direct = inner(gamma_apply(g, h, p, rule()), f);
  const auto sig = trilinear_sigma(g, h, f, 0, p, rule());
  CHECK(sig.value == doctest::Approx(direct).epsilon(0.01));
}

TEST_CASE("regularized kernel has vanishing moment") {
  for (int n : {2, 3}) {
    KernelParams p = ncbt::hard();
    p.n = n;
    for (double tm : {0.05, 0.2}) {
      const auto rk = regularized_b(p, tm);
      CHECK(std::abs(rk.moment()) <= 1e-10);
      CHECK(rk.value_theta(0.5 * tm) < 0.0);
      CHECK(rk.value_theta(1.0) == doctest::Approx(angular_b_theta(1.0, p)));
    }
  }
}

TEST_CASE("Carleman kernel") {
  const auto p = ncbt::hard();
  const std::array<double, 2> a{0.5, -0.2}, b{0.9, 0.3}, c{-1.0, 1.5};
  const double kab = carleman_K(a, b, p), kba = carleman_K(b, a, p);
  CHECK(kab > 0.0);
  CHECK(kab == doctest::Approx(kba).epsilon(0.02));
  CHECK(carleman_K(a, c, p) == doctest::Approx(carleman_K(c, a, p)).epsilon(0.02));
  CHECK_THROWS_AS(carleman_K(a, a, p), DomainError);

  // parallel and far apart: small compared with nearby pairs
  const std::array<double, 2> x{3.0, 0.0}, y{6.0, 0.0};
  CHECK(carleman_K(x, y, p) < kab);
}

TEST_CASE("B semi-norm") {
  const auto p = ncbt::hard();
  CHECK(b_seminorm(ScalarField(grid()), 0, p, rule()) == 0.0);
  const auto g = ncbt::bump(grid(), 0.3, 0.2, 0.9, 0.2);
  const double b0 = b_seminorm(g, 0, p, rule());
  CHECK(b0 > 0.0);
  CHECK(b_seminorm(3.0 * g, 0, p, rule()) == doctest::Approx(9.0 * b0).epsilon(1e-12));

  // <N g, g> = |g|_B^2 + int nu~ g^2
  const auto nu = nu_tilde_field(grid(), p, rule());
  ScalarField nug = g;
  for (std::size_t i = 0; i < g.size(); ++i) nug[i] *= nu[i];
  const double lhs = inner(n_apply(g, p, rule()), g);
  CHECK(lhs == doctest::Approx(b0 + inner(nug, g)).epsilon(0.01));
}

TEST_CASE("entropy and its production") {
  const auto p = ncbt::hard();
  const auto mu = mu_field(grid());
  const auto e = entropy(mu, p, rule());
  // H(mu) = n/2 (1 + log 2 pi)
  CHECK(e.H == doctest::Approx(1.0 + std::log(2 * std::numbers::pi)).epsilon(1e-6));
  CHECK(std::abs(e.D) <= 1e-12);

  const auto F = ScalarField::from_function(grid(), [](std::span<const double> v) {
    return maxwellian(v) * (1.0 + 0.2 * std::sin(v[0]) * std::exp(-0.1 * norm2(v)));
  });
  CHECK(entropy(F, p, rule()).D >= -1e-8);

  auto bad = mu;
  bad[10] = -1e-3;
  CHECK_THROWS_AS(entropy(bad, p, rule()), DomainError);
}
