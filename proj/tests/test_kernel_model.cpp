#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "common.hpp"
#include "ncb/error.hpp"
#include "ncb/geometry.hpp"
#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

using namespace ncb;
using std::numbers::pi;

TEST_CASE("inverse power exponents") {
  auto p5 = KernelParams::from_inverse_power(5.0, 3);
  CHECK(p5.gamma == doctest::Approx(0.0));
  CHECK(p5.s == doctest::Approx(0.25));
  auto p3 = KernelParams::from_inverse_power(3.0, 3);
  CHECK(p3.gamma == doctest::Approx(-1.0));
  CHECK(p3.s == doctest::Approx(0.5));
  CHECK_THROWS_WITH_AS(KernelParams::from_inverse_power(2.0, 3), doctest::Contains("not well defined"), DomainError);
}

TEST_CASE("parameter validation") {
  KernelParams p;
  p.s = 1.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.s = 0.25;
  p.gamma = -3.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK(ncbt::hard().regime() == Regime::hard);
  CHECK(ncbt::soft().regime() == Regime::soft);
}

TEST_CASE("maxwellian values and derivatives") {
  const std::array<double, 2> zero{0.0, 0.0};
  CHECK(maxwellian(zero) == doctest::Approx(1.0 / (2.0 * pi)).epsilon(1e-12));
  CHECK(maxwellian(zero) == doctest::Approx(0.159155).epsilon(1e-5));

  const VelocityGrid g(2, 8.0, 48);
  const auto mu = ScalarField::from_function(g, [](std::span<const double> v) { return maxwellian(v); });
  CHECK(std::abs(integrate(mu) - 1.0) < 1e-4);

  const std::array<double, 2> v{0.7, -1.1};
  const std::array<int, 2> b0{0, 0}, b1{1, 0}, b2{2, 0}, b11{1, 1}, b3{3, 0};
  const double M = sqrt_maxwellian(v);
  CHECK(m_beta(v, b0) == doctest::Approx(M).epsilon(1e-14));
  CHECK(m_beta(v, b1) == doctest::Approx(-0.5 * v[0] * M).epsilon(1e-12));
  CHECK(m_beta(v, b2) == doctest::Approx((0.25 * v[0] * v[0] - 0.5) * M).epsilon(1e-12));
  CHECK(m_beta(v, b11) == doctest::Approx(0.25 * v[0] * v[1] * M).epsilon(1e-12));
  CHECK_THROWS_AS(m_beta(v, b3), DomainError);
}

TEST_CASE("angular kernel") {
  KernelParams p = ncbt::hard();
  CHECK(angular_b_theta(pi / 2, p) == doctest::Approx(std::pow(pi / 2, -1.5)).epsilon(1e-12));
  CHECK(angular_b(std::cos(pi / 2), p) == doctest::Approx(0.507949).epsilon(1e-5));
  CHECK(angular_b(std::cos(2.0), p) == 0.0);
  CHECK(angular_b(-1.0, p) == 0.0);
  CHECK(std::isinf(angular_b(1.0, p)));
}

TEST_CASE("collision kernel and dyadic pieces") {
  KernelParams p = ncbt::hard();
  const std::array<double, 2> sigma{0.6, 0.8};
  const std::array<double, 2> v{1.0, 0.5}, vs1{0.0, 0.0}, vs2{-3.0, -1.0};
  // gamma = 0: only the angle matters, so rescaling v - v_* leaves B unchanged
  const std::array<double, 2> vs_far{1.0 - 2.0 * 1.0, 0.5 - 2.0 * 0.5};
  CHECK(collision_B(v, vs1, sigma, p) == doctest::Approx(collision_B(v, vs_far, sigma, p)).epsilon(1e-12));
  (void)vs2;

  double sum = 0.0;
  const double B = collision_B(v, vs2, sigma, p);
  for (int k = -40; k <= 40; ++k) sum += collision_Bk(k, v, vs2, sigma, p);
  CHECK(sum / B == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 2.0);
  std::uniform_real_distribution<double> U(0.0, 2.0 * pi);
  int hits = 0;
  for (int t = 0; t < 200; ++t) {
    const std::array<double, 2> a{N(rng), N(rng)}, b{N(rng), N(rng)};
    const double phi = U(rng);
    const std::array<double, 2> sg{std::cos(phi), std::sin(phi)};
    const auto c = make_collision(a, b, sg);
    const double r = std::hypot(a[0] - b[0], a[1] - b[1]);
    const double d = std::hypot(a[0] - c.v_prime[0], a[1] - c.v_prime[1]);
    CHECK(d == doctest::Approx(r * std::sin(0.5 * c.theta)).epsilon(1e-9));
    if (!(d > 0.0) || c.theta > 0.5 * pi) continue;
    const int k = dyadic_index(d);
    CHECK(d >= std::ldexp(1.0, -k - 1));
    CHECK(d < std::ldexp(1.0, -k));
    CHECK(collision_Bk(k, a, b, sg, p) == doctest::Approx(collision_B(a, b, sg, p)));
    CHECK(collision_Bk(k + 1, a, b, sg, p) == 0.0);
    ++hits;
  }
  CHECK(hits > 50);

  CHECK_THROWS_AS(collision_B(v, v, sigma, ncbt::soft()), DomainError);
}

TEST_CASE("dyadic cutoffs partition (0, inf)") {
  for (double r : {1e-6, 0.3, 0.5, 1.0, 7.0}) {
    int count = 0;
    for (int k = -10; k <= 30; ++k) count += DyadicCutoff{k}(r) > 0.0 ? 1 : 0;
    CHECK(count == 1);
  }
}

// At v = 0 and gamma = 0, n = 2 the post-collisional |v'_*| is r cos(theta/2), so
// nu~(0) = 2 pi int r M(r) int_{-pi/2}^{pi/2} |theta|^{-3/2} (M(r) - M(r cos(theta/2))) dtheta dr.
double nu_tilde_origin_oracle() {
  auto M = [](double x) { return std::exp(-0.25 * x * x) / std::sqrt(2.0 * pi); };
  auto [tr, wr] = gauss_legendre(80, 0.0, 20.0);
  // theta = u^4 removes the endpoint singularity: d theta = 4 u^3 du, theta^{-3/2} = u^{-6}
  auto [tu, wu] = gauss_legendre(60, 0.0, std::pow(0.5 * pi, 0.25));
  double total = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double r = tr[i];
    double inner = 0.0;
    for (std::size_t k = 0; k < tu.size(); ++k) {
      const double u = tu[k], th = std::pow(u, 4);
      inner += wu[k] * 4.0 * std::pow(u, -3) * (M(r) - M(r * std::cos(0.5 * th)));
    }
    total += wr[i] * r * M(r) * 2.0 * inner;
  }
  return 2.0 * pi * total;
}

TEST_CASE("nu tilde") {
  const KernelParams p = ncbt::hard();
  const VelocityGrid g(2, 8.0, 48);
  const auto rule = SphereRule::graded(2, 32, 3.0);
  const std::array<double, 2> zero{0.0, 0.0};
  const double nu0 = nu_tilde(zero, p, g, rule);
  const double oracle = nu_tilde_origin_oracle();
  MESSAGE("nu~(0) = " << nu0 << ", oracle " << oracle);
  CHECK(nu0 == doctest::Approx(oracle).epsilon(0.01));

  // independent polar quadrature in (|v_*|, angle, theta = u^4) with Gauss-Legendre nodes
  const std::array<double, 2> v4{4.0, 0.0}, v8{8.0, 0.0};
  CHECK(nu_tilde(v4, p, g, rule) == doctest::Approx(0.8551828).epsilon(1e-4));
  CHECK(nu_tilde(v8, p, g, rule) == doctest::Approx(2.5686395).epsilon(1e-4));

  // The local log-log slope decreases towards gamma + 2s as |v| grows.
  auto slope = [&](double a, double b) {
    const std::array<double, 2> va{a, 0.0}, vb{b, 0.0};
    const double S = 0.8056163375510869;  // int b (cos^{-2}(theta/2) - 1) dsigma; nu~ + S/2 >= 0
    return std::log((nu_tilde(vb, p, g, rule) + 0.5 * S) / (nu_tilde(va, p, g, rule) + 0.5 * S)) /
           std::log(bracket(vb) / bracket(va));
  };
  const double s_in = slope(2.0, 5.0), s_out = slope(5.0, 8.0);
  MESSAGE("local slopes " << s_in << " " << s_out);
  CHECK(s_out < s_in);
  CHECK(s_out > p.gamma + 2.0 * p.s);

  const std::array<double, 2> a{2.0, 0.0}, b{std::sqrt(2.0), std::sqrt(2.0)};
  CHECK(nu_tilde(a, p, g, rule) == doctest::Approx(nu_tilde(b, p, g, rule)).epsilon(0.02));
}
