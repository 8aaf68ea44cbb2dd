#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "common.hpp"
#include "ncb/error.hpp"
#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

using namespace ncb;
using std::numbers::pi;

TEST_CASE("grid integrals of Maxwellian moments") {
  const VelocityGrid g(2, 8.0, 64);
  const auto mu = ScalarField::from_function(g, [](std::span<const double> v) { return maxwellian(v); });
  CHECK(std::abs(integrate(mu) - 1.0) < 1e-4);
  CHECK(std::abs(integrate(mu, [](std::span<const double> v) { return norm2(v); }) - 2.0) < 1e-3);
  CHECK(integrate(ScalarField(g)) == 0.0);
  CHECK(inner(mu, mu) == doctest::Approx(l2_norm(mu) * l2_norm(mu)));
}

TEST_CASE("grid layout") {
  const VelocityGrid g(3, 4.0, 8);
  CHECK(g.size() == 512);
  CHECK(g.h() == doctest::Approx(1.0));
  CHECK(g.coord(0) == doctest::Approx(-3.5));
  std::array<int, 3> mi{};
  g.multi_index(77, mi.data());
  CHECK(g.index(mi) == 77);
  CHECK_THROWS_AS(VelocityGrid(2, 4.0, 7), DomainError);
  ScalarField bad(g);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bad.check_finite(), NumericalError);
}

TEST_CASE("Gauss-Legendre exactness") {
  auto [x, w] = gauss_legendre(6, -1.0, 2.0);
  for (int k = 0; k <= 11; ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) q += w[i] * std::pow(x[i], k);
    const double exact = (std::pow(2.0, k + 1) - std::pow(-1.0, k + 1)) / (k + 1);
    CHECK(q == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("sphere rules") {
  const std::array<double, 2> axis2{0.6, 0.8};
  const std::array<double, 3> axis3{0.0, 0.0, 1.0};
  auto one = [](std::span<const double>) { return 1.0; };
  CHECK(sphere_integrate(one, SphereRule::full(2, 32), axis2, Compensation::none) ==
        doctest::Approx(2.0 * pi).epsilon(1e-10));
  CHECK(sphere_integrate(one, SphereRule::full(3, 32), axis3, Compensation::none) ==
        doctest::Approx(4.0 * pi).epsilon(1e-10));

  // <k, sigma>^2 over S^2 is 4 pi / 3
  auto sq = [&](std::span<const double> s) { return s[2] * s[2]; };
  CHECK(sphere_integrate(sq, SphereRule::full(3, 16), axis3, Compensation::none) ==
        doctest::Approx(4.0 * pi / 3.0).epsilon(1e-10));

  // odd pairing: the odd part of the integrand drops out exactly
  const auto cap = SphereRule::graded(2, 24, 3.0);
  auto odd = [&](std::span<const double> s) { return s[0] * 0.8 - s[1] * 0.6; };
  CHECK(std::abs(sphere_integrate(odd, cap, axis2, Compensation::odd_pairing)) <= 1e-14);

  auto nan = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(sphere_integrate(nan, cap, axis2, Compensation::none), AccuracyError);
}

TEST_CASE("Richardson probe") {
  // int_{-6}^{6} e^{-x^2/2} dx by Gauss-Legendre with 16, 32, 64 nodes
  auto gauss = [](int l) {
    auto [x, w] = gauss_legendre(16 << l, -6.0, 6.0);
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) t += w[i] * std::exp(-0.5 * x[i] * x[i]);
    return t;
  };
  auto r = richardson_probe(gauss, 3);
  CHECK(r.converged);
  CHECK(r.error <= 1e-6);
  CHECK(r.value == doctest::Approx(std::sqrt(2 * pi) * std::erf(6.0 / std::sqrt(2.0))).epsilon(1e-9));

  auto poly = [](int l) {
    auto [x, w] = gauss_legendre(2 + l, 0.0, 1.0);
    double t = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) t += w[i] * (3 * x[i] * x[i] - x[i] + 1);
    return t;
  };
  CHECK(richardson_probe(poly, 3).error <= 1e-15);

  // theta-cap integral of theta^{-1-2s} theta without compensation, s = 3/4, cap shrinking
  auto divergent = [](int l) {
    const double tmin = std::ldexp(0.1, -2 * l);
    return (std::pow(tmin, -0.5) - std::pow(0.5 * pi, -0.5)) / 0.5;
  };
  CHECK_FALSE(richardson_probe(divergent, 3).converged);
}

TEST_CASE("interpolation") {
  const VelocityGrid g(2, 4.0, 32);
  auto f = ScalarField::from_function(g, [](std::span<const double> v) { return 1.0 + v[0] - 0.5 * v[0] * v[1]; });
  const std::array<double, 2> x{0.31, -0.77}, far{9.0, 0.0};
  CHECK(interpolate(f, x) == doctest::Approx(1.0 + 0.31 + 0.5 * 0.31 * 0.77).epsilon(1e-12));
  CHECK(interpolate(f, far) == 0.0);
}
