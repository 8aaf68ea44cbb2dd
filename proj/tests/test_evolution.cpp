#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "common.hpp"
#include "ncb/error.hpp"
#include "ncb/evolution.hpp"

using namespace ncb;
using std::numbers::pi;

namespace {

const SphereRule& rule() {
  static const SphereRule r = SphereRule::graded(2, 32, 3.0);
  return r;
}

ScalarField micro_bump(const VelocityGrid& g) {
  return project_null(ncbt::bump(g, 0.4, -0.3, 1.0, 0.5), NullBasis::make(g)).micro;
}

double l2(const State& s) { return std::sqrt(s.grid.cell_volume() * s.dx()) * s.f.norm(); }

}  // namespace

TEST_CASE("null-space data is stationary") {
  const auto& m = ncbt::small_operator(true);
  const auto f0 = ScalarField::from_function(m.grid, [](std::span<const double> v) {
    return (1.0 - 0.5 * v[1] + 0.2 * norm2(v)) * sqrt_maxwellian(v);
  });
  StepperOptions o;
  o.dt = 0.05;
  const Stepper st(m, rule(), o);
  State s = State::homogeneous(f0);
  for (int k = 0; k < 100; ++k) s = st.step(s);
  CHECK((s.f.col(0) - State::homogeneous(f0).f.col(0)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("linear runs dissipate") {
  const auto& m = ncbt::small_operator(true);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  ScalarField f0(m.grid);
  for (double& x : f0.values) x = N(rng);
  f0 = project_null(f0, NullBasis::make(m.grid)).micro;
  StepperOptions o;
  o.dt = 0.1;
  const Stepper st(m, rule(), o);
  State s = State::homogeneous(f0);
  double prev = l2(s);
  for (int k = 0; k < 20; ++k) {
    s = st.step(s);
    const double now = l2(s);
    CHECK(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
}

TEST_CASE("implicit Euler is first order") {
  const auto& m = ncbt::small_operator(true);
  const auto f0 = micro_bump(m.grid);
  auto run = [&](double dt) {
    State s = State::homogeneous(f0);
    const int K = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < K; ++k) s = step(s, dt, false, m, rule());
    return s.f.col(0).eval();
  };
  const auto a = run(0.1), b = run(0.05), c = run(0.025);
  const double ratio = (a - b).norm() / (b - c).norm();
  MESSAGE("successive difference ratio " << ratio);
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("explicit scheme guards its step") {
  const auto& m = ncbt::small_operator(true);
  StepperOptions o;
  o.dt = 50.0;
  o.scheme = Scheme::explicit_euler;
  const Stepper st(m, rule(), o);
  REQUIRE(st.cfl_note().has_value());
  State s = st.step(State::homogeneous(micro_bump(m.grid)));
  CHECK(s.f.allFinite());
  CHECK(l2(s) < l2(State::homogeneous(micro_bump(m.grid))));
}

TEST_CASE("Picard iteration from zero data") {
  const auto& m = ncbt::small_operator(true);
  const auto r = picard(ScalarField(m.grid), m, rule(), {});
  CHECK(r.converged);
  for (double G : r.G) CHECK(G == 0.0);
  CHECK(ncbt::max_abs(r.final_state) == 0.0);

  PicardOptions big;
  CHECK_THROWS_AS(picard(micro_bump(m.grid), m, rule(), big), DomainError);
}

TEST_CASE("macroscopic fields") {
  const VelocityGrid g(2, 6.0, 36);
  const auto micro = micro_bump(g);
  const auto mf = macro_extract(State::homogeneous(micro));
  CHECK(std::abs(mf.a[0]) <= 1e-12);
  CHECK(std::abs(mf.b[0][0]) <= 1e-12);
  CHECK(std::abs(mf.b[1][0]) <= 1e-12);
  CHECK(std::abs(mf.c[0]) <= 1e-12);

  // a = cos x, b_1 = sin x, no microscopic part: I_a = int cos^2 up to the centered-difference factor
  const int nx = 32;
  std::vector<ScalarField> slices;
  for (int ix = 0; ix < nx; ++ix) {
    const double x = 2 * pi * ix / nx;
    slices.push_back(ScalarField::from_function(g, [x](std::span<const double> v) {
      return (std::cos(x) + std::sin(x) * v[0]) * sqrt_maxwellian(v);
    }));
  }
  const State s = State::transport(slices);
  const auto tm = macro_extract(s);
  CHECK(tm.a[3] == doctest::Approx(std::cos(2 * pi * 3 / nx)).epsilon(1e-10));
  CHECK(tm.b[0][3] == doctest::Approx(std::sin(2 * pi * 3 / nx)).epsilon(1e-10));
  const auto I = interaction_functionals(s);
  const double dx = 2 * pi / nx;
  CHECK(I.Ia == doctest::Approx(pi * std::sin(dx) / dx).epsilon(1e-8));
  CHECK(std::abs(I.Ib) <= 1e-10);
  CHECK(std::abs(I.Ic) <= 1e-10);
  CHECK(interaction_functionals(State::homogeneous(micro)).total() == 0.0);
}

TEST_CASE("Fourier advection") {
  const VelocityGrid g(2, 4.0, 8);
  const int nx = 16;
  std::vector<ScalarField> slices;
  for (int ix = 0; ix < nx; ++ix) {
    const double x = 2 * pi * ix / nx;
    slices.push_back(ScalarField::from_function(g, [x](std::span<const double> v) {
      return std::cos(x) * std::exp(-norm2(v)) + 0.3 * std::sin(2 * x) * v[1];
    }));
  }
  State s = State::transport(slices);
  const State s0 = s;
  const double tau = 0.37;
  advect(s, tau);
  std::vector<double> v(2);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = 2 * pi * ix / nx;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.node(i, v.data());
      const double y = x - v[0] * tau;
      const double expect = std::cos(y) * std::exp(-norm2(v)) + 0.3 * std::sin(2 * y) * v[1];
      CHECK(s.f(static_cast<Eigen::Index>(i), ix) == doctest::Approx(expect).epsilon(1e-10));
    }
  }
  advect(s, -tau);
  CHECK((s.f - s0.f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("transport runs conserve the macroscopic means") {
  const auto& m = ncbt::small_operator(true);
  const int nx = 8;
  std::vector<ScalarField> slices;
  const auto mb = micro_bump(m.grid);
  for (int ix = 0; ix < nx; ++ix) {
    const double x = 2 * pi * ix / nx;
    ScalarField sl = ScalarField::from_function(m.grid, [x](std::span<const double> v) {
      return std::cos(x) * (1.0 + v[0] + 0.5 * norm2(v)) * sqrt_maxwellian(v);
    });
    sl += std::sin(x) * mb;
    slices.push_back(sl);
  }
  StepperOptions o;
  o.dt = 0.1;
  const Stepper st(m, rule(), o);
  State s = State::transport(slices);
  for (int k = 0; k < 5; ++k) {
    s = st.step(s);
    const auto mf = macro_extract(s);
    CHECK(std::abs(mf.mean_a()) <= 1e-8);
    CHECK(std::abs(mf.mean_b(0)) <= 1e-8);
    CHECK(std::abs(mf.mean_b(1)) <= 1e-8);
    CHECK(std::abs(mf.mean_c()) <= 1e-8);
  }
}

TEST_CASE("decay fits") {
  std::vector<double> t, flat, ex, pw;
  for (int k = 0; k <= 200; ++k) {
    t.push_back(0.1 * k);
    flat.push_back(2.0);
    ex.push_back(3.0 * std::exp(-0.7 * t.back()));
    pw.push_back(std::pow(1.0 + t.back(), -1.5));
  }
  const auto f0 = decay_fit(t, flat, Regime::hard, 1.0, 20.0);
  CHECK(std::abs(f0.rate) <= 1e-12);
  const auto f1 = decay_fit(t, ex, Regime::hard, 1.0, 20.0);
  CHECK(f1.rate == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(f1.r2 == doctest::Approx(1.0));
  const auto f2 = decay_fit(t, pw, Regime::soft, 1.0, 20.0);
  CHECK(f2.rate == doctest::Approx(-1.5).epsilon(1e-6));
  CHECK(f2.reliable);
  const std::vector<double> few(t.begin(), t.begin() + 20), fewn(flat.begin(), flat.begin() + 20);
  CHECK_THROWS_AS(decay_fit(few, fewn, Regime::hard, 0.0, 2.0), DomainError);
}

TEST_CASE("energy functionals") {
  const VelocityGrid g(2, 6.0, 36);
  const auto z = energy_sample(State::homogeneous(ScalarField(g)), ncbt::hard());
  CHECK(z.E0 == 0.0);
  CHECK(z.E1 == 0.0);
  CHECK(z.D0 == 0.0);
  CHECK(z.D1 == 0.0);
  CHECK(z.a_mean == 0.0);
  CHECK(z.H == doctest::Approx(1.0 + std::log(2 * pi)).epsilon(1e-6));

  const auto& m = ncbt::small_operator(true);
  StepperOptions o;
  o.dt = 0.1;
  const Stepper st(m, rule(), o);
  State s = State::homogeneous(0.05 * micro_bump(m.grid));
  std::vector<EnergySample> samples;
  for (int k = 0; k <= 10; ++k) {
    samples.push_back(energy_sample(s, m.params));
    s = st.step(s);
    s.t = (k + 1) * o.dt;
  }
  const auto rep = energy_track(samples);
  CHECK(rep.E_decreasing);
  CHECK(rep.delta > 0.0);
  for (const auto& e : rep.samples) CHECK(std::isfinite(e.G));
}
