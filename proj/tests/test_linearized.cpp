#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "common.hpp"
#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/linearized.hpp"

using namespace ncb;

TEST_CASE("assembled matrix matches the operator") {
  const auto& m = ncbt::small_operator(false);
  const auto rule = SphereRule::graded(2, 32, 3.0);
  CHECK(m.asymmetry <= 0.05);
  CHECK((m.L - m.L.transpose()).norm() == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int k = 0; k < 3; ++k) {
    const auto g = ncbt::bump(m.grid, U(rng), U(rng), 0.9, 0.3);
    const auto direct = L_apply(g, m.params, rule);
    // the symmetrized matrix is compared through the quadratic form
    CHECK(m.form(g) == doctest::Approx(inner(direct, g)).epsilon(0.01));
  }
}

TEST_CASE("zero kernel gives the zero matrix") {
  auto p = ncbt::hard();
  p.c_phi = 0.0;
  const VelocityGrid g(2, 4.0, 12);
  const auto m = assemble(g, p, SphereRule::graded(2, 8, 3.0));
  CHECK(m.L.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("null space and spectrum") {
  const auto& m = ncbt::small_operator(false);
  const NullBasis nb = NullBasis::make(m.grid);
  const Eigen::MatrixXd G = m.grid.cell_volume() * nb.E.transpose() * nb.E;
  CHECK((G - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-10);
  CHECK(nb.dim() == 4);

  const double scale = m.L.norm();
  for (int k = 0; k < nb.dim(); ++k) CHECK((m.L * nb.E.col(k)).norm() <= 1e-3 * scale * nb.E.col(k).norm());

  const Eigen::VectorXd ev = eigenvalues(m);
  MESSAGE("lowest eigenvalues " << ev.head(6).transpose());
  for (int k = 0; k < 4; ++k) CHECK(std::abs(ev(k)) < 1e-3);
  CHECK(ev(4) >= 10.0 * std::abs(ev(3)));
  CHECK(ev(4) > 0.0);
}

TEST_CASE("null projection") {
  const VelocityGrid g(2, 6.0, 36);
  const NullBasis nb = NullBasis::make(g);
  const auto M = ncbt::root_mu(g);
  const auto pm = project_null(M, nb);
  CHECK(ncbt::max_abs(pm.micro) <= 1e-12);
  CHECK(pm.a == doctest::Approx(1.0));

  const auto odd = ScalarField::from_function(g, [](std::span<const double> v) {
    return v[0] * (1.0 + v[1] * v[1]) * sqrt_maxwellian(v);
  });
  const auto po = project_null(odd, nb);
  CHECK(std::abs(po.a) <= 1e-12);
  CHECK(std::abs(po.c) <= 1e-12);
  CHECK(std::abs(po.b[0]) > 0.1);
  CHECK(std::abs(po.b[1]) <= 1e-12);
  // (I - P) g is orthogonal to every collision invariant
  CHECK((nb.raw.transpose() * Eigen::Map<const Eigen::VectorXd>(po.micro.values.data(), po.micro.size())).norm() <=
        1e-10);
}

TEST_CASE("coercivity probe") {
  const auto& m = ncbt::small_operator(false);
  const NullBasis nb = NullBasis::make(m.grid);
  std::vector<ScalarField> suite{ncbt::root_mu(m.grid), ncbt::bump(m.grid, 0.5, 0.0, 0.8),
                                 ncbt::bump(m.grid, -1.0, 1.0, 0.7, 0.5), ScalarField(m.grid)};
  const auto r = coercivity_probe(suite, m, nb);
  CHECK(r.skipped == 2);
  CHECK(r.negative == 0);
  CHECK(r.delta0 > 0.0);
  CHECK(r.C_upper >= r.delta0);
}

TEST_CASE("matrix dump layout") {
  const auto& m = ncbt::small_operator(false);
  const auto path = std::filesystem::temp_directory_path() / "ncb_unit_dump.bin";
  m.dump(path.string());
  std::ifstream is(path, std::ios::binary);
  std::uint64_t dims[2];
  is.read(reinterpret_cast<char*>(dims), sizeof dims);
  CHECK(dims[0] == m.size());
  CHECK(dims[1] == m.size());
  double first[2];
  is.read(reinterpret_cast<char*>(first), sizeof first);
  CHECK(first[0] == m.L(0, 0));
  CHECK(first[1] == m.L(0, 1));
  CHECK(std::filesystem::file_size(path) == 16 + 8 * m.size() * m.size());
  std::filesystem::remove(path);
}

TEST_CASE("gap scan") {
  const VelocityGrid g(2, 8.0, 40);
  const auto rule = SphereRule::graded(2, 32, 3.0);
  const auto rows = gap_dichotomy_scan({ncbt::hard()}, {2.0, 3.0, 4.0, 5.0, 6.0}, g, rule);
  REQUIRE(rows.size() == 1);
  MESSAGE("hard slope " << rows[0].slope);
  CHECK(rows[0].classification == "gap");
  CHECK(rows[0].min_quotient > 0.0);
  CHECK_THROWS_AS(gap_dichotomy_scan({ncbt::hard()}, {7.0, 9.0}, g, rule), ConfigError);
}
