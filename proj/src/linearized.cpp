#include "ncb/linearized.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "engine.hpp"
#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/norms.hpp"

namespace ncb {

using detail::Lattice;
using detail::StencilNode;

namespace {

struct CompactNode {
  double W = 0.0;
  long off = 0;
  int count = 0;
  std::array<long, 27> rel{};
  std::array<double, 27> wt{};
};

void compact(const Lattice& L, const StencilNode& s, CompactNode& c) {
  c.W = s.W;
  c.off = s.off;
  c.count = 0;
  detail::for_stencil(L, 0, s, false, [&](long idx, double w) {
    c.rel[c.count] = idx;
    c.wt[c.count] = w;
    ++c.count;
  });
}

// Largest |<(A - A^T) f, q>| / sqrt(<A f, f><A q, q>) over a fixed family of smooth pairs.
double form_asymmetry(const Eigen::MatrixXd& A, const std::vector<double>& coords, int n) {
  const Eigen::Index S = A.rows();
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    Eigen::VectorXd f(S), q(S);
    for (Eigen::Index i = 0; i < S; ++i) {
      const double* v = &coords[static_cast<std::size_t>(i) * n];
      double rf = 0.0, rq = 0.0;
      for (int d = 0; d < n; ++d) {
        const double cf = d == 0 ? 0.7 * k : 0.0, cq = d == 0 ? -0.5 : (d == 1 ? 0.3 * k : 0.0);
        rf += (v[d] - cf) * (v[d] - cf);
        rq += (v[d] - cq) * (v[d] - cq);
      }
      const double y = n > 1 ? v[1] : 0.0;
      f(i) = std::exp(-0.5 * rf / (1.0 + 0.3 * k)) * (1.0 + 0.3 * v[0] - 0.2 * k * y);
      q(i) = std::exp(-0.25 * rq) * (1.0 + 0.1 * v[0] * y);
    }
    const double ef = f.dot(A * f), eq = q.dot(A * q);
    if (ef <= 0.0 || eq <= 0.0) continue;
    const double skew = q.dot(A * f) - f.dot(A * q);
    worst = std::max(worst, std::abs(skew) / std::sqrt(ef * eq));
  }
  return worst;
}

}  // namespace

OperatorMatrix assemble(const VelocityGrid& grid, const KernelParams& p, const SphereRule& rule,
                        const AssembleOptions& opt) {
  p.validate();
  if (p.n != grid.n() || rule.n != grid.n()) throw DomainError("kernel, rule and grid dimensions differ");
  const std::size_t S = grid.size();
  if (S > 4096) throw DomainError("assemble is limited to 4096 grid points");
  const int n = grid.n(), Nx = grid.points_per_axis();
  Lattice Lat(grid);
  std::vector<double> M(S), coords(S * n);
  for (std::size_t i = 0; i < S; ++i) {
    grid.node(i, &coords[i * n]);
    M[i] = sqrt_maxwellian(std::span<const double>(&coords[i * n], n));
  }
  // node table per lattice difference
  const int span = 2 * Nx - 1;
  long total = 1;
  for (int d = 0; d < n; ++d) total *= span;
  std::vector<std::vector<CompactNode>> table(static_cast<std::size_t>(total));
  const auto samples = detail::sigma_samples(rule, p);
  detail::SigmaBuilder builder{Lat, p, rule, samples, grid.cell_volume()};
  std::vector<StencilNode> nodes;
  for (long t = 0; t < total; ++t) {
    int du[3] = {0, 0, 0};
    long rem = t;
    bool zero = true;
    for (int d = n - 1; d >= 0; --d) {
      du[d] = static_cast<int>(rem % span) - (Nx - 1);
      rem /= span;
      if (du[d] != 0) zero = false;
    }
    if (zero) continue;
    if (!builder(du, 0.0, nodes)) continue;
    auto& row = table[static_cast<std::size_t>(t)];
    row.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) compact(Lat, nodes[k], row[k]);
  }
  std::vector<double> invMp(Lat.padded_size(), 0.0);
  for (std::size_t i = 0; i < S; ++i) invMp[static_cast<std::size_t>(Lat.pad[i])] = 1.0 / M[i];

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S, S), B = Eigen::MatrixXd::Zero(S, S);  // N and K, row-major fill
  std::vector<double> rowN(Lat.padded_size()), rowK(Lat.padded_size()), direct(S);
  int mi[3], mj[3];
  for (std::size_t i = 0; i < S; ++i) {
    std::fill(rowN.begin(), rowN.end(), 0.0);
    std::fill(rowK.begin(), rowK.end(), 0.0);
    std::fill(direct.begin(), direct.end(), 0.0);
    grid.multi_index(i, mi);
    const long bi = Lat.pad[i];
    double diag = 0.0;
    for (std::size_t j = 0; j < S; ++j) {
      if (j == i) continue;
      grid.multi_index(j, mj);
      long t = 0;
      for (int d = 0; d < n; ++d) t = t * span + (mi[d] - mj[d] + Nx - 1);
      const auto& row = table[static_cast<std::size_t>(t)];
      if (row.empty()) continue;
      const double Mj2 = M[j] * M[j];
      const long bj = Lat.pad[j];
      double wsum = 0.0;
      for (const auto& c : row) {
        const double a = c.W * Mj2;
        wsum += c.W;
        double* pn = rowN.data() + bi + c.off;
        double* pk = rowK.data() + bj - c.off;
        for (int k = 0; k < c.count; ++k) {
          pn[c.rel[k]] += a * c.wt[k];
          pk[-c.rel[k]] += a * c.wt[k];
        }
      }
      diag += wsum * Mj2;
      direct[j] += wsum * M[i] * M[j];
    }
    for (std::size_t c = 0; c < S; ++c) {
      const std::size_t q = static_cast<std::size_t>(Lat.pad[c]);
      A(i, c) = -M[i] * rowN[q] * invMp[q];
      B(i, c) = direct[c] - M[i] * rowK[q] * invMp[q];
    }
    A(i, i) += diag;
  }
  OperatorMatrix out;
  out.grid = grid;
  out.params = p;
  Eigen::MatrixXd L = A + B;
  const double nrm = L.norm();
  out.entry_asymmetry = nrm > 0.0 ? (L - L.transpose()).norm() / nrm : 0.0;
  out.asymmetry = form_asymmetry(L, coords, n);
  if (out.asymmetry > opt.max_asymmetry)
    throw AccuracyError("assembled operator asymmetry " + std::to_string(out.asymmetry) + " exceeds " +
                        std::to_string(opt.max_asymmetry));
  out.L = 0.5 * (L + L.transpose());
  if (opt.keep_parts) out.N = 0.5 * (A + A.transpose());
  {
    const NullBasis nb = NullBasis::make(grid);
    const double hn = grid.cell_volume();
    const Eigen::MatrixXd PL = hn * nb.E * (nb.E.transpose() * L);
    out.conservation_defect = nrm > 0.0 ? PL.norm() / nrm : 0.0;
    if (opt.conservative) {
      auto project = [&](Eigen::MatrixXd& X) {
        const Eigen::MatrixXd XE = X * nb.E;  // S x (n+2)
        const Eigen::MatrixXd EtXE = nb.E.transpose() * XE;
        X -= hn * (XE * nb.E.transpose() + nb.E * XE.transpose()) - hn * hn * nb.E * EtXE * nb.E.transpose();
      };
      project(out.L);
      out.conservative = true;
    }
  }
  if (opt.keep_parts) out.K = out.L - out.N;
  return out;
}

ScalarField OperatorMatrix::apply(const ScalarField& g) const {
  if (!(g.grid == grid)) throw DomainError("field grid differs from matrix grid");
  Eigen::Map<const Eigen::VectorXd> x(g.values.data(), static_cast<Eigen::Index>(g.size()));
  ScalarField out(grid);
  Eigen::Map<Eigen::VectorXd>(out.values.data(), static_cast<Eigen::Index>(out.size())) = L * x;
  return out;
}

double OperatorMatrix::form(const ScalarField& g) const {
  Eigen::Map<const Eigen::VectorXd> x(g.values.data(), static_cast<Eigen::Index>(g.size()));
  return x.dot(L * x) * grid.cell_volume();
}

double OperatorMatrix::form_N(const ScalarField& g) const {
  if (N.size() == 0) throw DomainError("matrix assembled without parts");
  Eigen::Map<const Eigen::VectorXd> x(g.values.data(), static_cast<Eigen::Index>(g.size()));
  return x.dot(N * x) * grid.cell_volume();
}

void OperatorMatrix::dump(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write " + tmp);
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(L.rows()), static_cast<std::uint64_t>(L.cols())};
    os.write(reinterpret_cast<const char*>(dims), sizeof dims);
    std::vector<double> row(static_cast<std::size_t>(L.cols()));
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
      for (Eigen::Index j = 0; j < L.cols(); ++j) row[static_cast<std::size_t>(j)] = L(i, j);
      os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
  }
  std::filesystem::rename(tmp, path);
}

Eigen::VectorXd eigenvalues(const OperatorMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.L, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  return es.eigenvalues();
}

NullBasis NullBasis::make(const VelocityGrid& grid) {
  NullBasis b;
  b.grid = grid;
  const int n = grid.n();
  const std::size_t S = grid.size();
  b.raw.resize(static_cast<Eigen::Index>(S), n + 2);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < S; ++i) {
    grid.node(i, v.data());
    const double M = sqrt_maxwellian(v);
    const auto r = static_cast<Eigen::Index>(i);
    b.raw(r, 0) = M;
    for (int d = 0; d < n; ++d) b.raw(r, d + 1) = v[d] * M;
    b.raw(r, n + 1) = norm2(v) * M;
  }
  b.gram = grid.cell_volume() * b.raw.transpose() * b.raw;
  Eigen::LLT<Eigen::MatrixXd> llt(b.gram);
  if (llt.info() != Eigen::Success) throw NumericalError("null basis Gram matrix is singular");
  // E = raw L^{-T}
  b.E = llt.matrixU().solve<Eigen::OnTheRight>(b.raw);
  return b;
}

NullProjection project_null(const ScalarField& g, const NullBasis& basis) {
  if (!(g.grid == basis.grid)) throw DomainError("field grid differs from basis grid");
  Eigen::Map<const Eigen::VectorXd> x(g.values.data(), static_cast<Eigen::Index>(g.size()));
  const double hn = g.grid.cell_volume();
  Eigen::VectorXd coef = basis.gram.llt().solve(hn * (basis.raw.transpose() * x));
  NullProjection r;
  const int n = g.grid.n();
  r.a = coef(0);
  for (int d = 0; d < n; ++d) r.b.push_back(coef(d + 1));
  r.c = coef(n + 1);
  r.Pg = ScalarField(g.grid);
  Eigen::Map<Eigen::VectorXd> pg(r.Pg.values.data(), static_cast<Eigen::Index>(g.size()));
  pg = basis.raw * coef;
  r.micro = ScalarField(g.grid);
  Eigen::Map<Eigen::VectorXd>(r.micro.values.data(), static_cast<Eigen::Index>(g.size())) = x - pg;
  return r;
}

CoercivityResult coercivity_probe(const std::vector<ScalarField>& suite, const OperatorMatrix& m,
                                  const NullBasis& basis, double tol) {
  CoercivityResult r;
  r.delta0 = std::numeric_limits<double>::infinity();
  r.C_upper = 0.0;
  const NormConfig nc = NormConfig::from(m.params, 0.0);
  for (const auto& g : suite) {
    auto pr = project_null(g, basis);
    const double total = inner(g, g);
    if (total == 0.0 || inner(pr.micro, pr.micro) <= 1e-20 * total) {
      ++r.skipped;
      continue;
    }
    const double q = m.form(g) / nsg_parts(pr.micro, nc).total;
    if (q < -tol) ++r.negative;
    r.ratios.push_back(q);
    r.delta0 = std::min(r.delta0, q);
    r.C_upper = std::max(r.C_upper, q);
  }
  if (r.ratios.empty()) r.delta0 = 0.0;
  return r;
}

namespace {

double log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(ys.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxy / sxx;
}

}  // namespace

GapRow gap_scan_one(const KernelParams& p, const VelocityGrid& grid, const SphereRule& rule,
                    const NullBasis& basis, const std::vector<double>& radii, const GapScanOptions& opt) {
  GapRow row;
  row.params = p;
  row.fit_lo = opt.fit_lo;
  row.fit_hi = opt.fit_hi;
  for (double r : radii) {
    if (r < 0.0 || r > grid.r_cut() - 2.0) {
      row.rejected.push_back(r);
      continue;
    }
    auto f = ScalarField::from_function(grid, [r](std::span<const double> v) {
      double d2 = (v[0] - r) * (v[0] - r);
      for (std::size_t d = 1; d < v.size(); ++d) d2 += v[d] * v[d];
      return std::exp(-0.5 * d2);
    });
    auto micro = project_null(f, basis).micro;
    row.radii.push_back(r);
    row.quotients.push_back(inner(L_apply(micro, p, rule), micro) / inner(micro, micro));
  }
  if (row.radii.empty()) throw ConfigError("all bump radii rejected (r_cut too small)");
  row.min_quotient = *std::min_element(row.quotients.begin(), row.quotients.end());
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < row.radii.size(); ++k)
    if (row.radii[k] >= opt.fit_lo - 1e-12 && row.radii[k] <= opt.fit_hi + 1e-12 && row.quotients[k] > 0.0) {
      xs.push_back(0.5 * std::log1p(row.radii[k] * row.radii[k]));
      ys.push_back(std::log(row.quotients[k]));
    }
  if (xs.size() < 2) {
    row.classification = "gap(boundary-adjacent)";
    return row;
  }
  row.slope = log_slope(xs, ys);
  const double target = p.gamma + 2.0 * p.s;
  row.slope_matches = target != 0.0 && std::abs(row.slope - target) <= 0.25 * std::abs(target);
  if (row.slope >= opt.flat) row.classification = "gap";
  else if (row.slope <= -opt.flat) row.classification = "no-gap";
  else row.classification = "gap(boundary-adjacent)";
  return row;
}

std::vector<GapRow> gap_dichotomy_scan(const std::vector<KernelParams>& params_list,
                                       const std::vector<double>& radii, const VelocityGrid& grid,
                                       const SphereRule& rule, const GapScanOptions& opt) {
  std::vector<GapRow> rows;
  const NullBasis basis = NullBasis::make(grid);
  for (const auto& p : params_list) rows.push_back(gap_scan_one(p, grid, rule, basis, radii, opt));
  return rows;
}

}  // namespace ncb
