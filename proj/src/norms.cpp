#include "ncb/norms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ncb/error.hpp"

namespace ncb {

NormConfig NormConfig::from(const KernelParams& p, double ell) {
  NormConfig c;
  c.params = p;
  c.ell = ell;
  return c;
}

void NormConfig::validate() const {
  params.validate();
  if (d_cut != 1.0) throw ConfigError("d_cut is fixed to 1");
  if (!(cone_eps > 0.0 && cone_eps < 1.0)) throw ConfigError("cone_eps must lie in (0,1)");
}

namespace {

struct Offset {
  std::array<int, 3> o{};
  double u[3]{};
  double r = 0.0;
};

std::vector<Offset> unit_offsets(const VelocityGrid& g) {
  const int n = g.n();
  const double h = g.h();
  const int m = static_cast<int>(std::floor(1.0 / h)) + 1;
  std::vector<Offset> out;
  const int span = 2 * m + 1;
  int total = 1;
  for (int d = 0; d < n; ++d) total *= span;
  for (int t = 0; t < total; ++t) {
    Offset off;
    int rem = t;
    double r2 = 0.0;
    bool zero = true;
    for (int d = 0; d < n; ++d) {
      off.o[d] = rem % span - m;
      rem /= span;
      off.u[d] = off.o[d] * h;
      r2 += off.u[d] * off.u[d];
      if (off.o[d] != 0) zero = false;
    }
    if (zero || r2 > 1.0 + 1e-12) continue;
    off.r = std::sqrt(r2);
    out.push_back(off);
  }
  return out;
}

// Directions on S^{n-1} with weights, for the self-cell moment integrals.
struct DirRule {
  std::vector<std::array<double, 3>> dir;
  std::vector<double> w;
};

const DirRule& dir_rule(int n) {
  static DirRule r2, r3;
  if (n == 2) {
    if (r2.dir.empty()) {
      const int m = 512;
      for (int k = 0; k < m; ++k) {
        const double a = 2.0 * std::numbers::pi * (k + 0.5) / m;
        r2.dir.push_back({std::cos(a), std::sin(a), 0.0});
        r2.w.push_back(2.0 * std::numbers::pi / m);
      }
    }
    return r2;
  }
  if (r3.dir.empty()) {
    auto [x, wx] = gauss_legendre(48, -1.0, 1.0);
    const int m = 96;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int k = 0; k < m; ++k) {
        const double a = 2.0 * std::numbers::pi * (k + 0.5) / m;
        const double st = std::sqrt(1.0 - x[i] * x[i]);
        r3.dir.push_back({st * std::cos(a), st * std::sin(a), x[i]});
        r3.w.push_back(wx[i] * 2.0 * std::numbers::pi / m);
      }
  }
  return r3;
}

// int over the cell [-h/2,h/2]^n of (grad . u)^2 / (|u|^2 + (v.u)^2)^{(n+2s)/2}, optionally
// restricted to the cone |v.u| <= eps/sqrt(1-eps^2) |u|.
double self_cell(const double* grad, const double* v, int n, double h, double s, bool aniso, double cone) {
  const DirRule& R = dir_rule(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < R.dir.size(); ++k) {
    const auto& w = R.dir[k];
    double gw = 0.0, vw = 0.0, mx = 0.0;
    for (int d = 0; d < n; ++d) {
      gw += grad[d] * w[d];
      vw += v[d] * w[d];
      mx = std::max(mx, std::abs(w[d]));
    }
    if (cone > 0.0 && std::abs(vw) > cone) continue;
    const double rmax = 0.5 * h / mx;
    const double aniso_f = aniso ? std::pow(1.0 + vw * vw, -0.5 * (n + 2.0 * s)) : 1.0;
    acc += R.w[k] * gw * gw * aniso_f * std::pow(rmax, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  }
  return acc;
}

struct SemiOptions {
  double s = 0.25;
  bool aniso = true;       // metric d vs Euclidean
  double kappa = 0.0;      // <v>^kappa <v'>^kappa
  const KernelParams* wparams = nullptr;
  double ell = 0.0;        // w^{2 ell}(v)
  double cone_eps = 0.0;   // > 0 restricts to the cone
};

double semi_double_sum(const ScalarField& f, const SemiOptions& o, std::size_t* boundary) {
  const VelocityGrid& g = f.grid;
  const int n = g.n(), N = g.points_per_axis();
  const double h = g.h(), cell = g.cell_volume();
  const auto offs = unit_offsets(g);
  std::vector<double> coords(g.size() * n), br(g.size()), wl(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, &coords[i * n]);
    std::span<const double> v(&coords[i * n], n);
    br[i] = std::pow(bracket(v), o.kappa);
    wl[i] = (o.wparams && o.ell != 0.0) ? std::pow(weight_w(v, *o.wparams), 2.0 * o.ell) : 1.0;
  }
  const double cone = o.cone_eps > 0.0 ? o.cone_eps / std::sqrt(1.0 - o.cone_eps * o.cone_eps) : 0.0;
  std::vector<double> rows(g.size(), 0.0);
  std::size_t nb = 0;
  const int reach = static_cast<int>(std::ceil(1.0 / h));
  int mi[3], mj[3];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.multi_index(i, mi);
    bool edge = false;
    for (int d = 0; d < n; ++d)
      if (mi[d] < reach || mi[d] >= N - reach) edge = true;
    if (edge) ++nb;
    const double* vi = &coords[i * n];
    double v2i = 0.0;
    for (int d = 0; d < n; ++d) v2i += vi[d] * vi[d];
    double acc = 0.0;
    for (const auto& off : offs) {
      bool inside = true;
      for (int d = 0; d < n; ++d) {
        mj[d] = mi[d] + off.o[d];
        if (mj[d] < 0 || mj[d] >= N) inside = false;
      }
      if (!inside) continue;
      const std::size_t j = g.index(std::span<const int>(mj, n));
      const double* vj = &coords[j * n];
      double v2j = 0.0;
      for (int d = 0; d < n; ++d) v2j += vj[d] * vj[d];
      const double lift = 0.5 * (v2i - v2j);
      double dist = off.r;
      if (o.aniso) {
        dist = std::sqrt(off.r * off.r + lift * lift);
        if (dist > 1.0) continue;
      }
      if (cone > 0.0 && std::abs(lift) > o.cone_eps * dist) continue;
      const double df = f.values[j] - f.values[i];
      acc += br[j] * df * df / std::pow(dist, n + 2.0 * o.s);
    }
    acc *= br[i] * cell;
    // diagonal cell: local quadratic model with a centered gradient
    double grad[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
      std::copy(mi, mi + n, mj);
      mj[d] = std::min(mi[d] + 1, N - 1);
      const int up = mj[d];
      const double fp = f.values[g.index(std::span<const int>(mj, n))];
      mj[d] = std::max(mi[d] - 1, 0);
      const int lo = mj[d];
      const double fm = f.values[g.index(std::span<const int>(mj, n))];
      grad[d] = (fp - fm) / ((up - lo) * h);
    }
    const double zero[3] = {0, 0, 0};
    acc += br[i] * br[i] * self_cell(grad, o.aniso ? vi : zero, n, h, o.s, o.aniso, o.cone_eps > 0.0 ? cone : 0.0);
    rows[i] = acc * wl[i];
  }
  if (boundary) *boundary = nb;
  return pairwise_sum(rows) * cell;
}

}  // namespace

double l2_weighted(const ScalarField& f, double ell_power) {
  const VelocityGrid& g = f.grid;
  std::vector<double> t(g.size());
  std::vector<double> v(g.n());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, v.data());
    t[i] = std::pow(bracket(v), ell_power) * f.values[i] * f.values[i];
  }
  return pairwise_sum(t) * g.cell_volume();
}

NormParts nsg_parts(const ScalarField& f, const NormConfig& cfg) {
  cfg.validate();
  const KernelParams& p = cfg.params;
  if (p.n != f.grid.n()) throw DomainError("dimension mismatch");
  NormParts r;
  const VelocityGrid& g = f.grid;
  std::vector<double> t(g.size());
  std::vector<double> v(g.n());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, v.data());
    const double wl = cfg.ell != 0.0 ? std::pow(weight_w(v, p), 2.0 * cfg.ell) : 1.0;
    t[i] = std::pow(bracket(v), p.gamma + 2.0 * p.s) * wl * f.values[i] * f.values[i];
  }
  r.l2_part = pairwise_sum(t) * g.cell_volume();
  SemiOptions o;
  o.s = p.s;
  o.aniso = true;
  o.kappa = 0.5 * (p.gamma + 2.0 * p.s + 1.0);
  o.wparams = &p;
  o.ell = cfg.ell;
  r.semi_part = semi_double_sum(f, o, &r.boundary_cells);
  r.total = r.l2_part + r.semi_part;
  r.norm = std::sqrt(r.total);
  return r;
}

double nsg_norm(const ScalarField& f, const NormConfig& cfg) { return nsg_parts(f, cfg).norm; }

double isotropic_hs(const ScalarField& f, double s, double ell_power) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  SemiOptions o;
  o.s = s;
  o.aniso = false;
  o.kappa = 0.5 * ell_power;
  const double semi = semi_double_sum(f, o, nullptr);
  return std::sqrt(l2_weighted(f, ell_power) + semi);
}

double paraboloid_seminorm_sq(const ScalarField& f, double s, double rho) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  SemiOptions o;
  o.s = s;
  o.aniso = true;
  o.kappa = 0.5 * (rho + 1.0);
  return semi_double_sum(f, o, nullptr);
}

double cone_seminorm_N0(const ScalarField& f, const NormConfig& cfg) {
  cfg.validate();
  const KernelParams& p = cfg.params;
  SemiOptions o;
  o.s = p.s;
  o.aniso = true;
  o.kappa = 0.5 * (p.gamma + 2.0 * p.s + 1.0);
  o.wparams = &p;
  o.ell = cfg.ell;
  o.cone_eps = cfg.cone_eps;
  return std::sqrt(semi_double_sum(f, o, nullptr));
}

std::vector<SandwichRow> sandwich_ratios(const std::vector<std::pair<std::string, ScalarField>>& suite,
                                         const KernelParams& p) {
  std::vector<SandwichRow> rows;
  const NormConfig cfg = NormConfig::from(p);
  for (const auto& [label, f] : suite) {
    SandwichRow r;
    r.label = label;
    double mx = 0.0;
    for (double x : f.values) mx = std::max(mx, std::abs(x));
    if (mx == 0.0) {
      r.skipped = true;
      rows.push_back(r);
      continue;
    }
    r.hs_gamma = isotropic_hs(f, p.s, p.gamma);
    r.nsg = nsg_norm(f, cfg);
    r.hs_gamma_2s = isotropic_hs(f, p.s, p.gamma + 2.0 * p.s);
    r.lower_ratio = r.hs_gamma / r.nsg;
    r.upper_ratio = r.nsg / r.hs_gamma_2s;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ncb
