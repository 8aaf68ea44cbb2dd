#include "ncb/littlewood_paley.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "ncb/error.hpp"
#include "ncb/geometry.hpp"
#include "ncb/kernel_model.hpp"
#include "ncb/norms.hpp"

namespace ncb {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> poly_mul_linear(const std::vector<double>& p, double a, double scale) {
  // p(x) * (1 - a x) * scale
  std::vector<double> out(p.size() + 1, 0.0);
  for (std::size_t m = 0; m < p.size(); ++m) {
    out[m] += p[m] * scale;
    out[m + 1] -= a * p[m] * scale;
  }
  return out;
}

double bump(double x) { return x < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

struct Ray {
  std::vector<double> dir;
  double weight;
};

// Unit directions in R^n with weights summing to the sphere area.
std::vector<Ray> directions(int n, const LPQuadrature& q) {
  std::vector<Ray> out;
  if (n == 2) {
    for (int a = 0; a < q.angular; ++a) {
      const double t = 2.0 * kPi * a / q.angular;
      out.push_back({{std::cos(t), std::sin(t)}, 2.0 * kPi / q.angular});
    }
  } else if (n == 3) {
    auto [x, w] = gauss_legendre(std::max(8, q.angular / 2), -1.0, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double st = std::sqrt(1.0 - x[i] * x[i]);
      for (int a = 0; a < q.angular; ++a) {
        const double t = 2.0 * kPi * a / q.angular;
        out.push_back({{st * std::cos(t), st * std::sin(t), x[i]}, w[i] * 2.0 * kPi / q.angular});
      }
    }
  } else {
    throw DomainError("LP quadrature supports n = 2, 3");
  }
  return out;
}

// Generic polar integral over u of sum_m coef[m] * K_m(w(u)) * extra(u), where
// w(u) = (tau u, <v, tau u> + eps |tau u|^2 / 2) and K_m is D^m phi0 or its derivative.
template <class Extra>
double lifted_integral(const LPBasis& b, const std::vector<double>& coef, std::span<const double> v, double eps,
                       int axis, const LPQuadrature& q, Extra&& extra) {
  const int n = b.n;
  const LiftMaps lm = lift_maps(v);
  const auto rays = directions(n, q);
  auto [gx, gw] = gauss_legendre(q.radial, 0.0, 1.0);
  std::vector<double> u(n);
  double total = 0.0;
  for (std::size_t m = 0; m < coef.size(); ++m) {
    if (coef[m] == 0.0) continue;
    const double rho = std::ldexp(b.R, static_cast<int>(m));
    double acc = 0.0;
    for (const auto& ray : rays) {
      const Vec tw = lm.tau(ray.dir);
      double tn = 0.0;
      for (double x : tw) tn += x * x;
      // first root of |w(t dir)| = rho
      double a = 0.0;
      for (int d = 0; d < n; ++d) a += v[d] * tw[d];
      auto wnorm2 = [&](double t) {
        const double z = t * a + 0.5 * eps * t * t * tn;
        return t * t * tn + z * z;
      };
      double lo = 0.0, tmax = rho / std::sqrt(tn);
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + tmax);
        (wnorm2(mid) < rho * rho ? lo : tmax) = mid;
      }
      double racc = 0.0;
      for (std::size_t k = 0; k < gx.size(); ++k) {
        const double t = tmax * gx[k];
        double w[4] = {0, 0, 0, 0};
        double last = 0.0;
        for (int d = 0; d < n; ++d) {
          w[d] = t * tw[d];
          last += v[d] * w[d];
        }
        last += 0.5 * eps * t * t * tn;
        w[n] = last;
        double r2 = 0.0;
        for (int d = 0; d <= n; ++d) r2 += w[d] * w[d];
        const double r = std::sqrt(r2);
        if (r >= rho) continue;
        double val;
        if (axis < 0) {
          val = b.phi0(r / rho);
        } else {
          val = r > 0.0 ? b.phi0_prime(r / rho) / rho * w[axis] / r : 0.0;
        }
        if (val == 0.0) continue;
        for (int d = 0; d < n; ++d) u[d] = t * ray.dir[d];
        racc += gw[k] * std::pow(t, n - 1) * val * extra(u, t);
      }
      acc += ray.weight * tmax * racc;
    }
    total += coef[m] * acc;
  }
  return total;
}

}  // namespace

double LPBasis::phi0(double x) const { return c0 * bump(x); }

double LPBasis::phi0_prime(double x) const {
  if (x >= 1.0) return 0.0;
  const double d = 1.0 - x * x;
  return c0 * bump(x) * (-2.0 * x / (d * d));
}

double LPBasis::phi(double r) const {
  double s = 0.0;
  for (std::size_t m = 0; m < phi_coef.size(); ++m) s += phi_coef[m] * phi0(r / std::ldexp(R, static_cast<int>(m)));
  return s;
}

double LPBasis::psi(double r) const {
  double s = 0.0;
  for (std::size_t m = 0; m < psi_coef.size(); ++m) s += psi_coef[m] * phi0(r / std::ldexp(R, static_cast<int>(m)));
  return s;
}

double LPBasis::support() const { return std::ldexp(R, 2 * M); }

LPBasis build_basis(int M, double R, int n) {
  if (M < 2) throw ConfigError("LP cancellation order M must be at least 2");
  if (!(R > 0.0) || std::ldexp(R, 2 * M) > 1.0 + 1e-15)
    throw ConfigError("LP support radius requires 0 < 2^{2M} R <= 1, got R = " + std::to_string(R));
  if (n != 2 && n != 3) throw ConfigError("LP basis supports n = 2, 3");
  LPBasis b;
  b.n = n;
  b.M = M;
  b.R = R;
  // int_{R^n} phi0(|u|/R) du = 1 with phi0 argument scaled to the unit ball
  auto [x, w] = gauss_legendre(400, 0.0, 1.0);
  double I = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) I += w[k] * bump(x[k]) * std::pow(x[k], n - 1);
  const double area = n == 2 ? 2.0 * kPi : 4.0 * kPi;
  b.c0 = 1.0 / (area * I * std::pow(R, n));
  std::vector<double> p{1.0};
  for (int k = -M; k <= M; ++k) {
    if (k == 0) continue;
    p = poly_mul_linear(p, std::ldexp(1.0, k - n), 1.0 / (1.0 - std::ldexp(1.0, k)));
  }
  b.phi_coef = p;
  b.psi_coef = poly_mul_linear(p, std::ldexp(1.0, -n), 1.0);
  return b;
}

double hyperplane_moment(const LPBasis& b, bool use_psi, std::span<const double> v, std::span<const int> exps,
                         int axis, const LPQuadrature& q) {
  if (static_cast<int>(v.size()) != b.n) throw DomainError("dimension mismatch");
  if (axis > b.n) throw DomainError("derivative axis out of range");
  const auto& coef = use_psi ? b.psi_coef : b.phi_coef;
  return lifted_integral(b, coef, v, 0.0, axis, q, [&](const std::vector<double>& u, double) {
    double p = 1.0;
    for (std::size_t d = 0; d < exps.size() && d < u.size(); ++d) p *= std::pow(u[d], exps[d]);
    return p;
  });
}

double normalization_residual(const LPBasis& b, std::span<const double> v, bool use_phi0, const LPQuadrature& q) {
  const std::vector<double> one{1.0};
  const double I = lifted_integral(b, use_phi0 ? one : b.phi_coef, v, 0.0, -1, q,
                                   [](const std::vector<double>&, double) { return 1.0; });
  return std::abs(I - 1.0);
}

namespace {

double mass(const LPBasis& b, const std::vector<double>& coef, int j, std::span<const double> v,
            const LPQuadrature& q) {
  const double eps = std::ldexp(1.0, -j);
  const LiftMaps lm = lift_maps(v);
  const double bv = bracket(v);
  std::vector<double> vp(v.size());
  return lifted_integral(b, coef, v, eps, -1, q, [&](const std::vector<double>& u, double) {
           const Vec tu = lm.tau(u);
           for (std::size_t d = 0; d < v.size(); ++d) vp[d] = v[d] + eps * tu[d];
           return bracket(vp);
         }) /
         bv;
}

}  // namespace

double p_one(const LPBasis& b, int j, std::span<const double> v, const LPQuadrature& q) {
  if (j < 0) throw DomainError("scale index must be >= 0");
  return mass(b, b.phi_coef, j, v, q);
}

double q_one(const LPBasis& b, int j, std::span<const double> v, const LPQuadrature& q) {
  if (j < 0) throw DomainError("scale index must be >= 0");
  if (j == 0) return p_one(b, 0, v, q);
  return mass(b, b.psi_coef, j, v, q);
}

QjDecay qj_one_decay(const LPBasis& b, const VelocityGrid& grid, int j_lo, int j_hi, const LPQuadrature& q) {
  j_lo = std::max(j_lo, 0);
  j_hi = std::min(j_hi, kMaxResolvableJ);
  if (j_hi - j_lo + 1 < 3) throw DomainError("qj_one_decay needs at least 3 resolvable scales");
  if (grid.n() != b.n) throw DomainError("dimension mismatch");
  // Q_j(1) is radial in v; evaluate once per distinct |v|
  std::map<long long, std::vector<double>> shells;
  std::vector<double> v(grid.n());
  const double rmax = grid.r_cut() - 1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.node(i, v.data());
    const double r = std::sqrt(norm2(v));
    if (r > rmax) continue;
    shells.emplace(std::llround(r * 1e9), std::vector<double>{r});
  }
  QjDecay out;
  std::vector<double> pt(grid.n(), 0.0);
  for (int j = j_lo; j <= j_hi; ++j) {
    double sup = 0.0;
    for (const auto& [key, rv] : shells) {
      pt[0] = rv[0];
      sup = std::max(sup, std::abs(q_one(b, j, pt, q)));
    }
    out.j.push_back(j);
    out.sup.push_back(sup);
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < out.j.size(); ++k) {
    mx += out.j[k];
    my += std::log2(out.sup[k]);
  }
  mx /= out.j.size();
  my /= out.j.size();
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < out.j.size(); ++k) {
    sxy += (out.j[k] - mx) * (std::log2(out.sup[k]) - my);
    sxx += (out.j[k] - mx) * (out.j[k] - mx);
  }
  out.slope = sxy / sxx;
  return out;
}

int LPProjector::max_resolvable(const VelocityGrid& grid) {
  return static_cast<int>(std::floor(std::log2(1.0 / (2.0 * grid.h())) + 1e-12));
}

LPProjector::LPProjector(const VelocityGrid& grid, const LPBasis& b, int j) : grid_(grid), j_(j) {
  if (grid.n() != b.n) throw DomainError("dimension mismatch");
  if (j < 0) throw DomainError("scale index must be >= 0");
  const int jmax = max_resolvable(grid);
  if (j > jmax)
    throw DomainError("scale 2^-" + std::to_string(j) + " not resolvable on this grid (max j = " +
                      std::to_string(jmax) + ")");
  const int n = grid.n(), N = grid.points_per_axis();
  const double h = grid.h(), cell = grid.cell_volume(), scale = std::ldexp(1.0, j);
  const double reach = b.support() / scale;
  const int rc = static_cast<int>(std::ceil(reach / h));
  std::vector<double> coords(grid.size() * n), lift(grid.size()), br(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.node(i, &coords[i * n]);
    std::span<const double> v(&coords[i * n], n);
    lift[i] = 0.5 * norm2(v);
    br[i] = bracket(v);
  }
  std::map<long long, std::vector<double>> mass_cache;
  LPQuadrature q;
  q.radial = 32;
  q.angular = 48;
  const std::size_t K = b.phi_coef.size();
  std::vector<double> rowacc;
  std::vector<std::size_t> rowcol;
  std::vector<std::vector<double>> comp(K);
  int mi[3], mj[3];
  start_.push_back(0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid.multi_index(i, mi);
    rowcol.clear();
    for (auto& c : comp) c.clear();
    const double* vi = &coords[i * n];
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
      lo[d] = std::max(0, mi[d] - rc);
      hi[d] = std::min(N - 1, mi[d] + rc);
    }
    const int zlo = n == 3 ? lo[2] : 0, zhi = n == 3 ? hi[2] : 0;
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = zlo; z <= zhi; ++z) {
          mj[0] = x;
          mj[1] = y;
          mj[2] = z;
          const std::size_t c = grid.index(std::span<const int>(mj, n));
          const double* vc = &coords[c * n];
          double r2 = 0.0;
          for (int d = 0; d < n; ++d) r2 += (vi[d] - vc[d]) * (vi[d] - vc[d]);
          r2 += (lift[i] - lift[c]) * (lift[i] - lift[c]);
          const double r = std::sqrt(r2) * scale;
          if (r >= b.support()) continue;
          rowcol.push_back(c);
          for (std::size_t m = 0; m < K; ++m) {
            const double rho = std::ldexp(b.R, static_cast<int>(m));
            comp[m].push_back(r < rho ? b.phi0(r / rho) * br[c] : 0.0);
          }
        }
    const long long key = std::llround(2.0 * lift[i] * 1e9);
    auto it = mass_cache.find(key);
    if (it == mass_cache.end()) {
      std::vector<double> ms(K);
      std::vector<double> unit(K, 0.0);
      std::vector<double> pt(n, 0.0);
      pt[0] = std::sqrt(2.0 * lift[i]);
      for (std::size_t m = 0; m < K; ++m) {
        std::fill(unit.begin(), unit.end(), 0.0);
        unit[m] = 1.0;
        ms[m] = mass(b, unit, j, pt, q);
      }
      it = mass_cache.emplace(key, ms).first;
    }
    rowacc.assign(rowcol.size(), 0.0);
    for (std::size_t m = 0; m < K; ++m) {
      double raw = 0.0;
      for (double x : comp[m]) raw += x;
      raw *= cell * std::pow(scale, n);
      // self node is always inside the support, so raw > 0
      const double f = b.phi_coef[m] * it->second[m] / raw * cell * std::pow(scale, n);
      for (std::size_t k = 0; k < rowcol.size(); ++k) rowacc[k] += f * comp[m][k];
    }
    for (std::size_t k = 0; k < rowcol.size(); ++k) {
      col_.push_back(rowcol[k]);
      w_.push_back(rowacc[k]);
    }
    start_.push_back(col_.size());
  }
}

ScalarField LPProjector::apply(const ScalarField& f) const {
  if (!(f.grid == grid_)) throw DomainError("field grid differs from projector grid");
  ScalarField out(grid_);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = start_[i]; k < start_[i + 1]; ++k) s += w_[k] * f.values[col_[k]];
    out.values[i] = s;
  }
  return out;
}

ScalarField project_P(int j, const ScalarField& f, const LPBasis& b) { return LPProjector(f.grid, b, j).apply(f); }

ScalarField project_Q(int j, const ScalarField& f, const LPBasis& b) {
  if (j == 0) return project_P(0, f, b);
  return project_P(j, f, b) - project_P(j - 1, f, b);
}

SquareFunction square_function(const ScalarField& f, double rho, double s, const LPBasis& b, int j_max) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("s must lie in (0,1)");
  SquareFunction out;
  ScalarField prev;
  for (int j = 0; j <= j_max; ++j) {
    ScalarField P = project_P(j, f, b);
    ScalarField Q = j == 0 ? P : P - prev;
    out.terms.push_back(std::pow(2.0, 2.0 * s * j) * l2_weighted(Q, rho));
    out.value += out.terms.back();
    prev = std::move(P);
  }
  out.rhs = l2_weighted(f, rho) + paraboloid_seminorm_sq(f, s, rho);
  out.ratio = out.rhs > 0.0 ? out.value / out.rhs : 0.0;
  return out;
}

}  // namespace ncb
