#include "ncb/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "engine.hpp"
#include "ncb/error.hpp"
#include "ncb/geometry.hpp"

namespace ncb {

using detail::AngularSample;
using detail::Lattice;
using detail::StencilNode;

namespace {

constexpr double kPi = std::numbers::pi;

void require_rule(const KernelParams& p, const SphereRule& rule, const VelocityGrid& g) {
  p.validate();
  if (p.n != g.n() || rule.n != g.n()) throw DomainError("kernel, rule and grid dimensions differ");
  if (g.n() != 2 && g.n() != 3) throw DomainError("collision operators implemented for n = 2, 3");
}

void same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) throw DomainError("fields live on different grids");
}

struct GridData {
  std::vector<double> M, coords;
  explicit GridData(const VelocityGrid& g) : M(g.size()), coords(g.size() * g.n()) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.node(i, &coords[i * g.n()]);
      M[i] = sqrt_maxwellian(std::span<const double>(&coords[i * g.n()], g.n()));
    }
  }
};

std::vector<double> reduced(const ScalarField& f, const std::vector<double>& weight) {
  std::vector<double> r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f.values[i] / weight[i];
  return r;
}

detail::SigmaBuilder sigma_builder(const Lattice& L, const KernelParams& p, const SphereRule& rule,
                                   const std::vector<AngularSample>& samples, double cell) {
  return {L, p, rule, samples, cell};
}

double wpow(const double* x, int n, const KernelParams& p, int ell2) {
  if (ell2 == 0) return 1.0;
  return std::pow(weight_w(std::span<const double>(x, n), p), ell2);
}

template <int D>
ScalarField gamma_impl(const ScalarField& g, const ScalarField& h, const KernelParams& p,
                       const SphereRule& rule, const std::vector<double>& star_w) {
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto G = reduced(g, gd.M), H = reduced(h, gd.M);
  const auto Gp = L.padded(G), Hp = L.padded(H);
  const auto samples = detail::sigma_samples(rule, p);
  std::vector<double> acc(grid.size(), 0.0);
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  const double hp = detail::interp_fwd<D>(&Hp[L.pad[i] + s.off], L.stride, s);
                  const double gs = detail::interp_rev<D>(&Gp[L.pad[j] - s.off], L.stride, s);
                  acc[i] += s.W * star_w[j] * (gs * hp - G[j] * H[i]);
                });
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = gd.M[i] * acc[i];
  return out;
}

// mode: 0 = L, 1 = N, 2 = K
template <int D>
ScalarField linear_impl(const ScalarField& g, const KernelParams& p, const SphereRule& rule, int mode) {
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto G = reduced(g, gd.M);
  const auto Gp = L.padded(G);
  std::vector<double> M2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) M2[i] = gd.M[i] * gd.M[i];
  const auto samples = detail::sigma_samples(rule, p);
  std::vector<double> acc(grid.size(), 0.0);
  const double cn = mode == 2 ? 0.0 : 1.0, ck = mode == 1 ? 0.0 : 1.0;
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  double t = 0.0;
                  if (cn != 0.0) t += G[i] - detail::interp_fwd<D>(&Gp[L.pad[i] + s.off], L.stride, s);
                  if (ck != 0.0) t += G[j] - detail::interp_rev<D>(&Gp[L.pad[j] - s.off], L.stride, s);
                  acc[i] += s.W * M2[j] * t;
                });
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = gd.M[i] * acc[i];
  return out;
}

template <int D>
ScalarField q_impl(const ScalarField& Gf, const ScalarField& Ff, const KernelParams& p, const SphereRule& rule) {
  const VelocityGrid& grid = Gf.grid;
  GridData gd(grid);
  Lattice L(grid);
  std::vector<double> mu(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) mu[i] = gd.M[i] * gd.M[i];
  const auto G = reduced(Gf, mu), F = reduced(Ff, mu);
  const auto Gp = L.padded(G), Fp = L.padded(F);
  const auto samples = detail::sigma_samples(rule, p);
  std::vector<double> acc(grid.size(), 0.0);
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  const double fp = detail::interp_fwd<D>(&Fp[L.pad[i] + s.off], L.stride, s);
                  const double gs = detail::interp_rev<D>(&Gp[L.pad[j] - s.off], L.stride, s);
                  acc[i] += s.W * mu[j] * (gs * fp - G[j] * F[i]);
                });
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = mu[i] * acc[i];
  return out;
}

template <int D>
ScalarField nu_impl(const VelocityGrid& grid, const KernelParams& p, const SphereRule& rule) {
  GridData gd(grid);
  Lattice L(grid);
  const auto samples = detail::sigma_samples(rule, p);
  const double norm = std::pow(2.0 * kPi, -0.25 * D);
  std::vector<double> acc(grid.size(), 0.0);
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  const double* x = &gd.coords[j * D];
                  double r2 = 0.0;
                  for (int d = 0; d < D; ++d) {
                    const double y = x[d] - s.delta[d];
                    r2 += y * y;
                  }
                  acc[i] += s.W * gd.M[j] * (gd.M[j] - norm * std::exp(-0.25 * r2));
                });
  return ScalarField(grid, std::move(acc));
}

template <int D>
double seminorm_impl(const ScalarField& g, int ell, const KernelParams& p, const SphereRule& rule) {
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto G = reduced(g, gd.M);
  const auto Gp = L.padded(G);
  const auto samples = detail::sigma_samples(rule, p);
  const double norm = std::pow(2.0 * kPi, -0.25 * D);
  std::vector<double> acc(grid.size(), 0.0);
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  const double* x = &gd.coords[i * D];
                  double r2 = 0.0;
                  for (int d = 0; d < D; ++d) {
                    const double y = x[d] + s.delta[d];
                    r2 += y * y;
                  }
                  const double Mp = norm * std::exp(-0.25 * r2);
                  const double gp = Mp * detail::interp_fwd<D>(&Gp[L.pad[i] + s.off], L.stride, s);
                  const double diff = gp - g.values[i];
                  // M'_* = M M_* / M' by energy conservation
                  acc[i] += s.W * diff * diff * gd.M[j] * gd.M[j] * gd.M[i] / Mp;
                });
  std::vector<double> t(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) t[i] = acc[i] * wpow(&gd.coords[i * D], D, p, ell);
  return 0.5 * pairwise_sum(t) * grid.cell_volume();
}

template <int D>
double entropy_impl(const ScalarField& F, const KernelParams& p, const SphereRule& rule) {
  const VelocityGrid& grid = F.grid;
  GridData gd(grid);
  Lattice L(grid);
  std::vector<double> phi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) phi[i] = std::log(F.values[i] / (gd.M[i] * gd.M[i]));
  const auto Pp = L.padded(phi);
  const auto samples = detail::sigma_samples(rule, p);
  std::vector<double> acc(grid.size(), 0.0);
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  const double pp = detail::interp_fwd<D>(&Pp[L.pad[i] + s.off], L.stride, s);
                  const double ps = detail::interp_rev<D>(&Pp[L.pad[j] - s.off], L.stride, s);
                  const double x = pp + ps - phi[i] - phi[j];
                  acc[i] += s.W * F.values[j] * std::expm1(x) * x;
                });
  std::vector<double> t(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) t[i] = acc[i] * F.values[i];
  return 0.25 * pairwise_sum(t) * grid.cell_volume();
}

constexpr int kBinOffset = 40;
constexpr int kBins = 100;

double tail_from_bins(const std::vector<double>& bins, bool& warn) {
  int last = -1;
  for (int b = kBins - 1; b >= 0; --b)
    if (bins[b] != 0.0) {
      last = b;
      break;
    }
  warn = false;
  if (last < 1) return 0.0;
  const double a = std::abs(bins[last - 1]), b = std::abs(bins[last]);
  if (a == 0.0) return b;
  const double rho = b / a;
  if (rho >= 1.0) {
    warn = true;
    return b * 10.0;
  }
  return b * rho / (1.0 - rho);
}

template <int D>
TrilinearReport sigma_impl(const ScalarField& g, const ScalarField& h, const ScalarField& f, int ell,
                           const KernelParams& p, const SphereRule& rule) {
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto F = reduced(f, gd.M);
  const auto Fp = L.padded(F);
  const auto samples = detail::sigma_samples(rule, p);
  std::vector<double> wi(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) wi[i] = wpow(&gd.coords[i * D], D, p, 2 * ell);
  std::vector<double> bins(kBins, 0.0);
  std::vector<double> gm(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) gm[j] = g.values[j] * gd.M[j];
  double node_acc = 0.0;
  const StencilNode* current = nullptr;
  auto flush = [&]() {
    if (current) {
      const int b = std::clamp(current->scale + kBinOffset, 0, kBins - 1);
      bins[b] += node_acc;
    }
    node_acc = 0.0;
  };
  detail::sweep(L, sigma_builder(L, p, rule, samples, grid.cell_volume()),
                [&](long i, long j, const StencilNode& s) {
                  if (&s != current) {
                    flush();
                    current = &s;
                  }
                  const double hi = h.values[i];
                  if (hi == 0.0 || gm[j] == 0.0) return;
                  double wp = 1.0;
                  if (ell != 0) {
                    double x[3];
                    for (int d = 0; d < D; ++d) x[d] = gd.coords[i * D + d] + s.delta[d];
                    wp = wpow(x, D, p, 2 * ell);
                  }
                  const double fp = detail::interp_fwd<D>(&Fp[L.pad[i] + s.off], L.stride, s);
                  node_acc += s.W * gm[j] * hi * (gd.M[i] * fp * wp - f.values[i] * wi[i]);
                });
  flush();
  TrilinearReport rep;
  rep.representation = "sigma";
  rep.resolution = std::to_string(grid.points_per_axis()) + "^" + std::to_string(D) + " nodes, r_cut " +
                   std::to_string(grid.r_cut()) + ", " + std::to_string(rule.n_theta) + " theta nodes";
  const double cell = grid.cell_volume();
  std::vector<double> scaled(kBins);
  for (int b = 0; b < kBins; ++b) {
    scaled[b] = bins[b] * cell;
    if (bins[b] != 0.0) rep.per_scale.emplace_back(b - kBinOffset, scaled[b]);
  }
  rep.value = pairwise_sum(scaled);
  bool warn = false;
  rep.tail_estimate = tail_from_bins(scaled, warn);
  rep.error_estimate = rep.tail_estimate;
  rep.accuracy_warning = warn || rep.tail_estimate > 0.01 * std::abs(rep.value);
  return rep;
}

// Dual samples for |v' - v_*| = rho: delta = rho tan(theta/2) e, weight
// theta^{-1-2s} cos^{-n-gamma}(theta/2) dtheta, to be multiplied by Phi(rho); aux = cos^{n+gamma}(theta/2).
std::vector<AngularSample> dual_samples(const KernelParams& p, const SphereRule& rule, const RegularizedKernel& reg,
                                        const std::vector<double>& low_t, const std::vector<double>& low_w) {
  std::vector<AngularSample> out;
  const int n = p.n;
  for (std::size_t i = 0; i < rule.theta.size(); ++i) {
    const double t = rule.theta[i];
    const double c = std::cos(0.5 * t);
    const double w = std::pow(t, -1.0 - 2.0 * p.s) * std::pow(c, -n - p.gamma) * rule.theta_weight[i];
    out.push_back({t, 0.0, std::tan(0.5 * t), w, std::pow(c, n + p.gamma)});
  }
  for (std::size_t i = 0; i < low_t.size(); ++i) {
    const double t = low_t[i];
    const double c = std::cos(0.5 * t);
    const double w = -reg.c * std::pow(2.0, n - 2) * std::pow(std::sin(0.5 * t), n - 2) * std::pow(c, -2.0 - p.gamma) *
                     low_w[i];
    out.push_back({t, 0.0, std::tan(0.5 * t), w, std::pow(c, n + p.gamma)});
  }
  return out;
}

}  // namespace

double cell_average_phi(const VelocityGrid& grid, const KernelParams& p) {
  if (p.gamma == 0.0) return p.c_phi;
  // int over [-a,a]^n of |u|^gamma = n! 2^n int_{simplex} (a sqrt(1+|q|^2))^{gamma+n} / (gamma+n) (1+|q|^2)^{-n/2} dq
  const double a = 0.5 * grid.h();
  const int n = grid.n();
  const double ex = p.gamma + n;
  auto [x, w] = gauss_legendre(24, 0.0, 1.0);
  double acc = 0.0;
  if (n == 2) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r2 = 1.0 + x[i] * x[i];
      acc += w[i] * std::pow(a * std::sqrt(r2), ex) / ex / r2;
    }
    acc *= 8.0;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double q1 = x[i], q2 = x[j] * q1;  // 0 <= q2 <= q1 <= 1
        const double r2 = 1.0 + q1 * q1 + q2 * q2;
        acc += w[i] * w[j] * q1 * std::pow(a * std::sqrt(r2), ex) / ex * std::pow(r2, -1.5);
      }
    acc *= 48.0;
  }
  return p.c_phi * acc / grid.cell_volume();
}

namespace {

template <int D>
TrilinearReport dual_impl(const ScalarField& g, const ScalarField& h, const ScalarField& f, int ell,
                          const KernelParams& p, const SphereRule& rule) {
  if (p.gamma <= -p.n) throw DomainError("dual representation requires gamma > -n");
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto H = reduced(h, gd.M);
  const auto Hp = L.padded(H);
  const RegularizedKernel reg = regularized_b(p, rule.theta_min);
  auto [low_t, low_w] = gauss_legendre(8, 0.0, rule.theta_min);
  std::vector<double> gm(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) gm[j] = g.values[j] * gd.M[j];
  const auto samples = dual_samples(p, rule, reg, low_t, low_w);
  const double cell = grid.cell_volume();
  std::vector<double> acc(grid.size(), 0.0), acc_low(grid.size(), 0.0);
  const std::size_t n_main = rule.theta.size() * (D == 2 ? 2 : rule.omega_angle.size());
  std::size_t node_index = 0;
  const StencilNode* current = nullptr;
  auto builder = [&](const int* du, double, std::vector<StencilNode>& nodes) {
    const double phi = detail::phi_cell(L, du, p);
    if (phi == 0.0) return false;
    detail::build_nodes(L, du, samples, rule, cell * phi, nodes);
    current = nullptr;
    node_index = 0;
    return true;
  };
  detail::sweep(L, builder, [&](long i, long j, const StencilNode& s) {
    if (&s != current) {
      if (current) ++node_index;
      current = &s;
    }
    if (gm[j] == 0.0 || f.values[i] == 0.0) return;
    // M(v) M(v'_*) / (M(v') M(v_*)) with v = v' + delta, v'_* = v_* + delta
    double e = 0.0;
    for (int d = 0; d < D; ++d)
      e += (gd.coords[i * D + d] + gd.coords[j * D + d] + s.delta[d]) * s.delta[d];
    const double hv = detail::interp_fwd<D>(&Hp[L.pad[i] + s.off], L.stride, s) * std::exp(-0.5 * e);
    const double t = s.W * gm[j] * (hv - H[i] * s.aux);
    if (node_index < n_main) acc[i] += t;
    else acc_low[i] += t;
  });
  // diagonal cell v' = v_*: delta = 0, integrand H_i (1 - cos^{n+gamma}) with the cell average of Phi
  double diag_main = 0.0, diag_low = 0.0;
  const double omega_total = D == 2 ? 2.0 : 2.0 * kPi;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double t = samples[k].weight * (1.0 - samples[k].aux) * omega_total;
    if (k < rule.theta.size()) diag_main += t;
    else diag_low += t;
  }
  const double phibar = cell_average_phi(grid, p) * cell;
  std::vector<double> t(grid.size()), tl(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double fac = f.values[i] * gd.M[i] * wpow(&gd.coords[i * D], D, p, 2 * ell) * cell;
    const double self = gm[i] * H[i] * phibar;
    t[i] = (acc[i] + self * diag_main) * fac;
    tl[i] = (acc_low[i] + self * diag_low) * fac;
  }
  TrilinearReport rep;
  rep.representation = "dual";
  rep.resolution = std::to_string(grid.points_per_axis()) + "^" + std::to_string(D) + " nodes, r_cut " +
                   std::to_string(grid.r_cut()) + ", " + std::to_string(rule.n_theta) + " theta nodes";
  const double main = pairwise_sum(t), low = pairwise_sum(tl);
  rep.value = main + low;
  rep.tail_estimate = std::abs(low);
  rep.error_estimate = std::abs(low);
  rep.accuracy_warning = rep.error_estimate > 0.01 * std::abs(rep.value);
  return rep;
}

template <int D>
TPieces pieces_impl(int k, int ell, const ScalarField& g, const ScalarField& h, const ScalarField& f,
                    const KernelParams& p, const SphereRule& rule, int nodes_per_piece) {
  const VelocityGrid& grid = g.grid;
  GridData gd(grid);
  Lattice L(grid);
  const auto F = reduced(f, gd.M);
  const auto Fp = L.padded(F);
  const double lo = std::ldexp(1.0, -k - 1), hi = std::ldexp(1.0, -k);
  const double cell = grid.cell_volume();
  std::vector<double> wi(grid.size()), gm(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    wi[i] = wpow(&gd.coords[i * D], D, p, 2 * ell);
    gm[i] = g.values[i] * gd.M[i];
  }
  auto [xg, wg] = gauss_legendre(nodes_per_piece, 0.0, 1.0);
  std::vector<AngularSample> samples;
  // sigma form: |v - v'| = r sin(theta/2)
  std::vector<double> plus(grid.size(), 0.0), minus(grid.size(), 0.0), star(grid.size(), 0.0);
  auto sigma_build = [&](const int* du, double r, std::vector<StencilNode>& nodes) {
    const double t0 = 2.0 * std::asin(std::min(1.0, lo / r));
    const double t1 = std::min(0.5 * kPi, 2.0 * std::asin(std::min(1.0, hi / r)));
    if (!(t1 > t0)) return false;
    const double phi = kinetic_phi(r, p);
    samples.clear();
    const double a = std::log(t0), b = std::log(t1);
    for (std::size_t m = 0; m < xg.size(); ++m) {
      const double t = std::exp(a + (b - a) * xg[m]);
      const double sh = std::sin(0.5 * t);
      samples.push_back({t, sh * sh, 0.5 * std::sin(t), std::pow(t, -2.0 * p.s) * (b - a) * wg[m], 0.0});
    }
    detail::build_nodes(L, du, samples, rule, cell * phi, nodes);
    return true;
  };
  detail::sweep(L, sigma_build, [&](long i, long j, const StencilNode& s) {
    const double hv = h.values[i];
    if (hv == 0.0 || gm[j] == 0.0) return;
    double wp = 1.0;
    if (ell != 0) {
      double x[3];
      for (int d = 0; d < D; ++d) x[d] = gd.coords[i * D + d] + s.delta[d];
      wp = wpow(x, D, p, 2 * ell);
    }
    const double fp = detail::interp_fwd<D>(&Fp[L.pad[i] + s.off], L.stride, s);
    plus[i] += s.W * gm[j] * hv * gd.M[i] * fp * wp;
    minus[i] += s.W * gm[j] * hv * f.values[i] * wi[i];
  });
  // dual form for T_*: |v - v'| = rho tan(theta/2)
  auto dual_build = [&](const int* du, double r, std::vector<StencilNode>& nodes) {
    const double t0 = 2.0 * std::atan(lo / r);
    const double t1 = std::min(0.5 * kPi, 2.0 * std::atan(hi / r));
    if (!(t1 > t0)) return false;
    samples.clear();
    const double a = std::log(t0), b = std::log(t1);
    for (std::size_t m = 0; m < xg.size(); ++m) {
      const double t = std::exp(a + (b - a) * xg[m]);
      const double c = std::cos(0.5 * t);
      const double w = kinetic_phi(r / c, p) * std::pow(t, -2.0 * p.s) * std::pow(c, -p.n) * (b - a) * wg[m];
      samples.push_back({t, 0.0, std::tan(0.5 * t), w, 0.0});
    }
    detail::build_nodes(L, du, samples, rule, cell, nodes);
    return true;
  };
  detail::sweep(L, dual_build, [&](long i, long j, const StencilNode& s) {
    if (gm[j] == 0.0) return;
    star[i] += s.W * gm[j] * f.values[i] * wi[i] * h.values[i];
  });
  TPieces out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    plus[i] *= cell;
    minus[i] *= cell;
    star[i] *= cell;
  }
  out.plus = pairwise_sum(plus);
  out.minus = pairwise_sum(minus);
  out.star = pairwise_sum(star);
  return out;
}

}  // namespace

ScalarField q_apply(const ScalarField& G, const ScalarField& F, const KernelParams& p, const SphereRule& rule,
                    Compensation c) {
  same_grid(G, F);
  require_rule(p, rule, G.grid);
  if (c == Compensation::none && p.s >= 0.5)
    throw AccuracyError("s >= 1/2 requires odd-pairing compensation");
  return G.grid.n() == 2 ? q_impl<2>(G, F, p, rule) : q_impl<3>(G, F, p, rule);
}

ScalarField gamma_apply(const ScalarField& g, const ScalarField& h, const KernelParams& p, const SphereRule& rule,
                        std::span<const int> beta) {
  same_grid(g, h);
  require_rule(p, rule, g.grid);
  const VelocityGrid& grid = g.grid;
  std::vector<double> sw(grid.size());
  std::vector<double> v(grid.n());
  int order = 0;
  for (int b : beta) order += b;
  if (order > 1) throw DomainError("gamma_apply supports |beta| <= 1");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    grid.node(j, v.data());
    const double M = sqrt_maxwellian(v);
    sw[j] = M * (beta.empty() ? M : m_beta(v, beta));
  }
  return grid.n() == 2 ? gamma_impl<2>(g, h, p, rule, sw) : gamma_impl<3>(g, h, p, rule, sw);
}

ScalarField L_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? linear_impl<2>(g, p, rule, 0) : linear_impl<3>(g, p, rule, 0);
}

ScalarField n_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? linear_impl<2>(g, p, rule, 1) : linear_impl<3>(g, p, rule, 1);
}

ScalarField k_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? linear_impl<2>(g, p, rule, 2) : linear_impl<3>(g, p, rule, 2);
}

ScalarField nu_tilde_field(const VelocityGrid& grid, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, grid);
  return grid.n() == 2 ? nu_impl<2>(grid, p, rule) : nu_impl<3>(grid, p, rule);
}

TrilinearReport trilinear_sigma(const ScalarField& g, const ScalarField& h, const ScalarField& f, int ell,
                                const KernelParams& p, const SphereRule& rule) {
  same_grid(g, h);
  same_grid(g, f);
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? sigma_impl<2>(g, h, f, ell, p, rule) : sigma_impl<3>(g, h, f, ell, p, rule);
}

TrilinearReport trilinear_dual(const ScalarField& g, const ScalarField& h, const ScalarField& f, int ell,
                               const KernelParams& p, const SphereRule& rule) {
  same_grid(g, h);
  same_grid(g, f);
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? dual_impl<2>(g, h, f, ell, p, rule) : dual_impl<3>(g, h, f, ell, p, rule);
}

double RegularizedKernel::value_theta(double theta) const {
  if (theta < theta_min) return -c;
  return angular_b_theta(theta, params);
}

double RegularizedKernel::moment() const {
  // Gauss in log theta above theta_min, plain Gauss below.
  const int n = params.n;
  double upper = 0.0;
  const double a = std::log(theta_min), b = std::log(0.5 * kPi);
  const int panels = 40;
  for (int q = 0; q < panels; ++q) {
    auto [x, w] = gauss_legendre(20, a + (b - a) * q / panels, a + (b - a) * (q + 1) / panels);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = std::exp(x[i]);
      upper += w[i] * t * value_theta(t) * std::pow(std::sin(t), n - 2);
    }
  }
  double lower = 0.0;
  auto [x, w] = gauss_legendre(20, 0.0, theta_min);
  for (std::size_t i = 0; i < x.size(); ++i) lower += w[i] * value_theta(x[i]) * std::pow(std::sin(x[i]), n - 2);
  return upper + lower;
}

RegularizedKernel regularized_b(const KernelParams& p, double theta_min) {
  if (!(theta_min > 0.0 && theta_min < 0.5 * kPi)) throw DomainError("theta_min must lie in (0, pi/2)");
  RegularizedKernel r;
  r.params = p;
  r.theta_min = theta_min;
  r.eps = 2.0 * std::pow(std::sin(0.5 * theta_min), 2);
  const double num = (std::pow(theta_min, -2.0 * p.s) - std::pow(0.5 * kPi, -2.0 * p.s)) / (2.0 * p.s);
  double den = 0.0;
  if (p.n == 2) den = theta_min;
  else if (p.n == 3) den = r.eps;
  else {
    auto [x, w] = gauss_legendre(40, 0.0, theta_min);
    for (std::size_t i = 0; i < x.size(); ++i) den += w[i] * std::pow(std::sin(x[i]), p.n - 2);
  }
  r.c = num / den;
  return r;
}

DyadicWindow dyadic_window(const VelocityGrid& grid, int depth) {
  DyadicWindow w;
  w.k_min = static_cast<int>(std::floor(-std::log2(2.0 * grid.r_cut()) + 1e-12));
  w.k_max = static_cast<int>(std::floor(-std::log2(2.0 * grid.h()) + depth + 1e-12));
  return w;
}

TPieces t_pieces(int k, int ell, const ScalarField& g, const ScalarField& h, const ScalarField& f,
                 const KernelParams& p, const SphereRule& rule, int depth, int nodes) {
  same_grid(g, h);
  same_grid(g, f);
  require_rule(p, rule, g.grid);
  const DyadicWindow w = dyadic_window(g.grid, depth);
  if (k < w.k_min || k > w.k_max)
    throw AccuracyError("dyadic index " + std::to_string(k) + " outside resolvable window [" +
                        std::to_string(w.k_min) + ", " + std::to_string(w.k_max) + "]");
  return g.grid.n() == 2 ? pieces_impl<2>(k, ell, g, h, f, p, rule, nodes)
                         : pieces_impl<3>(k, ell, g, h, f, p, rule, nodes);
}

double carleman_K(std::span<const double> v, std::span<const double> v_prime, const KernelParams& p,
                  const CarlemanOptions& opt) {
  p.validate();
  const int n = static_cast<int>(v.size());
  if (n != p.n || static_cast<int>(v_prime.size()) != n) throw DomainError("dimension mismatch");
  if (n != 2 && n != 3) throw DomainError("carleman_K implemented for n = 2, 3");
  std::vector<double> a(n);
  for (int d = 0; d < n; ++d) a[d] = v_prime[d] - v[d];
  const double ra = std::sqrt(norm2(a));
  if (ra == 0.0) throw DomainError("carleman_K is singular at v = v'");
  auto basis = orthonormal_complement(a);
  std::vector<std::array<double, 3>> dirs;
  std::vector<double> dw;
  if (n == 2) {
    dirs = {{basis[0][0], basis[0][1], 0.0}, {-basis[0][0], -basis[0][1], 0.0}};
    dw = {1.0, 1.0};
  } else {
    for (int j = 0; j < opt.directions; ++j) {
      const double ang = 2.0 * kPi * (j + 0.5) / opt.directions;
      std::array<double, 3> e{};
      for (int d = 0; d < 3; ++d) e[d] = std::cos(ang) * basis[0][d] + std::sin(ang) * basis[1][d];
      dirs.push_back(e);
      dw.push_back(2.0 * kPi / opt.directions);
    }
  }
  const double T = ra + 14.0 + std::sqrt(norm2(v)) + std::sqrt(norm2(v_prime));
  const double norm = std::pow(2.0 * kPi, -0.5 * n);  // M M = mu-type normalization
  double total = 0.0;
  std::vector<double> x1(n), x2(n);
  for (int q = 0; q < opt.panels; ++q) {
    auto [tn, tw] = gauss_legendre(opt.nodes_per_panel, ra + (T - ra) * q / opt.panels,
                                   ra + (T - ra) * (q + 1) / opt.panels);
    for (std::size_t m = 0; m < tn.size(); ++m) {
      const double t = tn[m];
      const double rr = std::sqrt(ra * ra + t * t);
      const double theta = 2.0 * std::atan(ra / t);
      const double kern = kinetic_phi(rr, p) * angular_b_theta(theta, p) / (ra * std::pow(rr, n - 2)) *
                          std::pow(t, n - 2);
      if (kern == 0.0) continue;
      for (std::size_t j = 0; j < dirs.size(); ++j) {
        double e = 0.0;
        for (int d = 0; d < n; ++d) {
          const double y1 = v[d] + t * dirs[j][d];        // v'_*
          const double y2 = v_prime[d] + t * dirs[j][d];  // v_*
          e += y1 * y1 + y2 * y2;
        }
        total += tw[m] * dw[j] * kern * norm * std::exp(-0.25 * e);
      }
    }
  }
  return std::pow(2.0, n - 1) * total;
}

double b_seminorm(const ScalarField& g, int ell, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, g.grid);
  return g.grid.n() == 2 ? seminorm_impl<2>(g, ell, p, rule) : seminorm_impl<3>(g, ell, p, rule);
}

double carleman_seminorm(const PointFn& g, const KernelParams& p, const CarlemanSeminormOptions& opt) {
  if (p.n != 2) throw DomainError("carleman_seminorm oracle implemented for n = 2");
  const VelocityGrid outer(2, opt.outer_r, opt.outer_points);
  std::vector<double> edges{opt.inner_r};
  for (int k = 1; k < opt.radial_panels; ++k) edges.push_back(edges.back() / 1.5);
  edges.push_back(0.0);
  std::reverse(edges.begin(), edges.end());
  std::vector<double> rn, rw;
  for (std::size_t q = 0; q + 1 < edges.size(); ++q) {
    auto [x, w] = gauss_legendre(opt.radial_nodes, edges[q], edges[q + 1]);
    rn.insert(rn.end(), x.begin(), x.end());
    rw.insert(rw.end(), w.begin(), w.end());
  }
  std::vector<double> terms;
  std::vector<double> v(2), vp(2);
  for (std::size_t i = 0; i < outer.size(); ++i) {
    outer.node(i, v.data());
    const double gv = g(v);
    double acc = 0.0;
    for (std::size_t m = 0; m < rn.size(); ++m) {
      for (int a = 0; a < opt.angles; ++a) {
        const double ang = 2.0 * kPi * (a + 0.5) / opt.angles;
        vp[0] = v[0] + rn[m] * std::cos(ang);
        vp[1] = v[1] + rn[m] * std::sin(ang);
        const double d = g(vp) - gv;
        if (d * d < 1e-30) continue;
        acc += rw[m] * rn[m] * (2.0 * kPi / opt.angles) * d * d * carleman_K(v, vp, p, opt.kernel);
      }
    }
    terms.push_back(acc);
  }
  return 0.5 * pairwise_sum(terms) * outer.cell_volume();
}

EntropyResult entropy(const ScalarField& F, const KernelParams& p, const SphereRule& rule) {
  require_rule(p, rule, F.grid);
  for (double x : F.values)
    if (!(x > 0.0)) throw DomainError("entropy requires F > 0 on the grid");
  EntropyResult r;
  std::vector<double> t(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) t[i] = -F.values[i] * std::log(F.values[i]);
  r.H = pairwise_sum(t) * F.grid.cell_volume();
  r.D = F.grid.n() == 2 ? entropy_impl<2>(F, p, rule) : entropy_impl<3>(F, p, rule);
  return r;
}

}  // namespace ncb
