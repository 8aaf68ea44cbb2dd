#include "ncb/kernel_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ncb/error.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

std::string to_string(Regime r) { return r == Regime::hard ? "hard" : "soft"; }

void KernelParams::validate() const {
  if (n < 2) throw DomainError("dimension n must be at least 2");
  if (!(s > 0.0 && s < 1.0)) throw DomainError("singularity s must lie in (0,1)");
  if (!(gamma >= -n)) throw DomainError("kinetic exponent gamma must satisfy gamma >= -n");
  if (!(c_phi >= 0.0) || !std::isfinite(c_phi)) throw DomainError("kinetic constant c_phi must be finite and >= 0");
}

KernelParams KernelParams::from_inverse_power(double p, int n) {
  if (!(p > 2.0)) throw DomainError("Boltzmann operator not well defined for p = 2 (need p > 2)");
  if (n != 3) throw DomainError("inverse-power formula is stated for n = 3 only");
  KernelParams k;
  k.n = 3;
  k.gamma = (p - 5.0) / (p - 1.0);
  k.s = 1.0 / (p - 1.0);
  k.validate();
  return k;
}

double norm2(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r += x * x;
  return r;
}

double bracket(std::span<const double> v) { return std::sqrt(1.0 + norm2(v)); }

double maxwellian(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  return std::pow(2.0 * std::numbers::pi, -0.5 * n) * std::exp(-0.5 * norm2(v));
}

double sqrt_maxwellian(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  return std::pow(2.0 * std::numbers::pi, -0.25 * n) * std::exp(-0.25 * norm2(v));
}

double m_beta(std::span<const double> v, std::span<const int> beta) {
  if (beta.size() != v.size()) throw DomainError("multi-index length must equal dimension");
  std::vector<int> idx;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] < 0) throw DomainError("negative multi-index entry");
    for (int r = 0; r < beta[i]; ++r) idx.push_back(static_cast<int>(i));
  }
  const std::size_t order = idx.size();
  if (order > 2) throw DomainError("m_beta supports |beta| <= 2 only");
  const double M = sqrt_maxwellian(v);
  if (order == 0) return M;
  if (order == 1) return -0.5 * v[idx[0]] * M;
  const double delta = idx[0] == idx[1] ? 1.0 : 0.0;
  return (0.25 * v[idx[0]] * v[idx[1]] - 0.5 * delta) * M;
}

double angular_b_theta(double theta, const KernelParams& p) {
  if (theta <= 0.0) return std::numeric_limits<double>::infinity();
  if (theta > 0.5 * std::numbers::pi) return 0.0;
  const double base = std::pow(theta, -1.0 - 2.0 * p.s);
  if (p.n == 2) return base;
  return base / std::pow(std::sin(theta), p.n - 2);
}

double angular_b(double cos_theta, const KernelParams& p) {
  if (cos_theta >= 1.0) return std::numeric_limits<double>::infinity();
  if (cos_theta < 0.0) return 0.0;
  return angular_b_theta(std::acos(cos_theta), p);
}

double kinetic_phi(double r, const KernelParams& p) {
  if (p.gamma == 0.0) return p.c_phi;
  if (r == 0.0) return p.gamma > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return p.c_phi * std::pow(r, p.gamma);
}

double collision_B(std::span<const double> v, std::span<const double> v_star,
                   std::span<const double> sigma, const KernelParams& p) {
  double r2 = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = v[i] - v_star[i];
    r2 += u * u;
    dot += u * sigma[i];
  }
  const double r = std::sqrt(r2);
  if (r == 0.0) {
    if (p.gamma < 0.0) throw DomainError("B is singular at v = v_* for gamma < 0");
    return 0.0;
  }
  return kinetic_phi(r, p) * angular_b(std::min(1.0, dot / r), p);
}

double DyadicCutoff::lower() const { return std::ldexp(1.0, -k - 1); }
double DyadicCutoff::upper() const { return std::ldexp(1.0, -k); }
double DyadicCutoff::operator()(double r) const { return dyadic_index(r) == k ? 1.0 : 0.0; }

int dyadic_index(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("dyadic index needs finite r > 0");
  int e = 0;
  std::frexp(r, &e);  // r = m 2^e, m in [1/2, 1)
  return -e;
}

double collision_Bk(int k, std::span<const double> v, std::span<const double> v_star,
                    std::span<const double> sigma, const KernelParams& p) {
  double r2 = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = v[i] - v_star[i];
    r2 += u * u;
    dot += u * sigma[i];
  }
  const double r = std::sqrt(r2);
  if (r == 0.0) return 0.0;
  const double c = std::clamp(dot / r, -1.0, 1.0);
  const double dist = r * std::sqrt(0.5 * (1.0 - c));  // |v - v'| = |v - v_*| sin(theta/2)
  if (dist == 0.0) return 0.0;
  if (dyadic_index(dist) != k) return 0.0;
  return collision_B(v, v_star, sigma, p);
}

double weight_w(std::span<const double> v, const KernelParams& p) {
  const double b = bracket(v);
  if (p.regime() == Regime::hard) return b;
  return std::pow(b, -p.gamma - 2.0 * p.s);
}

double nu_tilde(std::span<const double> v, const KernelParams& p, const VelocityGrid& grid,
                const SphereRule& rule) {
  const int n = grid.n();
  if (static_cast<int>(v.size()) != n || n != p.n) throw DomainError("dimension mismatch");
  std::vector<double> vs(n), u(n), vps(n);
  double total = 0.0;
  const double cell = grid.cell_volume();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    grid.node(j, vs.data());
    for (int d = 0; d < n; ++d) u[d] = v[d] - vs[d];
    const double r = std::sqrt(norm2(u));
    if (r < 1e-12) continue;
    const double Ms = sqrt_maxwellian(vs);
    const double phi = kinetic_phi(r, p);
    auto nodes = rule.nodes(std::span<const double>(u).subspan(0, n));
    double acc = 0.0;
    for (const auto& node : nodes) {
      for (int d = 0; d < n; ++d) vps[d] = 0.5 * (v[d] + vs[d]) - 0.5 * r * node.sigma[d];
      acc += node.weight * angular_b_theta(node.theta, p) * (Ms - sqrt_maxwellian(vps));
    }
    total += cell * phi * Ms * acc;
  }
  return total;
}

}  // namespace ncb
