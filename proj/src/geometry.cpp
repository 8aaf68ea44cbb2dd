#include "ncb/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ncb/error.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

void check_dims(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("vector dimensions differ");
}

}  // namespace

std::pair<Vec, Vec> post_collisional(std::span<const double> v, std::span<const double> v_star,
                                     std::span<const double> sigma) {
  check_dims(v, v_star);
  check_dims(v, sigma);
  const std::size_t n = v.size();
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) r += (v[i] - v_star[i]) * (v[i] - v_star[i]);
  r = std::sqrt(r);
  Vec vp(n), vps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mid = 0.5 * (v[i] + v_star[i]);
    vp[i] = mid + 0.5 * r * sigma[i];
    vps[i] = mid - 0.5 * r * sigma[i];
  }
  return {vp, vps};
}

CollisionPair make_collision(std::span<const double> v, std::span<const double> v_star,
                             std::span<const double> sigma) {
  CollisionPair c;
  c.v.assign(v.begin(), v.end());
  c.v_star.assign(v_star.begin(), v_star.end());
  c.sigma.assign(sigma.begin(), sigma.end());
  auto [vp, vps] = post_collisional(v, v_star, sigma);
  c.v_prime = std::move(vp);
  c.v_star_prime = std::move(vps);
  Vec u(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i] - v_star[i];
  const double r = std::sqrt(dot(u, u));
  c.theta = r > 0.0 ? std::acos(std::clamp(dot(u, sigma) / r, -1.0, 1.0)) : 0.0;
  return c;
}

double metric_d(std::span<const double> v, std::span<const double> v_prime) {
  check_dims(v, v_prime);
  double e = 0.0, a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - v_prime[i];
    e += d * d;
    a += v[i] * v[i];
    b += v_prime[i] * v_prime[i];
  }
  const double h = 0.5 * (a - b);
  return std::sqrt(e + h * h);
}

LiftedPoint::LiftedPoint(std::span<const double> x) : v(x.begin(), x.end()), height(0.5 * dot(x, x)) {}

Vec LiftedPoint::coords() const {
  Vec c = v;
  c.push_back(height);
  return c;
}

LiftMaps lift_maps(std::span<const double> v) { return LiftMaps{Vec(v.begin(), v.end())}; }

Vec LiftMaps::tau(std::span<const double> u) const {
  check_dims(v, u);
  const double v2 = dot(v, v);
  Vec out(u.begin(), u.end());
  if (v2 == 0.0) return out;
  const double br = std::sqrt(1.0 + v2);
  const double f = (1.0 - 1.0 / br) * dot(v, u) / v2;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= f * v[i];
  return out;
}

Vec LiftMaps::I(std::span<const double> u) const {
  Vec out = tau(u);
  out.push_back(dot(v, u) / std::sqrt(1.0 + dot(v, v)));
  return out;
}

std::vector<Vec> orthonormal_complement(std::span<const double> normal) {
  const std::size_t n = normal.size();
  const double len = std::sqrt(dot(normal, normal));
  if (len == 0.0) throw DomainError("zero normal vector");
  std::vector<Vec> basis;
  Vec k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = normal[i] / len;
  std::vector<Vec> accepted{k};
  // Seed axes in order of increasing alignment with the normal.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(k[a]) < std::abs(k[b]); });
  for (std::size_t ax : order) {
    if (basis.size() + 1 == n) break;
    Vec e(n, 0.0);
    e[ax] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : accepted) {
        const double c = dot(e, q);
        for (std::size_t i = 0; i < n; ++i) e[i] -= c * q[i];
      }
    }
    const double el = std::sqrt(dot(e, e));
    if (el < 1e-8) continue;
    for (double& x : e) x /= el;
    accepted.push_back(e);
    basis.push_back(e);
  }
  return basis;
}

CarlemanFrame CarlemanFrame::make(std::span<const double> apex, std::span<const double> anchor) {
  check_dims(apex, anchor);
  Vec normal(apex.size());
  for (std::size_t i = 0; i < apex.size(); ++i) normal[i] = apex[i] - anchor[i];
  if (dot(normal, normal) == 0.0) throw DomainError("degenerate Carleman frame: apex equals anchor");
  CarlemanFrame f;
  f.apex.assign(apex.begin(), apex.end());
  f.anchor.assign(anchor.begin(), anchor.end());
  f.basis = orthonormal_complement(normal);
  return f;
}

std::vector<WeightedNode> carleman_nodes(const CarlemanFrame& frame, const HyperplaneRule& rule) {
  const std::size_t n = frame.apex.size();
  if (n < 2 || n > 3) throw DomainError("Carleman nodes implemented for n = 2, 3");
  // Radial panels shrink geometrically toward the apex.
  std::vector<double> edges{rule.r_max};
  for (int k = 1; k < rule.panels; ++k) edges.push_back(edges.back() / rule.grading_ratio);
  edges.push_back(0.0);
  std::reverse(edges.begin(), edges.end());
  std::vector<double> rad, radw;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    auto [x, w] = gauss_legendre(rule.nodes_per_panel, edges[p], edges[p + 1]);
    for (std::size_t i = 0; i < x.size(); ++i) {
      rad.push_back(x[i]);
      radw.push_back(w[i] * std::pow(x[i], static_cast<double>(n) - 2.0));
    }
  }
  std::vector<Vec> dirs;
  std::vector<double> dirw;
  if (n == 2) {
    dirs = {frame.basis[0], Vec{-frame.basis[0][0], -frame.basis[0][1]}};
    dirw = {1.0, 1.0};
  } else {
    for (int j = 0; j < rule.directions; ++j) {
      const double a = 2.0 * std::numbers::pi * (j + 0.5) / rule.directions;
      Vec d(3);
      for (int i = 0; i < 3; ++i) d[i] = std::cos(a) * frame.basis[0][i] + std::sin(a) * frame.basis[1][i];
      dirs.push_back(d);
      dirw.push_back(2.0 * std::numbers::pi / rule.directions);
    }
  }
  std::vector<WeightedNode> out;
  out.reserve(rad.size() * dirs.size());
  for (std::size_t i = 0; i < rad.size(); ++i) {
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      WeightedNode w;
      w.point.resize(n);
      for (std::size_t d = 0; d < n; ++d) w.point[d] = frame.apex[d] + rad[i] * dirs[j][d];
      w.weight = radw[i] * dirw[j];
      out.push_back(std::move(w));
    }
  }
  return out;
}

PathPoint path_eval(const CollisionPath& path, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("path parameter must lie in [0,1]");
  check_dims(path.v, path.v_prime);
  const std::size_t n = path.v.size();
  PathPoint p;
  p.zeta.resize(n);
  Vec diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = path.v_prime[i] - path.v[i];
    p.zeta[i] = path.v[i] + theta * diff[i];
  }
  p.zeta_lift = p.zeta;
  p.zeta_lift.push_back(0.5 * dot(p.zeta, p.zeta));
  p.dzeta_lift = diff;
  p.dzeta_lift.push_back(dot(p.zeta, diff));
  p.d2zeta_lift.assign(n, 0.0);
  p.d2zeta_lift.push_back(dot(diff, diff));
  return p;
}

double jacobian_zeta_shift(double theta, double cos_k_sigma) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("theta must lie in [0,1]");
  const double a = 1.0 - 0.5 * theta;
  return a * a * (a + 0.5 * theta * cos_k_sigma);
}

}  // namespace ncb
