#pragma once
// Lattice sweeps shared by the collision and linearized modules.
//
// For grid nodes v_i, v_j the displacement v' - v_i depends only on the lattice difference
// u = v_i - v_j and the angular node, so stencil offsets and weights are built once per u.
// Values live on a zero-padded copy of the grid large enough to hold every post-collisional
// stencil, which removes all bounds checks from the inner loops.

#include <algorithm>
#include <array>
#include <cstdlib>
#include <cmath>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

namespace ncb::detail {

struct Lattice {
  int n = 2, N = 0, P = 0, Np = 0;
  double h = 0.0;
  std::array<long, 3> stride{0, 0, 0};   // padded strides
  std::array<long, 3> gstride{0, 0, 0};  // grid strides
  std::vector<long> pad;                 // grid index -> padded index
  std::vector<int> unpad;                // padded index -> grid index or -1

  explicit Lattice(const VelocityGrid& g) : n(g.n()), N(g.points_per_axis()), h(g.h()) {
    P = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)) * N)) + 3;
    Np = N + 2 * P;
    long s = 1, gs = 1;
    for (int d = n - 1; d >= 0; --d) {
      stride[d] = s;
      gstride[d] = gs;
      s *= Np;
      gs *= N;
    }
    pad.resize(g.size());
    unpad.assign(static_cast<std::size_t>(s), -1);
    int m[3] = {0, 0, 0};
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.multi_index(i, m);
      long p = 0;
      for (int d = 0; d < n; ++d) p += (m[d] + P) * stride[d];
      pad[i] = p;
      unpad[static_cast<std::size_t>(p)] = static_cast<int>(i);
    }
  }

  std::size_t padded_size() const { return unpad.size(); }

  std::vector<double> padded(const std::vector<double>& vals) const {
    std::vector<double> out(padded_size(), 0.0);
    for (std::size_t i = 0; i < pad.size(); ++i) out[static_cast<std::size_t>(pad[i])] = vals[i];
    return out;
  }
};

struct StencilNode {
  long off = 0;          // padded offset of the stencil center from the base node
  double w[3][3]{};      // per-axis weights at -1, 0, +1
  double W = 0.0;        // quadrature weight
  double delta[3]{};     // displacement of the evaluation point
  double theta = 0.0;
  double aux = 0.0;      // representation-specific factor
  int scale = 0;         // dyadic index of |delta|
};

inline void set_stencil(const Lattice& L, StencilNode& s) {
  s.off = 0;
  for (int d = 0; d < L.n; ++d) {
    const double p = s.delta[d] / L.h;
    const long c = std::lround(p);
    const double t = p - static_cast<double>(c);
    s.off += c * L.stride[d];
    s.w[d][0] = 0.5 * t * (t - 1.0);
    s.w[d][1] = 1.0 - t * t;
    s.w[d][2] = 0.5 * t * (t + 1.0);
  }
}

// Interpolate at base + off (forward) or base - off with mirrored weights (reverse).
template <int D>
inline double interp_fwd(const double* c, const std::array<long, 3>& st, const StencilNode& s) {
  if constexpr (D == 2) {
    const long sx = st[0];
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double* r = c + (a - 1) * sx;
      acc += s.w[0][a] * (s.w[1][0] * r[-1] + s.w[1][1] * r[0] + s.w[1][2] * r[1]);
    }
    return acc;
  } else {
    const long sx = st[0], sy = st[1];
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double* r = c + (a - 1) * sx + (b - 1) * sy;
        acc += s.w[0][a] * s.w[1][b] * (s.w[2][0] * r[-1] + s.w[2][1] * r[0] + s.w[2][2] * r[1]);
      }
    return acc;
  }
}

template <int D>
inline double interp_rev(const double* c, const std::array<long, 3>& st, const StencilNode& s) {
  if constexpr (D == 2) {
    const long sx = st[0];
    double acc = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double* r = c + (a - 1) * sx;
      acc += s.w[0][2 - a] * (s.w[1][2] * r[-1] + s.w[1][1] * r[0] + s.w[1][0] * r[1]);
    }
    return acc;
  } else {
    const long sx = st[0], sy = st[1];
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double* r = c + (a - 1) * sx + (b - 1) * sy;
        acc += s.w[0][2 - a] * s.w[1][2 - b] * (s.w[2][2] * r[-1] + s.w[2][1] * r[0] + s.w[2][0] * r[1]);
      }
    return acc;
  }
}

// Visit the padded stencil (index, weight) pairs; reverse negates the offsets.
template <class F>
inline void for_stencil(const Lattice& L, long center, const StencilNode& s, bool reverse, F&& f) {
  if (L.n == 2) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double wt = s.w[0][a] * s.w[1][b];
        const long sgn = reverse ? -1 : 1;
        f(center + sgn * ((a - 1) * L.stride[0] + (b - 1) * L.stride[1]), wt);
      }
  } else {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) {
          const double wt = s.w[0][a] * s.w[1][b] * s.w[2][c];
          const long sgn = reverse ? -1 : 1;
          f(center + sgn * ((a - 1) * L.stride[0] + (b - 1) * L.stride[1] + (c - 1) * L.stride[2]), wt);
        }
  }
}

// Angular node: displacement delta = -A u + |u| B e_omega, weight kernel factor.
struct AngularSample {
  double theta, A, B, weight, aux;
};

// sigma-representation samples from a sphere rule: A = sin^2(theta/2), B = sin(theta)/2,
// weight = theta^{-1-2s} dtheta domega (b dsigma with the sin^{n-2} factors cancelled).
inline std::vector<AngularSample> sigma_samples(const SphereRule& rule, const KernelParams& p) {
  std::vector<AngularSample> out;
  for (std::size_t i = 0; i < rule.theta.size(); ++i) {
    const double t = rule.theta[i];
    const double sh = std::sin(0.5 * t);
    out.push_back({t, sh * sh, 0.5 * std::sin(t), std::pow(t, -1.0 - 2.0 * p.s) * rule.theta_weight[i], 0.0});
  }
  return out;
}

// Direction vectors perpendicular to k for each omega entry of the rule.
inline void omega_dirs(int n, const double* k, const SphereRule& rule, std::vector<std::array<double, 3>>& dirs) {
  dirs.clear();
  if (n == 2) {
    dirs.push_back({-k[1], k[0], 0.0});
    dirs.push_back({k[1], -k[0], 0.0});
    return;
  }
  // Gram-Schmidt from the least aligned axis
  int ax = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(k[d]) < std::abs(k[ax])) ax = d;
  double e1[3] = {0, 0, 0};
  e1[ax] = 1.0;
  double c = e1[0] * k[0] + e1[1] * k[1] + e1[2] * k[2];
  for (int d = 0; d < 3; ++d) e1[d] -= c * k[d];
  double l = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& x : e1) x /= l;
  const double e2[3] = {k[1] * e1[2] - k[2] * e1[1], k[2] * e1[0] - k[0] * e1[2], k[0] * e1[1] - k[1] * e1[0]};
  for (double a : rule.omega_angle) {
    const double ca = std::cos(a), sa = std::sin(a);
    dirs.push_back({ca * e1[0] + sa * e2[0], ca * e1[1] + sa * e2[1], ca * e1[2] + sa * e2[2]});
  }
}

// Build stencil nodes for lattice difference du (grid steps). scale multiplies each weight.
inline void build_nodes(const Lattice& L, const int* du, const std::vector<AngularSample>& samples,
                        const SphereRule& rule, double scale, std::vector<StencilNode>& out) {
  out.clear();
  double u[3] = {0, 0, 0};
  double r2 = 0.0;
  for (int d = 0; d < L.n; ++d) {
    u[d] = du[d] * L.h;
    r2 += u[d] * u[d];
  }
  const double r = std::sqrt(r2);
  double k[3] = {0, 0, 0};
  for (int d = 0; d < L.n; ++d) k[d] = u[d] / r;
  static thread_local std::vector<std::array<double, 3>> dirs;
  omega_dirs(L.n, k, rule, dirs);
  for (const auto& smp : samples) {
    for (std::size_t j = 0; j < dirs.size(); ++j) {
      StencilNode s;
      double len2 = 0.0;
      for (int d = 0; d < L.n; ++d) {
        s.delta[d] = -smp.A * u[d] + r * smp.B * dirs[j][d];
        len2 += s.delta[d] * s.delta[d];
      }
      s.theta = smp.theta;
      s.aux = smp.aux;
      s.W = scale * smp.weight * rule.omega_weight[j];
      s.scale = len2 > 0.0 ? dyadic_index(std::sqrt(len2)) : 1000;
      set_stencil(L, s);
      out.push_back(s);
    }
  }
}

// Cell average of Phi(|u|) over the lattice cell centered at du; exact near the origin
// where |u|^gamma is singular, plain midpoint value elsewhere.
inline double phi_cell(const Lattice& L, const int* du, const KernelParams& p) {
  if (p.gamma == 0.0) return p.c_phi;
  int m = 0;
  double r2 = 0.0;
  for (int d = 0; d < L.n; ++d) {
    m = std::max(m, std::abs(du[d]));
    r2 += (du[d] * L.h) * (du[d] * L.h);
  }
  if (m > 3) return kinetic_phi(std::sqrt(r2), p);
  static const double x[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831909,
                              0.2386191860831909, 0.6612093864662645, 0.9324695142031521};
  static const double w[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                              0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
  double acc = 0.0;
  if (L.n == 2) {
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double u0 = (du[0] + 0.5 * x[a]) * L.h, u1 = (du[1] + 0.5 * x[b]) * L.h;
        acc += w[a] * w[b] * kinetic_phi(std::sqrt(u0 * u0 + u1 * u1), p);
      }
    return 0.25 * acc;
  }
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b)
      for (int c = 0; c < 6; ++c) {
        const double u0 = (du[0] + 0.5 * x[a]) * L.h, u1 = (du[1] + 0.5 * x[b]) * L.h, u2 = (du[2] + 0.5 * x[c]) * L.h;
        acc += w[a] * w[b] * w[c] * kinetic_phi(std::sqrt(u0 * u0 + u1 * u1 + u2 * u2), p);
      }
  return 0.125 * acc;
}

// Standard sigma-representation builder: weights scaled by h^n and the cell average of Phi.
struct SigmaBuilder {
  const Lattice& L;
  const KernelParams& p;
  const SphereRule& rule;
  const std::vector<AngularSample>& samples;
  double cell;
  bool operator()(const int* du, double, std::vector<StencilNode>& nodes) const {
    const double phi = phi_cell(L, du, p);
    if (phi == 0.0 || !std::isfinite(phi)) return false;
    build_nodes(L, du, samples, rule, cell * phi, nodes);
    return true;
  }
};

// Sweep all nonzero lattice differences. build(du, r, nodes) fills nodes for du;
// body(i, j, node) is called for every grid pair (i, j = i - du) and node.
template <class Build, class Body>
void sweep(const Lattice& L, Build&& build, Body&& body) {
  const int N = L.N, n = L.n;
  std::vector<StencilNode> nodes;
  int du[3] = {0, 0, 0};
  const int lo = -(N - 1), hi = N - 1;
  const int span = hi - lo + 1;
  long total = 1;
  for (int d = 0; d < n; ++d) total *= span;
  for (long t = 0; t < total; ++t) {
    long rem = t;
    bool zero = true;
    for (int d = n - 1; d >= 0; --d) {
      du[d] = static_cast<int>(rem % span) + lo;
      rem /= span;
      if (du[d] != 0) zero = false;
    }
    if (zero) continue;
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += (du[d] * L.h) * (du[d] * L.h);
    if (!build(du, std::sqrt(r2), nodes)) continue;
    int a0[3], a1[3];
    for (int d = 0; d < 3; ++d) {
      a0[d] = 0;
      a1[d] = 0;
    }
    for (int d = 0; d < n; ++d) {
      a0[d] = std::max(0, du[d]);
      a1[d] = std::min(N - 1, N - 1 + du[d]);
    }
    long dlin = 0;
    for (int d = 0; d < n; ++d) dlin += du[d] * L.gstride[d];
    for (const auto& node : nodes) {
      if (n == 2) {
        for (int x = a0[0]; x <= a1[0]; ++x) {
          const long base = x * L.gstride[0];
          for (int y = a0[1]; y <= a1[1]; ++y) {
            const long i = base + y;
            body(i, i - dlin, node);
          }
        }
      } else {
        for (int x = a0[0]; x <= a1[0]; ++x)
          for (int y = a0[1]; y <= a1[1]; ++y) {
            const long base = x * L.gstride[0] + y * L.gstride[1];
            for (int z = a0[2]; z <= a1[2]; ++z) {
              const long i = base + z;
              body(i, i - dlin, node);
            }
          }
      }
    }
  }
}

}  // namespace ncb::detail
