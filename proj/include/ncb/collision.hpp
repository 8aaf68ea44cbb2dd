#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

// Q(G,F)(v) = int int B [G'_* F' - G_* F]; off-grid values by Maxwellian-weighted quadratic
// interpolation (exact for F = mu times a quadratic polynomial).
ScalarField q_apply(const ScalarField& G, const ScalarField& F, const KernelParams& p,
                    const SphereRule& rule, Compensation c = Compensation::odd_pairing);

// Gamma_beta(g,h) = int int B M_beta(v_*) (g'_* h' - g_* h); beta empty means beta = 0.
ScalarField gamma_apply(const ScalarField& g, const ScalarField& h, const KernelParams& p,
                        const SphereRule& rule, std::span<const int> beta = {});

ScalarField L_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule);
ScalarField n_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule);  // -Gamma(M, g)
ScalarField k_apply(const ScalarField& g, const KernelParams& p, const SphereRule& rule);  // -Gamma(g, M)

// nu~ at every grid node, using the same v_* nodes as n_apply.
ScalarField nu_tilde_field(const VelocityGrid& grid, const KernelParams& p, const SphereRule& rule);

// h^{-n} int over one grid cell centered at the origin of Phi(|u|).
double cell_average_phi(const VelocityGrid& grid, const KernelParams& p);

struct TrilinearReport {
  double value = 0.0;
  std::string representation;
  std::string resolution;
  double error_estimate = 0.0;
  double tail_estimate = 0.0;
  bool accuracy_warning = false;
  std::vector<std::pair<int, double>> per_scale;  // dyadic index k, contribution
};

// <w^{2l} Gamma(g,h), f> as sum over k of T_+^{k,l} - T_-^{k,l}.
TrilinearReport trilinear_sigma(const ScalarField& g, const ScalarField& h, const ScalarField& f,
                                int ell, const KernelParams& p, const SphereRule& rule);

// Same pairing through the Carleman hyperplane representation with the mean-zero b_eps.
TrilinearReport trilinear_dual(const ScalarField& g, const ScalarField& h, const ScalarField& f,
                               int ell, const KernelParams& p, const SphereRule& rule);

// b_eps = b for theta > theta_min, -c below, with int b_eps(t)(1-t^2)^{(n-3)/2} dt = 0.
struct RegularizedKernel {
  KernelParams params;
  double theta_min = 0.0;
  double eps = 0.0;  // 1 - cos theta_min
  double c = 0.0;
  double value_theta(double theta) const;
  double moment() const;  // independent quadrature of the vanishing integral
};
RegularizedKernel regularized_b(const KernelParams& p, double theta_min);

struct DyadicWindow {
  int k_min = 0, k_max = 0;
};
// 2^{-k_min} = 2 r_cut; 2^{-k_max} = 2h 2^{-depth}, depth counting sub-cell scales that the
// local quadratic interpolant resolves.
DyadicWindow dyadic_window(const VelocityGrid& grid, int depth = 6);

struct TPieces {
  double plus = 0.0, minus = 0.0, star = 0.0;
};
TPieces t_pieces(int k, int ell, const ScalarField& g, const ScalarField& h, const ScalarField& f,
                 const KernelParams& p, const SphereRule& rule, int depth = 6, int nodes = 12);

struct CarlemanOptions {
  int panels = 16;
  int nodes_per_panel = 8;
  int directions = 16;  // n = 3
};
double carleman_K(std::span<const double> v, std::span<const double> v_prime, const KernelParams& p,
                  const CarlemanOptions& opt = {});

// |g|^2_{B_l} = 1/2 int int int B w^l(v) (g' - g)^2 M'_* M_*.
double b_seminorm(const ScalarField& g, int ell, const KernelParams& p, const SphereRule& rule);

// Independent oracle: 1/2 int int K(v,v') (g(v') - g(v))^2 by polar quadrature around each v.
struct CarlemanSeminormOptions {
  double outer_r = 8.0;
  int outer_points = 32;
  double inner_r = 8.0;
  int radial_panels = 10;
  int radial_nodes = 6;
  int angles = 24;
  CarlemanOptions kernel{10, 8, 12};
};
double carleman_seminorm(const PointFn& g, const KernelParams& p, const CarlemanSeminormOptions& opt = {});

struct EntropyResult {
  double H = 0.0, D = 0.0;
};
EntropyResult entropy(const ScalarField& F, const KernelParams& p, const SphereRule& rule);

}  // namespace ncb
