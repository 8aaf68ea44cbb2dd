#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

struct NormConfig {
  KernelParams params;     // s, gamma and the regime of w
  double ell = 0.0;
  double d_cut = 1.0;
  double cone_eps = 0.70710678118654752;  // 1/sqrt(2)

  static NormConfig from(const KernelParams& p, double ell = 0.0);
  void validate() const;
};

struct NormParts {
  double l2_part = 0.0;    // |w^l f|^2_{L^2_{gamma+2s}}
  double semi_part = 0.0;  // anisotropic double integral
  double total = 0.0;
  double norm = 0.0;       // sqrt(total)
  std::size_t boundary_cells = 0;  // cells whose unit ball leaves the grid
};

// int <v>^ell |f|^2
double l2_weighted(const ScalarField& f, double ell_power);

NormParts nsg_parts(const ScalarField& f, const NormConfig& cfg);
double nsg_norm(const ScalarField& f, const NormConfig& cfg);

// Gagliardo H^s norm with weight (<v><v'>)^{ell/2}; returns the norm, not its square.
double isotropic_hs(const ScalarField& f, double s, double ell_power);

// int int (<v><v'>)^{(rho+1)/2} (f - f')^2 / d^{n+2s} over d <= 1; squared.
double paraboloid_seminorm_sq(const ScalarField& f, double s, double rho);

// Semi-norm restricted to |(|v|^2 - |v'|^2)/2| <= eps d(v,v'); returns the square root.
double cone_seminorm_N0(const ScalarField& f, const NormConfig& cfg);

struct SandwichRow {
  std::string label;
  double hs_gamma = 0.0, nsg = 0.0, hs_gamma_2s = 0.0;
  double lower_ratio = 0.0;  // |f|_{H^s_gamma} / |f|_{N^{s,gamma}}
  double upper_ratio = 0.0;  // |f|_{N^{s,gamma}} / |f|_{H^s_{gamma+2s}}
  bool skipped = false;
};

std::vector<SandwichRow> sandwich_ratios(const std::vector<std::pair<std::string, ScalarField>>& suite,
                                         const KernelParams& p);

}  // namespace ncb
