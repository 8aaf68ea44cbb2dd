#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

// Collocation matrices on grid values: (L g)_i = sum_c L(i,c) g_c. Symmetric matrices are
// self-adjoint for the grid inner product h^n sum_i f_i g_i.
struct OperatorMatrix {
  VelocityGrid grid;
  KernelParams params;
  Eigen::MatrixXd L, N, K;  // symmetrized; K = L - N
  double asymmetry = 0.0;        // skew part of the form on smooth pairs, relative to the energy
  double entry_asymmetry = 0.0;  // |A - A^T|_F / |A|_F; large at |v| ~ r_cut, informational
  bool symmetrized = true;
  bool conservative = false;
  double conservation_defect = 0.0;  // |P L|_F / |L|_F before the correction

  std::size_t size() const { return static_cast<std::size_t>(L.rows()); }
  ScalarField apply(const ScalarField& g) const;
  double form(const ScalarField& g) const;  // <L g, g>
  double form_N(const ScalarField& g) const;
  // Flat binary: two uint64 (rows, cols) then row-major float64.
  void dump(const std::string& path) const;
};

struct AssembleOptions {
  bool keep_parts = true;  // also keep N and K
  double max_asymmetry = 0.05;
  // Project the macroscopic defect out of L: L <- (I - P) L (I - P). Makes the discrete
  // conservation laws exact; the removed defect is reported.
  bool conservative = false;
};

OperatorMatrix assemble(const VelocityGrid& grid, const KernelParams& p, const SphereRule& rule,
                        const AssembleOptions& opt = {});

Eigen::VectorXd eigenvalues(const OperatorMatrix& m);

struct NullBasis {
  VelocityGrid grid;
  Eigen::MatrixXd raw;  // columns sqrt(mu), v_1 sqrt(mu), ..., |v|^2 sqrt(mu)
  Eigen::MatrixXd E;    // orthonormal: h^n E^T E = I
  Eigen::MatrixXd gram;  // h^n raw^T raw

  static NullBasis make(const VelocityGrid& grid);
  int dim() const { return static_cast<int>(raw.cols()); }
};

struct NullProjection {
  double a = 0.0;
  std::vector<double> b;
  double c = 0.0;
  ScalarField Pg, micro;  // Pg and (I - P) g
};

NullProjection project_null(const ScalarField& g, const NullBasis& basis);

struct CoercivityResult {
  double delta0 = 0.0, C_upper = 0.0;
  std::vector<double> ratios;
  int skipped = 0;
  int negative = 0;  // Rayleigh values below -tol
};

// Ratios <L g, g> / |(I - P) g|^2_{N^{s,gamma}}; null-space members are skipped.
CoercivityResult coercivity_probe(const std::vector<ScalarField>& suite, const OperatorMatrix& m,
                                  const NullBasis& basis, double tol = 1e-10);

struct GapRow {
  KernelParams params;
  std::vector<double> radii, quotients;
  std::vector<double> rejected;
  double slope = 0.0;        // fitted d log q / d log <r> over the fit window
  double fit_lo = 2.0, fit_hi = 6.0;
  double min_quotient = 0.0;
  std::string classification;  // gap, no-gap or gap(boundary-adjacent)
  bool slope_matches = false;  // slope within 25% of gamma + 2s
};

struct GapScanOptions {
  double fit_lo = 2.0, fit_hi = 6.0;
  double flat = 0.15;  // |slope| below this is neither clearly decaying nor growing
};

// Rayleigh quotients <L g_r, g_r> / |g_r|^2 of null-projected unit Gaussians centered at r e_1.
// Classification is a finite-size trend: truncation at r_cut always leaves a discrete gap.
GapRow gap_scan_one(const KernelParams& p, const VelocityGrid& grid, const SphereRule& rule,
                    const NullBasis& basis, const std::vector<double>& radii, const GapScanOptions& opt = {});

std::vector<GapRow> gap_dichotomy_scan(const std::vector<KernelParams>& params_list,
                                       const std::vector<double>& radii, const VelocityGrid& grid,
                                       const SphereRule& rule, const GapScanOptions& opt = {});

}  // namespace ncb
