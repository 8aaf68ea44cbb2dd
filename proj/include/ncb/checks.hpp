#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

// One verified property. `anchor` names the statement the row checks.
struct CheckRow {
  std::string anchor;
  std::string check;
  std::string label;     // suite member, resolution or parameter set
  double value = 0.0;
  double bound = 0.0;
  std::string relation;  // "<=", ">=", "==" or "info"
  bool pass = true;
  std::string detail;
};

bool all_pass(const std::vector<CheckRow>& rows);

struct Resolution {
  double r_cut = 8.0;
  int points_per_axis = 48;
  int angular_nodes = 32;
  double grading = 3.0;

  VelocityGrid grid(int n = 2) const;
  SphereRule rule(int n = 2) const;
  Resolution refined(int points) const;
};

// Smooth bumps exp(-|v - c|^2 / (2 w^2)) (1 + small polynomial), deterministic.
std::vector<std::pair<std::string, ScalarField>> bump_suite(const VelocityGrid& grid, int count);
// Seeded random Gaussian mixtures with polynomial factors.
std::vector<ScalarField> random_smooth_suite(const VelocityGrid& grid, int count, std::uint64_t seed);

std::vector<CheckRow> check_moments(const Resolution& res);
std::vector<CheckRow> check_kinematics(int samples, std::uint64_t seed);
std::vector<CheckRow> check_representations(const KernelParams& p, const Resolution& base, int refined_points);
std::vector<CheckRow> check_form_identity(const KernelParams& p, const Resolution& res, int count, std::uint64_t seed);
std::vector<CheckRow> check_linearized_structure(const KernelParams& p, const Resolution& res);
std::vector<CheckRow> check_coercivity(const KernelParams& p, const Resolution& res, int refined_points, int count);
std::vector<CheckRow> check_norm_equivalence(const KernelParams& p, const Resolution& base, int refined_points);
std::vector<CheckRow> check_sandwich(const KernelParams& p, const Resolution& res, bool outward_trend);
std::vector<CheckRow> check_lp(int M, double R, const Resolution& res, int j_lo, int j_hi);
std::vector<CheckRow> check_square_function(int M, double R, const Resolution& base, int refined_points);
std::vector<CheckRow> check_carleman(const KernelParams& p, int samples, std::uint64_t seed);
std::vector<CheckRow> check_gap(const std::vector<KernelParams>& params, const Resolution& res,
                                const std::vector<double>& radii);
std::vector<CheckRow> check_decay_hard(const KernelParams& p, const Resolution& res, double dt, double t_end);
std::vector<CheckRow> check_decay_soft(const KernelParams& p, const Resolution& res, double dt, double t_end,
                                       double extra_weight);
std::vector<CheckRow> check_entropy(const KernelParams& p, const Resolution& res, int count, std::uint64_t seed);
std::vector<CheckRow> check_entropy_run(const KernelParams& p, const Resolution& res, int steps, double dt);
std::vector<CheckRow> check_macro(const KernelParams& p, const Resolution& res, int nx, double dt, double t_end);
std::vector<CheckRow> check_picard(const KernelParams& p, const Resolution& res, double amplitude, double T_star,
                                   int steps);

}  // namespace ncb
