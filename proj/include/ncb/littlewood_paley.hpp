#pragma once

#include <span>
#include <vector>

#include "ncb/quadrature.hpp"

namespace ncb {

// phi0 = c exp(-1/(1 - |w/R|^2)) on |w| < R in R^{n+1}; phi and psi are finite combinations
// of dilations D^m phi0 (w) = phi0(w / 2^m).
struct LPBasis {
  int n = 2;
  int M = 2;
  double R = 0.0625;
  double c0 = 1.0;
  std::vector<double> phi_coef, psi_coef;  // coefficient of D^m phi0

  double phi0(double r) const;
  double phi0_prime(double r) const;
  double phi(double r) const;
  double psi(double r) const;
  double support() const;  // 2^{2M} R
};

// Config error when 2^{2M} R > 1 or M < 2.
LPBasis build_basis(int M, double R, int n);

struct LPQuadrature {
  int radial = 48;
  int angular = 64;  // azimuthal nodes; n = 3 also uses angular/2 polar nodes
};

// int p(u) (d_axis Phi)(I_v u) du with p(u) = prod u_d^{exps[d]}; axis = -1 means no derivative,
// otherwise 0..n indexes R^{n+1}. Phi = psi if use_psi, else phi.
double hyperplane_moment(const LPBasis& b, bool use_psi, std::span<const double> v, std::span<const int> exps,
                         int axis, const LPQuadrature& q = {});

// |int phi(I_v u) du - 1|, or the same for phi0.
double normalization_residual(const LPBasis& b, std::span<const double> v, bool use_phi0 = false,
                              const LPQuadrature& q = {});

// P_j(1)(v) and Q_j(1)(v) (Q_0 = P_0) by the change of variables v' = v + 2^{-j} tau_v u.
double p_one(const LPBasis& b, int j, std::span<const double> v, const LPQuadrature& q = {});
double q_one(const LPBasis& b, int j, std::span<const double> v, const LPQuadrature& q = {});

struct QjDecay {
  std::vector<int> j;
  std::vector<double> sup;
  double slope = 0.0;  // least-squares slope of log2 sup vs j
};

constexpr int kMaxResolvableJ = 12;  // Q_j(1) drops under the quadrature floor beyond this

// sup of |Q_j(1)| over grid nodes with |v| <= r_cut - 1.
QjDecay qj_one_decay(const LPBasis& b, const VelocityGrid& grid, int j_lo, int j_hi, const LPQuadrature& q = {});

// Grid projections P_j f with each dilation component renormalized to its continuum mass.
class LPProjector {
 public:
  LPProjector(const VelocityGrid& grid, const LPBasis& b, int j);
  ScalarField apply(const ScalarField& f) const;
  int j() const { return j_; }
  static int max_resolvable(const VelocityGrid& grid) ;

 private:
  VelocityGrid grid_;
  int j_ = 0;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> col_;
  std::vector<double> w_;
};

ScalarField project_P(int j, const ScalarField& f, const LPBasis& b);
ScalarField project_Q(int j, const ScalarField& f, const LPBasis& b);

struct SquareFunction {
  std::vector<double> terms;  // 2^{2sj} int |Q_j f|^2 <v>^rho
  double value = 0.0;
  double rhs = 0.0;  // |f|^2_{L^2_rho} + paraboloid semi-norm
  double ratio = 0.0;
};

SquareFunction square_function(const ScalarField& f, double rho, double s, const LPBasis& b, int j_max);

}  // namespace ncb
