#pragma once

#include <span>
#include <string>
#include <vector>

namespace ncb {

class VelocityGrid;
struct SphereRule;

enum class Regime { hard, soft };

std::string to_string(Regime r);

struct KernelParams {
  int n = 2;
  double s = 0.25;
  double gamma = 0.0;
  double c_phi = 1.0;

  Regime regime() const { return gamma + 2.0 * s >= 0.0 ? Regime::hard : Regime::soft; }
  void validate() const;

  // Inverse-power law potentials: gamma = (p-5)/(p-1), s = 1/(p-1), n = 3 only.
  static KernelParams from_inverse_power(double p, int n = 3);
};

double bracket(std::span<const double> v);  // <v> = sqrt(1 + |v|^2)
double norm2(std::span<const double> v);

double maxwellian(std::span<const double> v);
double sqrt_maxwellian(std::span<const double> v);
// d^beta M for a multi-index with |beta| <= 2.
double m_beta(std::span<const double> v, std::span<const int> beta);

// b(cos theta) = theta^{-1-2s} / sin^{n-2} theta on (0, pi/2], zero beyond.
// Returns +inf at theta = 0.
double angular_b(double cos_theta, const KernelParams& p);
double angular_b_theta(double theta, const KernelParams& p);
double kinetic_phi(double r, const KernelParams& p);

double collision_B(std::span<const double> v, std::span<const double> v_star,
                   std::span<const double> sigma, const KernelParams& p);

// chi_k is the indicator of [2^{-k-1}, 2^{-k}); the family is an exact partition of (0, inf).
struct DyadicCutoff {
  int k = 0;
  double operator()(double r) const;
  double lower() const;
  double upper() const;
};
int dyadic_index(double r);
double collision_Bk(int k, std::span<const double> v, std::span<const double> v_star,
                    std::span<const double> sigma, const KernelParams& p);

// Unified weight: <v> for hard potentials, <v>^{-gamma-2s} for soft.
double weight_w(std::span<const double> v, const KernelParams& p);

// nu~(v) = int dv_* int dsigma B (M_* - M'_*) M_*, with v_* on the grid nodes.
double nu_tilde(std::span<const double> v, const KernelParams& p, const VelocityGrid& grid,
                const SphereRule& rule);

// The splitting keeps nu := nu~ and nu_K := 0.
inline double nu_K(std::span<const double>, const KernelParams&) { return 0.0; }

}  // namespace ncb
