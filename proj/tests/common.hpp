#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/linearized.hpp"
#include "ncb/quadrature.hpp"

namespace ncbt {

inline ncb::KernelParams hard() {
  ncb::KernelParams p;
  p.gamma = 0.0;
  p.s = 0.25;
  return p;
}

inline ncb::KernelParams soft() {
  ncb::KernelParams p;
  p.gamma = -2.0;
  p.s = 0.3;
  return p;
}

inline ncb::ScalarField bump(const ncb::VelocityGrid& g, double cx, double cy, double w, double tilt = 0.0) {
  return ncb::ScalarField::from_function(g, [=](std::span<const double> v) {
    const double d2 = (v[0] - cx) * (v[0] - cx) + (v[1] - cy) * (v[1] - cy);
    return std::exp(-d2 / (2.0 * w * w)) * (1.0 + tilt * (v[0] - cx));
  });
}

inline ncb::ScalarField root_mu(const ncb::VelocityGrid& g) {
  return ncb::ScalarField::from_function(g, [](std::span<const double> v) { return ncb::sqrt_maxwellian(v); });
}

inline double max_abs(const ncb::ScalarField& f) {
  double m = 0.0;
  for (double x : f.values) m = std::max(m, std::abs(x));
  return m;
}

// Shared small operator: r_cut 6, 36 points per axis.
inline const ncb::OperatorMatrix& small_operator(bool conservative) {
  static ncb::OperatorMatrix plain, cons;
  static bool have_plain = false, have_cons = false;
  const ncb::VelocityGrid g(2, 6.0, 36);
  const auto rule = ncb::SphereRule::graded(2, 32, 3.0);
  ncb::AssembleOptions o;
  o.conservative = conservative;
  if (conservative) {
    if (!have_cons) cons = ncb::assemble(g, hard(), rule, o), have_cons = true;
    return cons;
  }
  if (!have_plain) plain = ncb::assemble(g, hard(), rule, o), have_plain = true;
  return plain;
}

}  // namespace ncbt
