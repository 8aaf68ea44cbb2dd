#pragma once

#include <span>
#include <utility>
#include <vector>

namespace ncb {

using Vec = std::vector<double>;

struct CollisionPair {
  Vec v, v_star, sigma, v_prime, v_star_prime;
  double theta = 0.0;  // deviation angle, cos theta = <k, sigma>
};

std::pair<Vec, Vec> post_collisional(std::span<const double> v, std::span<const double> v_star,
                                     std::span<const double> sigma);
CollisionPair make_collision(std::span<const double> v, std::span<const double> v_star,
                             std::span<const double> sigma);

double metric_d(std::span<const double> v, std::span<const double> v_prime);

struct LiftedPoint {
  Vec v;
  double height = 0.0;
  explicit LiftedPoint(std::span<const double> x);
  Vec coords() const;  // (v, |v|^2/2)
};

// tau_v u = u - (1 - <v>^{-1}) <v,u> v / |v|^2,  I_v u = (tau_v u, <v>^{-1} <v,u>).
struct LiftMaps {
  Vec v;
  Vec tau(std::span<const double> u) const;
  Vec I(std::span<const double> u) const;
};
LiftMaps lift_maps(std::span<const double> v);

// Orthonormal basis of the complement of `normal`, seeded from the least aligned axis.
std::vector<Vec> orthonormal_complement(std::span<const double> normal);

struct CarlemanFrame {
  Vec apex, anchor;
  std::vector<Vec> basis;
  static CarlemanFrame make(std::span<const double> apex, std::span<const double> anchor);
};

struct HyperplaneRule {
  double r_max = 12.0;
  int panels = 12;
  int nodes_per_panel = 8;
  double grading_ratio = 1.5;
  int directions = 16;  // circle directions for n = 3
};

struct WeightedNode {
  Vec point;
  double weight = 0.0;
};

std::vector<WeightedNode> carleman_nodes(const CarlemanFrame& frame, const HyperplaneRule& rule);

struct CollisionPath {
  Vec v, v_prime;
};

struct PathPoint {
  Vec zeta, zeta_lift, dzeta_lift, d2zeta_lift;
};

PathPoint path_eval(const CollisionPath& path, double theta);

// Jacobian of u = theta v' + (1 - theta) v at fixed v_*, sigma (n = 3 power).
double jacobian_zeta_shift(double theta, double cos_k_sigma);

}  // namespace ncb
