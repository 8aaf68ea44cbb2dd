#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace ncb {

using PointFn = std::function<double(std::span<const double>)>;

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m, double a, double b);
double pairwise_sum(std::span<const double> x);

// Tensor midpoint grid on [-r_cut, r_cut]^n, first axis slowest.
class VelocityGrid {
 public:
  VelocityGrid() = default;
  VelocityGrid(int n, double r_cut, int points_per_axis);

  int n() const { return n_; }
  double r_cut() const { return r_cut_; }
  int points_per_axis() const { return N_; }
  double h() const { return 2.0 * r_cut_ / N_; }
  double cell_volume() const;
  std::size_t size() const { return size_; }

  double coord(int i) const { return -r_cut_ + (i + 0.5) * h(); }
  void node(std::size_t idx, double* out) const;
  std::vector<double> node(std::size_t idx) const;
  void multi_index(std::size_t idx, int* out) const;
  std::size_t index(std::span<const int> multi) const;

  bool operator==(const VelocityGrid& o) const {
    return n_ == o.n_ && r_cut_ == o.r_cut_ && N_ == o.N_;
  }

 private:
  int n_ = 2;
  double r_cut_ = 8.0;
  int N_ = 48;
  std::size_t size_ = 48 * 48;
};

struct ScalarField {
  VelocityGrid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const VelocityGrid& g, double fill = 0.0);
  ScalarField(const VelocityGrid& g, std::vector<double> v);
  static ScalarField from_function(const VelocityGrid& g, const PointFn& f);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  void check_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double c);
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double c, ScalarField a);

double integrate(const ScalarField& f);
double integrate(const ScalarField& f, const PointFn& weight);
double inner(const ScalarField& f, const ScalarField& g);
double l2_norm(const ScalarField& f);

enum class Compensation { none, odd_pairing };

// theta_i = theta_max * t_i^q with Gauss-Legendre t_i on [t_min, 1]; t_min = 1/n_theta for a
// graded cap, 0 for a full rule. Directions around the axis come in antipodal pairs.
struct SphereRule {
  int n = 2;
  int n_theta = 32;
  int n_omega = 2;
  double q = 3.0;
  double theta_max = 0.0;
  double theta_min = 0.0;
  std::vector<double> theta, theta_weight;  // dtheta weights
  std::vector<double> omega_angle, omega_weight;

  static SphereRule graded(int n, int n_theta, double q = 3.0, int n_omega = 8);
  static SphereRule full(int n, int n_theta, int n_omega = 16);

  struct Node {
    std::vector<double> sigma;
    double theta = 0.0;
    double weight = 0.0;  // surface measure sin^{n-2} theta dtheta domega
  };
  // Nodes ordered so that entries 2m and 2m+1 are reflections of each other.
  std::vector<Node> nodes(std::span<const double> axis) const;
  double cap_measure() const;
  std::size_t size() const { return theta.size() * omega_angle.size(); }
};

double sphere_integrate(const PointFn& kernel, const SphereRule& rule,
                        std::span<const double> axis, Compensation c);

struct RichardsonResult {
  std::vector<double> levels;
  double value = 0.0;  // extrapolated
  double coarse = 0.0, fine = 0.0;
  double error = 0.0;
  bool converged = true;
};

// task(l) evaluates at base resolution times factor^l, l = 0..levels-1.
RichardsonResult richardson_probe(const std::function<double(int)>& task, int levels = 3,
                                  double rel_tol = 1e-8);

// Nearest-node quadratic interpolation; points off the grid see zero values.
double interpolate(const ScalarField& f, std::span<const double> x);

}  // namespace ncb
