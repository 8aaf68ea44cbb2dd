#include "ncb/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ncb/error.hpp"
#include "ncb/geometry.hpp"

namespace ncb {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m, double a, double b) {
  if (m < 1) throw DomainError("Gauss-Legendre needs at least one node");
  std::vector<double> x(m), w(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= m; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= m; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = m * (z * p0 - p1) / (z * z - 1.0);
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = wt;
  }
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < m; ++i) {
    x[i] = mid + half * x[i];
    w[i] *= half;
  }
  return {x, w};
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.subspan(0, h)) + pairwise_sum(x.subspan(h));
}

VelocityGrid::VelocityGrid(int n, double r_cut, int points_per_axis)
    : n_(n), r_cut_(r_cut), N_(points_per_axis) {
  if (n < 1 || n > 3) throw DomainError("velocity grids support n = 1, 2, 3");
  if (!(r_cut > 0.0)) throw DomainError("r_cut must be positive");
  if (points_per_axis < 2 || points_per_axis % 2 != 0) throw DomainError("points_per_axis must be even and >= 2");
  size_ = 1;
  for (int d = 0; d < n; ++d) size_ *= static_cast<std::size_t>(N_);
}

double VelocityGrid::cell_volume() const { return std::pow(h(), n_); }

void VelocityGrid::multi_index(std::size_t idx, int* out) const {
  for (int d = n_ - 1; d >= 0; --d) {
    out[d] = static_cast<int>(idx % N_);
    idx /= N_;
  }
}

void VelocityGrid::node(std::size_t idx, double* out) const {
  int m[3];
  multi_index(idx, m);
  for (int d = 0; d < n_; ++d) out[d] = coord(m[d]);
}

std::vector<double> VelocityGrid::node(std::size_t idx) const {
  std::vector<double> v(n_);
  node(idx, v.data());
  return v;
}

std::size_t VelocityGrid::index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int d = 0; d < n_; ++d) idx = idx * N_ + static_cast<std::size_t>(multi[d]);
  return idx;
}

ScalarField::ScalarField(const VelocityGrid& g, double fill) : grid(g), values(g.size(), fill) {}

ScalarField::ScalarField(const VelocityGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) throw DomainError("field length does not match grid size");
}

ScalarField ScalarField::from_function(const VelocityGrid& g, const PointFn& f) {
  ScalarField out(g);
  std::vector<double> v(g.n());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, v.data());
    out.values[i] = f(v);
  }
  return out;
}

void ScalarField::check_finite() const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i])) throw NumericalError("non-finite field value at node " + std::to_string(i));
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (!(grid == o.grid)) throw DomainError("fields live on different grids");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (!(grid == o.grid)) throw DomainError("fields live on different grids");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double c) {
  for (double& x : values) x *= c;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double c, ScalarField a) { return a *= c; }

double integrate(const ScalarField& f) { return pairwise_sum(f.values) * f.grid.cell_volume(); }

double integrate(const ScalarField& f, const PointFn& weight) {
  std::vector<double> t(f.size());
  std::vector<double> v(f.grid.n());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.grid.node(i, v.data());
    t[i] = f.values[i] * weight(v);
  }
  return pairwise_sum(t) * f.grid.cell_volume();
}

double inner(const ScalarField& f, const ScalarField& g) {
  if (!(f.grid == g.grid)) throw DomainError("fields live on different grids");
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) t[i] = f.values[i] * g.values[i];
  return pairwise_sum(t) * f.grid.cell_volume();
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

namespace {

SphereRule make_rule(int n, int n_theta, double q, int n_omega, double theta_max, double t_min) {
  if (n != 2 && n != 3) throw DomainError("sphere rules implemented for n = 2, 3");
  if (n_theta < 1) throw DomainError("need at least one theta node");
  SphereRule r;
  r.n = n;
  r.n_theta = n_theta;
  r.q = q;
  r.theta_max = theta_max;
  r.theta_min = theta_max * std::pow(t_min, q);
  auto [t, w] = gauss_legendre(n_theta, t_min, 1.0);
  for (int i = 0; i < n_theta; ++i) {
    r.theta.push_back(theta_max * std::pow(t[i], q));
    r.theta_weight.push_back(w[i] * theta_max * q * std::pow(t[i], q - 1.0));
  }
  if (n == 2) {
    r.n_omega = 2;
    r.omega_angle = {0.0, std::numbers::pi};
    r.omega_weight = {1.0, 1.0};
  } else {
    if (n_omega < 2 || n_omega % 2 != 0) throw DomainError("n_omega must be even");
    r.n_omega = n_omega;
    // angles j and j + n_omega/2 are antipodal; store them adjacently
    for (int j = 0; j < n_omega / 2; ++j) {
      const double a = 2.0 * std::numbers::pi * (j + 0.5) / n_omega;
      r.omega_angle.push_back(a);
      r.omega_angle.push_back(a + std::numbers::pi);
      r.omega_weight.push_back(2.0 * std::numbers::pi / n_omega);
      r.omega_weight.push_back(2.0 * std::numbers::pi / n_omega);
    }
  }
  return r;
}

}  // namespace

SphereRule SphereRule::graded(int n, int n_theta, double q, int n_omega) {
  return make_rule(n, n_theta, q, n_omega, 0.5 * std::numbers::pi, 1.0 / n_theta);
}

SphereRule SphereRule::full(int n, int n_theta, int n_omega) {
  return make_rule(n, n_theta, 1.0, n_omega, std::numbers::pi, 0.0);
}

double SphereRule::cap_measure() const {
  double ang = 0.0;
  for (double w : omega_weight) ang += w;
  if (n == 2) return ang * (theta_max - theta_min);
  return ang * (std::cos(theta_min) - std::cos(theta_max));
}

std::vector<SphereRule::Node> SphereRule::nodes(std::span<const double> axis) const {
  if (static_cast<int>(axis.size()) != n) throw DomainError("axis dimension mismatch");
  double len = 0.0;
  for (double a : axis) len += a * a;
  len = std::sqrt(len);
  if (len == 0.0) throw DomainError("zero axis");
  std::vector<double> k(n);
  for (int d = 0; d < n; ++d) k[d] = axis[d] / len;
  auto basis = orthonormal_complement(k);
  std::vector<Node> out;
  out.reserve(size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double c = std::cos(theta[i]), s = std::sin(theta[i]);
    const double jac = n == 3 ? s : 1.0;
    for (std::size_t j = 0; j < omega_angle.size(); ++j) {
      Node node;
      node.sigma.resize(n);
      node.theta = theta[i];
      if (n == 2) {
        const double sgn = j == 0 ? 1.0 : -1.0;
        for (int d = 0; d < n; ++d) node.sigma[d] = c * k[d] + sgn * s * basis[0][d];
      } else {
        const double ca = std::cos(omega_angle[j]), sa = std::sin(omega_angle[j]);
        for (int d = 0; d < n; ++d) node.sigma[d] = c * k[d] + s * (ca * basis[0][d] + sa * basis[1][d]);
      }
      node.weight = jac * theta_weight[i] * omega_weight[j];
      out.push_back(std::move(node));
    }
  }
  return out;
}

double sphere_integrate(const PointFn& kernel, const SphereRule& rule, std::span<const double> axis,
                        Compensation c) {
  auto nodes = rule.nodes(axis);
  std::vector<double> terms;
  terms.reserve(nodes.size());
  if (c == Compensation::odd_pairing) {
    for (std::size_t m = 0; m + 1 < nodes.size(); m += 2) {
      const double a = kernel(nodes[m].sigma), b = kernel(nodes[m + 1].sigma);
      if (!std::isfinite(a) || !std::isfinite(b))
        throw AccuracyError("non-finite kernel value at theta = " + std::to_string(nodes[m].theta));
      terms.push_back(nodes[m].weight * (a + b));
    }
  } else {
    for (const auto& node : nodes) {
      const double a = kernel(node.sigma);
      if (!std::isfinite(a)) throw AccuracyError("non-finite kernel value at theta = " + std::to_string(node.theta));
      terms.push_back(node.weight * a);
    }
  }
  return pairwise_sum(terms);
}

RichardsonResult richardson_probe(const std::function<double(int)>& task, int levels, double rel_tol) {
  if (levels < 2) throw DomainError("Richardson probe needs at least two levels");
  RichardsonResult r;
  for (int l = 0; l < levels; ++l) r.levels.push_back(task(l));
  const std::size_t m = r.levels.size();
  r.coarse = r.levels[m - 2];
  r.fine = r.levels[m - 1];
  r.error = std::abs(r.fine - r.coarse);
  r.value = r.fine;
  const double scale = std::max(std::abs(r.fine), 1e-300);
  if (m >= 3) {
    const double e1 = std::abs(r.levels[m - 2] - r.levels[m - 3]);
    const double e2 = r.error;
    if (e2 > rel_tol * scale && e2 > 0.5 * e1) {
      r.converged = false;
    } else if (e1 > 0.0 && e2 < e1) {
      const double rho = e2 / e1;
      r.value = r.fine + (r.fine - r.coarse) * rho / (1.0 - rho);
    }
  }
  if (!std::isfinite(r.fine)) r.converged = false;
  return r;
}

double interpolate(const ScalarField& f, std::span<const double> x) {
  const VelocityGrid& g = f.grid;
  const int n = g.n(), N = g.points_per_axis();
  if (static_cast<int>(x.size()) != n) throw DomainError("dimension mismatch");
  const double h = g.h();
  int c[3];
  double w[3][3];
  for (int d = 0; d < n; ++d) {
    const double p = (x[d] + g.r_cut()) / h - 0.5;
    c[d] = static_cast<int>(std::lround(p));
    if (c[d] < -2 || c[d] > N + 1) return 0.0;
    const double t = p - c[d];
    w[d][0] = 0.5 * t * (t - 1.0);
    w[d][1] = 1.0 - t * t;
    w[d][2] = 0.5 * t * (t + 1.0);
  }
  double acc = 0.0;
  int m[3] = {0, 0, 0};
  const int total = n == 1 ? 3 : (n == 2 ? 9 : 27);
  for (int s = 0; s < total; ++s) {
    int rem = s;
    double wt = 1.0;
    bool inside = true;
    for (int d = n - 1; d >= 0; --d) {
      const int a = rem % 3;
      rem /= 3;
      m[d] = c[d] + a - 1;
      wt *= w[d][a];
      if (m[d] < 0 || m[d] >= N) inside = false;
    }
    if (inside) acc += wt * f.values[g.index(std::span<const int>(m, n))];
  }
  return acc;
}

}  // namespace ncb
