#include "ncb/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/evolution.hpp"
#include "ncb/geometry.hpp"
#include "ncb/linearized.hpp"
#include "ncb/littlewood_paley.hpp"
#include "ncb/norms.hpp"

namespace ncb {

namespace {

CheckRow le(std::string anchor, std::string check, std::string label, double value, double bound) {
  CheckRow r{std::move(anchor), std::move(check), std::move(label), value, bound, "<=", value <= bound, ""};
  return r;
}

CheckRow ge(std::string anchor, std::string check, std::string label, double value, double bound) {
  CheckRow r{std::move(anchor), std::move(check), std::move(label), value, bound, ">=", value >= bound, ""};
  return r;
}

CheckRow info(std::string anchor, std::string check, std::string label, double value) {
  return {std::move(anchor), std::move(check), std::move(label), value, 0.0, "info", true, ""};
}

std::string params_label(const KernelParams& p) {
  std::ostringstream os;
  os << "gamma=" << p.gamma << " s=" << p.s;
  return os.str();
}

std::string grid_label(const Resolution& r) {
  std::ostringstream os;
  os << "N=" << r.points_per_axis << " r_cut=" << r.r_cut;
  return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

ScalarField gauss(const VelocityGrid& g, double cx, double cy, double w, double tilt = 0.0) {
  return ScalarField::from_function(g, [=](std::span<const double> v) {
    const double d2 = (v[0] - cx) * (v[0] - cx) + (v[1] - cy) * (v[1] - cy);
    return std::exp(-d2 / (2.0 * w * w)) * (1.0 + tilt * (v[0] - cx));
  });
}

// Null-projected micro part of a field, rescaled to unit L^2 norm.
ScalarField micro_unit(const ScalarField& f, const NullBasis& nb) {
  ScalarField m = project_null(f, nb).micro;
  m *= 1.0 / l2_norm(m);
  return m;
}

double nu_integral(const ScalarField& nu, const ScalarField& g) {
  double t = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) t += nu[i] * g[i] * g[i];
  return t * g.grid.cell_volume();
}

}  // namespace

bool all_pass(const std::vector<CheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

VelocityGrid Resolution::grid(int n) const { return VelocityGrid(n, r_cut, points_per_axis); }

SphereRule Resolution::rule(int n) const { return SphereRule::graded(n, angular_nodes, grading); }

Resolution Resolution::refined(int points) const {
  Resolution r = *this;
  r.points_per_axis = points;
  return r;
}

std::vector<std::pair<std::string, ScalarField>> bump_suite(const VelocityGrid& grid, int count) {
  std::vector<std::pair<std::string, ScalarField>> out;
  for (int k = 0; k < count; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / count;
    const double r = 0.4 * (k % 4);
    const double w = 0.7 + 0.1 * (k % 3);
    std::ostringstream os;
    os << "bump" << k;
    out.emplace_back(os.str(), gauss(grid, r * std::cos(ang), r * std::sin(ang), w, 0.2 * ((k % 2) ? 1 : -1)));
  }
  return out;
}

std::vector<ScalarField> random_smooth_suite(const VelocityGrid& grid, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<ScalarField> out;
  for (int k = 0; k < count; ++k) {
    const double cx = 0.8 * U(rng), cy = 0.8 * U(rng), w = 0.8 + 0.3 * std::abs(U(rng));
    const double a1 = 0.3 * U(rng), a2 = 0.3 * U(rng), a3 = 0.1 * U(rng);
    const double c2x = 1.5 * U(rng), c2y = 1.5 * U(rng), amp = 0.5 * U(rng);
    out.push_back(ScalarField::from_function(grid, [=](std::span<const double> v) {
      const double d1 = (v[0] - cx) * (v[0] - cx) + (v[1] - cy) * (v[1] - cy);
      const double d2 = (v[0] - c2x) * (v[0] - c2x) + (v[1] - c2y) * (v[1] - c2y);
      return std::exp(-d1 / (2 * w * w)) * (1.0 + a1 * v[0] + a2 * v[1] + a3 * v[0] * v[1]) + amp * std::exp(-d2);
    }));
  }
  return out;
}

std::vector<CheckRow> check_moments(const Resolution& res) {
  const VelocityGrid g = res.grid(2);
  const ScalarField mu = ScalarField::from_function(g, [](std::span<const double> v) { return maxwellian(v); });
  auto moment = [&](int power) {
    return integrate(mu, [power](std::span<const double> v) { return std::pow(norm2(v), power); });
  };
  const std::string lab = grid_label(res);
  return {le("8.2", "maxwellian mass |<1,mu> - 1|", lab, std::abs(moment(0) - 1.0), 1e-4),
          le("8.2", "second moment |<|v|^2,mu> - 2|", lab, std::abs(moment(1) - 2.0), 1e-3),
          le("8.2", "fourth moment |<|v|^4,mu> - 8|", lab, std::abs(moment(2) - 8.0), 1e-2)};
}

std::vector<CheckRow> check_kinematics(int samples, std::uint64_t seed) {
  std::vector<CheckRow> rows;
  for (int n : {2, 3}) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(n));
    std::normal_distribution<double> N01(0.0, 1.0);
    double mom = 0.0, en = 0.0, inv = 0.0;
    std::vector<double> v(n), vs(n), sig(n);
    for (int k = 0; k < samples; ++k) {
      double sn = 0.0;
      for (int d = 0; d < n; ++d) {
        v[d] = 3.0 * N01(rng);
        vs[d] = 3.0 * N01(rng);
        sig[d] = N01(rng);
        sn += sig[d] * sig[d];
      }
      for (double& x : sig) x /= std::sqrt(sn);
      const auto [vp, vsp] = post_collisional(v, vs, sig);
      const double scale_m = std::sqrt(norm2(v)) + std::sqrt(norm2(vs));
      const double scale_e = norm2(v) + norm2(vs);
      double dm = 0.0;
      for (int d = 0; d < n; ++d) dm = std::max(dm, std::abs(v[d] + vs[d] - vp[d] - vsp[d]));
      mom = std::max(mom, dm / scale_m);
      en = std::max(en, std::abs(norm2(v) + norm2(vs) - norm2(vp) - norm2(vsp)) / scale_e);
      // Back along the original relative direction.
      std::vector<double> k0(n);
      double kn = 0.0;
      for (int d = 0; d < n; ++d) {
        k0[d] = v[d] - vs[d];
        kn += k0[d] * k0[d];
      }
      for (double& x : k0) x /= std::sqrt(kn);
      const auto [vb, vsb] = post_collisional(vp, vsp, k0);
      double di = 0.0;
      for (int d = 0; d < n; ++d) di = std::max({di, std::abs(vb[d] - v[d]), std::abs(vsb[d] - vs[d])});
      inv = std::max(inv, di / scale_m);
    }
    const std::string lab = "n=" + std::to_string(n) + " samples=" + std::to_string(samples);
    rows.push_back(le("1.2", "momentum conservation (relative)", lab, mom, 1e-12));
    rows.push_back(le("1.2", "energy conservation (relative)", lab, en, 1e-12));
    rows.push_back(le("1.2", "pre-post involution (relative)", lab, inv, 1e-12));
  }
  return rows;
}

std::vector<CheckRow> check_representations(const KernelParams& p, const Resolution& base, int refined_points) {
  std::vector<CheckRow> rows;
  const SphereRule rule = base.rule(p.n);
  double worst_base = 0.0, worst_fine = 0.0;
  for (const Resolution& res : {base, base.refined(refined_points)}) {
    const VelocityGrid g = res.grid(p.n);
    const std::vector<std::array<ScalarField, 3>> triples{
        {gauss(g, 0.5, 0.0, 1.0), gauss(g, -0.3, 0.4, 1.2), gauss(g, 0.0, -0.5, 0.8)},
        {gauss(g, 0.0, 0.0, 1.0, 0.3), gauss(g, 0.0, 0.0, 1.0), gauss(g, 0.6, 0.6, 0.9)},
        {gauss(g, -0.5, 0.2, 0.9), gauss(g, 0.4, -0.4, 1.1, -0.2), gauss(g, 0.0, 0.3, 1.0)},
        {gauss(g, 1.0, 0.0, 1.0), gauss(g, -1.0, 0.0, 1.0), gauss(g, 0.0, 1.0, 1.0)},
        {gauss(g, 0.2, 0.2, 1.3), gauss(g, 0.0, -0.2, 0.8, 0.4), gauss(g, -0.4, 0.0, 1.2)}};
    double worst = 0.0;
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto& t = triples[k];
      const double s = trilinear_sigma(t[0], t[1], t[2], 0, p, rule).value;
      const double d = trilinear_dual(t[0], t[1], t[2], 0, p, rule).value;
      const double gap = rel(d, s);
      worst = std::max(worst, gap);
      CheckRow r = le("A.1", "sigma vs dual relative gap", "triple" + std::to_string(k) + " " + grid_label(res), gap,
                      res.points_per_axis == base.points_per_axis ? 0.02 : 0.02);
      std::ostringstream os;
      os << "sigma=" << s << " dual=" << d;
      r.detail = os.str();
      rows.push_back(r);
    }
    (res.points_per_axis == base.points_per_axis ? worst_base : worst_fine) = worst;
  }
  CheckRow shrink = le("A.1", "max gap after refinement <= max gap at baseline", params_label(p), worst_fine, worst_base);
  rows.push_back(shrink);
  for (int n : {2, 3}) {
    for (double tm : {0.05, 0.2}) {
      KernelParams q = p;
      q.n = n;
      const double m = regularized_b(q, tm).moment();
      std::ostringstream os;
      os << "n=" << n << " theta_min=" << tm;
      rows.push_back(le("3.2", "regularized b_eps moment", os.str(), std::abs(m), 1e-10));
    }
  }
  return rows;
}

std::vector<CheckRow> check_form_identity(const KernelParams& p, const Resolution& res, int count, std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  const ScalarField nu = nu_tilde_field(g, p, rule);
  const auto suite = random_smooth_suite(g, count, seed);
  for (std::size_t k = 0; k < suite.size(); ++k) {
    const ScalarField& f = suite[k];
    const double lhs = inner(n_apply(f, p, rule), f);
    const double rhs = b_seminorm(f, 0, p, rule) + nu_integral(nu, f);
    CheckRow r = le("2.1", "<N g,g> vs |g|_B^2 + int nu g^2 (relative)", "g" + std::to_string(k), rel(rhs, lhs), 0.01);
    std::ostringstream os;
    os << "lhs=" << lhs << " rhs=" << rhs;
    r.detail = os.str();
    rows.push_back(r);
  }
  return rows;
}

std::vector<CheckRow> check_linearized_structure(const KernelParams& p, const Resolution& res) {
  const VelocityGrid g = res.grid(p.n);
  AssembleOptions opt;
  opt.keep_parts = false;
  const OperatorMatrix m = assemble(g, p, res.rule(p.n), opt);
  const Eigen::VectorXd ev = eigenvalues(m);
  const double nrm = ev.cwiseAbs().maxCoeff();
  const int dim = p.n + 2;
  int near_zero = 0;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (std::abs(ev(k)) < 1e-3 * nrm) ++near_zero;
  double small = 0.0;
  for (int k = 0; k < dim; ++k) small = std::max(small, std::abs(ev(k)));
  const std::string lab = params_label(p) + " " + grid_label(res);
  std::vector<CheckRow> rows;
  rows.push_back(ge("2.12", "min eigenvalue / spectral norm", lab, ev(0) / nrm, -1e-6));
  rows.push_back(le("2.12", "near-zero eigenvalue count", lab, near_zero, dim));
  rows.back().pass = near_zero == dim;
  rows.back().relation = "==";
  rows.push_back(ge("2.12", "gap ratio lambda_5 / max |lambda_1..4|", lab, ev(dim) / std::max(small, 1e-300), 10.0));
  rows.push_back(info("2.12", "form asymmetry", lab, m.asymmetry));
  rows.push_back(info("2.12", "smallest positive eigenvalue", lab, ev(dim)));
  return rows;
}

std::vector<CheckRow> check_coercivity(const KernelParams& p, const Resolution& res, int refined_points, int count) {
  std::vector<CheckRow> rows;
  std::vector<double> d0, cu;
  for (const Resolution& r : {res, res.refined(refined_points)}) {
    const VelocityGrid g = r.grid(p.n);
    AssembleOptions opt;
    opt.keep_parts = false;
    const OperatorMatrix m = assemble(g, p, r.rule(p.n), opt);
    const NullBasis nb = NullBasis::make(g);
    std::vector<ScalarField> suite;
    for (auto& [label, f] : bump_suite(g, count / 2)) suite.push_back(f);
    for (auto& f : random_smooth_suite(g, count - count / 2, 7)) suite.push_back(f);
    suite.push_back(ScalarField::from_function(g, [](std::span<const double> v) { return sqrt_maxwellian(v); }));
    const CoercivityResult c = coercivity_probe(suite, m, nb);
    const std::string lab = params_label(p) + " " + grid_label(r);
    rows.push_back(ge("8.1", "delta0 = min <Lg,g> / |(I-P)g|_N^2", lab, c.delta0, 1e-6));
    rows.push_back(le("8.1", "negative Rayleigh values", lab, c.negative, 0));
    rows.push_back(ge("8.1", "null-space members skipped", lab, c.skipped, 1));
    rows.push_back(info("8.1", "C_upper = max ratio", lab, c.C_upper));
    d0.push_back(c.delta0);
    cu.push_back(c.C_upper);
  }
  rows.push_back(le("8.1", "delta0 resolution change (relative)", params_label(p), rel(d0[1], d0[0]), 0.25));
  rows.push_back(le("8.1", "C_upper resolution change (relative)", params_label(p), rel(cu[1], cu[0]), 0.25));
  return rows;
}

std::vector<CheckRow> check_norm_equivalence(const KernelParams& p, const Resolution& base, int refined_points) {
  constexpr double c1 = 0.01, c2 = 2.0;
  std::vector<CheckRow> rows;
  std::vector<std::vector<double>> ratios;
  for (const Resolution& res : {base, base.refined(refined_points)}) {
    const VelocityGrid g = res.grid(p.n);
    const SphereRule rule = res.rule(p.n);
    const NormConfig nc = NormConfig::from(p);
    std::vector<double> rs;
    for (auto& [label, f] : bump_suite(g, 10)) {
      const double r = inner(n_apply(f, p, rule), f) / nsg_parts(f, nc).total;
      rows.push_back(ge("2.7", "<N g,g>/|g|_N^2 lower", label + " " + params_label(p) + " " + grid_label(res), r, c1));
      rows.push_back(le("2.7", "<N g,g>/|g|_N^2 upper", label + " " + params_label(p) + " " + grid_label(res), r, c2));
      rs.push_back(r);
    }
    ratios.push_back(rs);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < ratios[0].size(); ++k) worst = std::max(worst, rel(ratios[1][k], ratios[0][k]));
  rows.push_back(le("2.7", "ratio change under refinement (relative)", params_label(p), worst, 0.2));
  return rows;
}

std::vector<CheckRow> check_sandwich(const KernelParams& p, const Resolution& res, bool outward_trend) {
  constexpr double bound = 10.0;
  std::vector<CheckRow> rows;
  const VelocityGrid g = res.grid(p.n);
  const auto sr = sandwich_ratios(bump_suite(g, 10), p);
  double lo = 0.0, up = 0.0;
  for (const auto& r : sr) {
    lo = std::max(lo, r.lower_ratio);
    up = std::max(up, r.upper_ratio);
  }
  const std::string lab = params_label(p) + " " + grid_label(res);
  rows.push_back(le("2.15", "max |g|_{H^s_gamma}/|g|_N", lab, lo, bound));
  rows.push_back(le("2.15", "max |g|_N/|g|_{H^s_{gamma+2s}}", lab, up, bound));
  if (outward_trend) {
    std::vector<std::pair<std::string, ScalarField>> out;
    for (double r : {0.0, 1.5, 3.0, 4.5}) out.emplace_back("r=" + std::to_string(r).substr(0, 3), gauss(g, r, 0.0, 0.6));
    const auto tr = sandwich_ratios(out, p);
    double up_min = tr.front().upper_ratio, up_max = up_min;
    bool growing = true;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      rows.push_back(info("2.15", "outward bump |g|_{H^s_gamma}/|g|_N", tr[k].label, tr[k].lower_ratio));
      rows.push_back(info("2.15", "outward bump |g|_N/|g|_{H^s_{gamma+2s}}", tr[k].label, tr[k].upper_ratio));
      if (k > 0 && !(tr[k].lower_ratio < tr[k - 1].lower_ratio)) growing = false;
      up_min = std::min(up_min, tr[k].upper_ratio);
      up_max = std::max(up_max, tr[k].upper_ratio);
    }
    const double spread = up_max / up_min;
    rows.push_back(le("2.15", "second ratio spread, max/min", lab, spread, 3.0));
    CheckRow gr = ge("2.15", "|g|_N/|g|_{H^s_gamma} growth, last/first", lab,
                     tr.front().lower_ratio / tr.back().lower_ratio, spread);
    gr.pass = gr.pass && growing;
    gr.detail = growing ? "monotone, exceeds second ratio spread" : "not monotone";
    rows.push_back(gr);
  }
  return rows;
}

std::vector<CheckRow> check_lp(int M, double R, const Resolution& res, int j_lo, int j_hi) {
  std::vector<CheckRow> rows;
  const LPBasis b = build_basis(M, R, 2);
  const LPBasis b3 = build_basis(M + 1, R / 4.0, 2);
  const VelocityGrid g = res.grid(2);
  for (double r : {0.0, 1.0, 3.0}) {
    const std::vector<double> v{r, 0.5 * r};
    const std::string lab = "v=(" + std::to_string(r).substr(0, 3) + "," + std::to_string(0.5 * r).substr(0, 3) + ")";
    rows.push_back(le("5.1", "|int phi(I_v u) du - 1|", lab, normalization_residual(b, v), 1e-8));
    double mom = 0.0;
    for (std::vector<int> e : {std::vector<int>{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}})
      for (int axis = -1; axis <= 2; ++axis) mom = std::max(mom, std::abs(hyperplane_moment(b, true, v, e, axis)));
    rows.push_back(le("5.1", "max psi moment, degree <= 2, derivative order <= 1", lab, mom, 1e-8));
  }
  const QjDecay d2 = qj_one_decay(b, g, j_lo, j_hi);
  const QjDecay d3 = qj_one_decay(b3, g, j_lo, j_hi);
  std::ostringstream lab;
  lab << "M=" << M << " j=" << j_lo << ".." << j_hi;
  rows.push_back(le("5.4", "log2 slope of sup|Q_j(1)|", lab.str(), d2.slope, -1.7));
  std::ostringstream lab3;
  lab3 << "M=" << M + 1 << " j=" << j_lo << ".." << j_hi;
  rows.push_back(info("5.4", "log2 slope of sup|Q_j(1)|", lab3.str(), d3.slope));
  const std::size_t last = d2.sup.size() - 1;
  const double tail2 = std::log2(d2.sup[last] / d2.sup[last - 1]);
  const double tail3 = std::log2(d3.sup[last] / d3.sup[last - 1]);
  rows.push_back(le("5.4", "larger M does not worsen: last-scale slope", lab3.str(), tail3, tail2 + 0.1));
  double worse = 0.0;
  for (std::size_t k = 0; k < d2.sup.size(); ++k) worse = std::max(worse, d3.sup[k] / d2.sup[k]);
  rows.push_back(le("5.4", "larger M does not worsen: max sup ratio", lab3.str(), worse, 1.0));
  return rows;
}

std::vector<CheckRow> check_square_function(int M, double R, const Resolution& base, int refined_points) {
  constexpr double lo = 0.05, hi = 2.0;
  constexpr double rho = 0.5, s = 0.25;
  std::vector<CheckRow> rows;
  const LPBasis b = build_basis(M, R, 2);
  std::vector<std::vector<double>> ratios;
  for (const Resolution& res : {base, base.refined(refined_points)}) {
    const VelocityGrid g = res.grid(2);
    const int jm = std::min(2, LPProjector::max_resolvable(g));
    std::vector<double> rs;
    for (auto& [label, f] : bump_suite(g, 10)) {
      const SquareFunction sf = square_function(f, rho, s, b, jm);
      rows.push_back(ge("5.4", "square function / norm lower", label + " " + grid_label(res), sf.ratio, lo));
      rows.push_back(le("5.4", "square function / norm upper", label + " " + grid_label(res), sf.ratio, hi));
      rs.push_back(sf.ratio);
    }
    ratios.push_back(rs);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < ratios[0].size(); ++k) worst = std::max(worst, rel(ratios[1][k], ratios[0][k]));
  rows.push_back(le("5.4", "square function ratio change under refinement", "10 bumps", worst, 0.2));
  return rows;
}

std::vector<CheckRow> check_carleman(const KernelParams& p, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> ratios;
  const int n = p.n;
  std::vector<double> v(n), vp(n);
  while (static_cast<int>(ratios.size()) < samples) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      v[d] = 5.0 * U(rng);
      r2 += v[d] * v[d];
    }
    if (r2 > 25.0) continue;
    double u2 = 0.0;
    for (int d = 0; d < n; ++d) {
      const double u = U(rng);
      vp[d] = v[d] + u;
      u2 += u * u;
    }
    const double dist = std::sqrt(u2);
    if (dist > 1.0 || dist < 1e-3) continue;
    if (std::abs(norm2(v) - norm2(vp)) > dist) continue;
    const double K = carleman_K(v, vp, p);
    const double dd = metric_d(v, vp);
    ratios.push_back(K * std::pow(dd, n + 2.0 * p.s) / std::pow(bracket(vp), p.gamma + 2.0 * p.s + 1.0));
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  const std::string lab = params_label(p) + " pairs=" + std::to_string(samples);
  std::vector<CheckRow> rows;
  rows.push_back(info("7.3", "median K d^{n+2s} / <v'>^{gamma+2s+1}", lab, med));
  rows.push_back(ge("7.3", "min ratio / median", lab, sorted.front() / med, 0.1));
  return rows;
}

std::vector<CheckRow> check_gap(const std::vector<KernelParams>& params, const Resolution& res,
                                const std::vector<double>& radii) {
  std::vector<CheckRow> rows;
  const auto table = gap_dichotomy_scan(params, radii, res.grid(2), res.rule(2));
  for (const GapRow& g : table) {
    const double target = g.params.gamma + 2.0 * g.params.s;
    const std::string lab = params_label(g.params) + " " + grid_label(res);
    CheckRow c = info("2.13", "classification", lab, g.slope);
    c.detail = g.classification;
    rows.push_back(c);
    rows.push_back(info("2.13", "min Rayleigh quotient", lab, g.min_quotient));
    if (target > 0.0) {
      CheckRow r = ge("2.13", "gap: quotients bounded below", lab, g.min_quotient, 1e-3);
      r.pass = r.pass && g.classification == "gap";
      r.detail = g.classification;
      rows.push_back(r);
    } else if (target < 0.0) {
      CheckRow r = info("2.13", "no-gap: fitted slope vs gamma+2s", lab, g.slope);
      r.relation = "in";
      r.bound = target;
      r.pass = g.classification == "no-gap" && g.slope_matches;
      std::ostringstream os;
      os << g.classification << "; window [" << 1.25 * target << ", " << 0.75 * target << "]";
      r.detail = os.str();
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<CheckRow> check_decay_hard(const KernelParams& p, const Resolution& res, double dt, double t_end) {
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  AssembleOptions ao;
  ao.conservative = true;
  ao.keep_parts = false;
  const OperatorMatrix m = assemble(g, p, rule, ao);
  const Eigen::VectorXd ev = eigenvalues(m);
  const double lam = ev(p.n + 2);
  const NullBasis nb = NullBasis::make(g);
  const ScalarField f0 = micro_unit(gauss(g, 0.3, -0.2, 1.1, 0.5), nb);
  const Stepper st(m, rule, {dt, false});
  State s = State::homogeneous(f0);
  std::vector<double> ts, ns;
  const int K = static_cast<int>(std::lround(t_end / dt));
  for (int k = 0; k <= K; ++k) {
    ts.push_back(s.t);
    ns.push_back(std::sqrt(g.cell_volume()) * s.f.norm());
    if (k < K) s = st.step(s);
  }
  const DecayFit fit = decay_fit(ts, ns, Regime::hard, std::min(2.0, 0.2 * t_end), t_end);
  const std::string lab = params_label(p) + " " + grid_label(res);
  std::vector<CheckRow> rows;
  CheckRow r = le("1.1", "decay rate vs smallest positive eigenvalue (relative)", lab, rel(fit.rate, lam), 0.05);
  std::ostringstream os;
  os << "rate=" << fit.rate << " lambda=" << lam << " window=[" << fit.t_lo << "," << fit.t_hi << "]";
  r.detail = os.str();
  rows.push_back(r);
  rows.push_back(ge("1.1", "R^2 of log-linear fit", lab, fit.r2, 0.99));
  bool mono = true;
  for (std::size_t k = 1; k < ns.size(); ++k)
    if (ns[k] > ns[k - 1] * (1.0 + 1e-12)) mono = false;
  CheckRow mr = info("2.3", "L^2 norm non-increasing", lab, mono ? 1.0 : 0.0);
  mr.pass = mono;
  rows.push_back(mr);
  return rows;
}

std::vector<CheckRow> check_decay_soft(const KernelParams& p, const Resolution& res, double dt, double t_end,
                                       double extra_weight) {
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  AssembleOptions ao;
  ao.conservative = true;
  ao.keep_parts = false;
  ao.max_asymmetry = 0.25;
  const OperatorMatrix m = assemble(g, p, rule, ao);
  const NullBasis nb = NullBasis::make(g);
  // Data in L^2 with `extra_weight` powers of w = <v>^{-(gamma+2s)} to spare.
  const double decay = 1.0 + extra_weight * -(p.gamma + 2.0 * p.s) + 0.1;
  const ScalarField f0 = micro_unit(ScalarField::from_function(g, [&](std::span<const double> v) {
    return std::pow(1.0 + norm2(v), -0.5 * decay) * (1.0 + 0.3 * v[0]);
  }), nb);
  const Stepper st(m, rule, {dt, false});
  State s = State::homogeneous(f0);
  std::vector<double> ts, ns;
  const int K = static_cast<int>(std::lround(t_end / dt));
  for (int k = 0; k <= K; ++k) {
    ts.push_back(s.t);
    ns.push_back(std::sqrt(g.cell_volume()) * s.f.norm());
    if (k < K) s = st.step(s);
  }
  const DecayFit fit = decay_fit(ts, ns, Regime::soft, 1.0, t_end);
  const std::string lab = params_label(p) + " " + grid_label(res);
  std::vector<CheckRow> rows;
  CheckRow r = le("1.2", "log-log decay slope", lab, fit.rate, -1.0);
  std::ostringstream os;
  os << "window=[" << fit.t_lo << "," << fit.t_hi << "] kappa=" << fit.curvature << " R2=" << fit.r2
     << " form_asymmetry=" << m.asymmetry;
  r.detail = os.str();
  rows.push_back(r);
  rows.push_back(ge("1.2", "R^2 of log-log fit", lab, fit.r2, 0.9));
  rows.push_back(info("1.2", "fit window end", lab, fit.t_hi));
  return rows;
}

std::vector<CheckRow> check_entropy(const KernelParams& p, const Resolution& res, int count, std::uint64_t seed) {
  std::vector<CheckRow> rows;
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  const ScalarField mu = ScalarField::from_function(g, [](std::span<const double> v) { return maxwellian(v); });
  const EntropyResult em = entropy(mu, p, rule);
  const double H_exact = 0.5 * p.n * (1.0 + std::log(2.0 * std::numbers::pi));
  const double qerr = std::max(std::abs(em.H - H_exact), 1e-15);
  CheckRow r = le("2.6", "|D(mu)| vs 10x quadrature error", grid_label(res), std::abs(em.D), 10.0 * qerr);
  std::ostringstream os;
  os << "quadrature error (entropy of mu) = " << qerr;
  r.detail = os.str();
  rows.push_back(r);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k < count; ++k) {
    const double a = 0.5 * U(rng), bx = U(rng), by = U(rng), w = 0.7 + 0.3 * std::abs(U(rng));
    const ScalarField F = ScalarField::from_function(g, [=](std::span<const double> v) {
      const double d2 = (v[0] - bx) * (v[0] - bx) + (v[1] - by) * (v[1] - by);
      return maxwellian(v) * (1.0 + a * std::exp(-d2 / (2 * w * w)));
    });
    rows.push_back(ge("2.6", "entropy production D(F)", "F" + std::to_string(k), entropy(F, p, rule).D, -1e-8));
  }
  return rows;
}

std::vector<CheckRow> check_entropy_run(const KernelParams& p, const Resolution& res, int steps, double dt) {
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  AssembleOptions ao;
  ao.conservative = true;
  ao.keep_parts = false;
  const OperatorMatrix m = assemble(g, p, rule, ao);
  const NullBasis nb = NullBasis::make(g);
  ScalarField f0 = micro_unit(gauss(g, 0.5, 0.0, 1.0), nb);
  f0 *= 0.05;
  const Stepper st(m, rule, {dt, true});
  State s = State::homogeneous(f0);
  EnergyOptions eo;
  eo.dissipation = false;
  std::vector<EnergySample> es{energy_sample(s, p, eo)};
  for (int k = 0; k < steps; ++k) {
    s = st.step(s);
    es.push_back(energy_sample(s, p, eo));
  }
  const EnergyReport rep = energy_track(es);
  const std::string lab = params_label(p) + " " + grid_label(res) + " steps=" + std::to_string(steps);
  CheckRow r = le("2.6", "largest per-step entropy drop", lab, rep.worst_H_drop, 1e-6);
  r.pass = r.pass && rep.H_monotone;
  std::ostringstream os;
  os << "H(0)=" << es.front().H << " H(T)=" << es.back().H;
  r.detail = os.str();
  return {r};
}

std::vector<CheckRow> check_macro(const KernelParams& p, const Resolution& res, int nx, double dt, double t_end) {
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  AssembleOptions ao;
  ao.conservative = true;
  ao.keep_parts = false;
  const OperatorMatrix m = assemble(g, p, rule, ao);
  std::vector<CheckRow> rows;
  std::vector<MacroResiduals> res_lv;
  double worst_mean = 0.0;
  for (int lvl = 0; lvl < 3; ++lvl) {
    const int nxl = nx << lvl;
    const double dtl = dt / (1 << lvl);
    std::vector<ScalarField> slices;
    for (int ix = 0; ix < nxl; ++ix) {
      const double x = 2.0 * std::numbers::pi * ix / nxl;
      slices.push_back(ScalarField::from_function(g, [&](std::span<const double> v) {
        const double M = sqrt_maxwellian(v);
        const double r2 = norm2(v);
        return 0.02 * (std::cos(x) * (1.0 + v[0] + 0.5 * r2) * M + std::sin(x) * v[1] * M +
                       std::cos(2.0 * x) * std::exp(-r2) * v[0] * v[1]);
      }));
    }
    State s = State::transport(slices);
    const Stepper st(m, rule, {dtl, false});
    const int K = static_cast<int>(std::lround(t_end / dtl));
    State prev = s, mid = s;
    for (int k = 0; k <= K; ++k) {
      State next = st.step(mid);
      const MacroFields mf = macro_extract(next);
      worst_mean = std::max({worst_mean, std::abs(mf.mean_a()), std::abs(mf.mean_b(0)), std::abs(mf.mean_b(1)),
                             std::abs(mf.mean_c())});
      prev = std::move(mid);
      mid = std::move(next);
      if (k == K - 1) {
        State last = st.step(mid);
        res_lv.push_back(macro_residuals(prev, mid, last));
        break;
      }
    }
  }
  const std::string lab = params_label(p) + " " + grid_label(res);
  rows.push_back(le("8.5", "max |spatial mean| of a, b, c", lab, worst_mean, 1e-8));
  for (std::size_t l = 0; l < res_lv.size(); ++l) {
    std::ostringstream os;
    os << "nx=" << (nx << l) << " dt=" << dt / (1 << l);
    rows.push_back(info("8.16", "residual a law", os.str(), res_lv[l].a));
    rows.push_back(info("8.17", "residual b law", os.str(), res_lv[l].b));
    rows.push_back(info("8.18", "residual c law", os.str(), res_lv[l].c));
  }
  for (std::size_t l = 1; l < res_lv.size(); ++l) {
    std::ostringstream os;
    os << "halving " << l;
    rows.push_back(ge("8.16", "observed order, a law", os.str(), std::log2(res_lv[l - 1].a / res_lv[l].a), 0.9));
    rows.push_back(ge("8.17", "observed order, b law", os.str(), std::log2(res_lv[l - 1].b / res_lv[l].b), 0.9));
    rows.push_back(ge("8.18", "observed order, c law", os.str(), std::log2(res_lv[l - 1].c / res_lv[l].c), 0.9));
  }
  return rows;
}

std::vector<CheckRow> check_picard(const KernelParams& p, const Resolution& res, double amplitude, double T_star,
                                   int steps) {
  const VelocityGrid g = res.grid(p.n);
  const SphereRule rule = res.rule(p.n);
  AssembleOptions ao;
  ao.conservative = true;
  const OperatorMatrix m = assemble(g, p, rule, ao);
  const NullBasis nb = NullBasis::make(g);
  ScalarField f0 = micro_unit(gauss(g, 0.5, 0.0, 1.0), nb);
  f0 *= amplitude;
  PicardOptions po;
  po.T_star = T_star;
  po.steps = steps;
  po.m_max = 8;
  po.tol = 1e-9;
  const PicardResult pr = picard(f0, m, rule, po);
  const std::string lab = params_label(p) + " " + grid_label(res);
  std::vector<CheckRow> rows;
  const double E0 = inner(f0, f0);
  const double supG = *std::max_element(pr.G.begin(), pr.G.end());
  CheckRow gb = le("8.3", "sup_m G(f^m) / |f0|^2", lab, supG / E0, po.G_factor * pr.G.front() / E0);
  gb.pass = gb.pass && !pr.diverged;
  rows.push_back(gb);
  double worst = 0.0;
  for (std::size_t k = 2; k < pr.diffs.size(); ++k) worst = std::max(worst, pr.diffs[k] / pr.diffs[k - 1]);
  CheckRow ct = le("8.3", "worst successive-difference contraction factor", lab, worst, 0.5);
  ct.pass = ct.pass && pr.diffs.size() >= 4;
  rows.push_back(ct);
  CheckRow cv = info("8.3", "picard iterations", lab, pr.iterations);
  cv.pass = pr.converged;
  rows.push_back(cv);
  const Stepper st(m, rule, {T_star / steps, true});
  State s = State::homogeneous(f0);
  for (int k = 0; k < steps; ++k) s = st.step(s);
  const ScalarField direct = s.slice(0);
  rows.push_back(le("8.3", "picard limit vs direct nonlinear stepping at T*", lab,
                    l2_norm(direct - pr.final_state) / l2_norm(direct), 0.02));
  return rows;
}

}  // namespace ncb
