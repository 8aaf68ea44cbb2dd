#include "ncb/evolution.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/norms.hpp"

namespace ncb {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vec(const ScalarField& f) {
  return {f.values.data(), static_cast<Eigen::Index>(f.size())};
}

ScalarField to_field(const VelocityGrid& g, const Eigen::VectorXd& x) {
  return ScalarField(g, std::vector<double>(x.data(), x.data() + x.size()));
}

// Removes the null-space component: (I - P) x.
void project_micro(Eigen::Ref<Eigen::VectorXd> x, const NullBasis& nb, double hn) {
  x -= hn * nb.E * (nb.E.transpose() * x);
}

double power_norm(const Eigen::MatrixXd& A) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd y = A * x;
    const double nl = y.norm();
    if (nl == 0.0) return 0.0;
    const bool done = std::abs(nl - lam) <= 1e-10 * nl;
    lam = nl;
    x = y / nl;
    if (done) break;
  }
  return lam;
}

}  // namespace

State State::homogeneous(const ScalarField& f0) {
  f0.check_finite();
  State s;
  s.grid = f0.grid;
  s.mode = Mode::homogeneous;
  s.f = as_vec(f0);
  return s;
}

State State::transport(const std::vector<ScalarField>& slices) {
  if (slices.size() < 4) throw DomainError("transport mode needs at least 4 torus points");
  State s;
  s.grid = slices.front().grid;
  s.mode = Mode::transport;
  s.f.resize(static_cast<Eigen::Index>(s.grid.size()), static_cast<Eigen::Index>(slices.size()));
  for (std::size_t ix = 0; ix < slices.size(); ++ix) {
    if (!(slices[ix].grid == s.grid)) throw DomainError("torus slices on different grids");
    slices[ix].check_finite();
    s.f.col(static_cast<Eigen::Index>(ix)) = as_vec(slices[ix]);
  }
  return s;
}

double State::dx() const { return mode == Mode::transport ? 2.0 * std::numbers::pi / nx() : 1.0; }

ScalarField State::slice(int ix) const { return to_field(grid, f.col(ix)); }

void State::check_finite() const {
  if (!f.allFinite()) throw NumericalError("non-finite values in state at t = " + std::to_string(t));
}

Stepper::Stepper(const OperatorMatrix& m, const SphereRule& rule, StepperOptions opt)
    : m_(&m), rule_(&rule), opt_(opt) {
  if (!(opt_.dt > 0.0)) throw DomainError("dt must be positive");
  if (opt_.scheme == Scheme::implicit_euler) {
    Eigen::MatrixXd A = m.L;
    A *= opt_.dt;
    A.diagonal().array() += 1.0;
    lu_.compute(A);
    const double rc = lu_.rcond();
    if (!(rc > 1e-14)) {
      std::ostringstream os;
      os << "implicit Euler matrix is singular to working precision (rcond " << rc << ")";
      throw NumericalError(os.str());
    }
  } else {
    const double lmax = power_norm(m.L);
    const double bound = lmax > 0.0 ? 2.0 / lmax : std::numeric_limits<double>::infinity();
    if (opt_.dt > 0.9 * bound) {
      substeps_ = static_cast<int>(std::ceil(opt_.dt / (0.9 * bound)));
      std::ostringstream os;
      os << "explicit step dt = " << opt_.dt << " exceeds the stability bound " << bound
         << "; reduced to " << opt_.dt / substeps_ << " (" << substeps_ << " substeps)";
      cfl_note_ = os.str();
    }
  }
}

void Stepper::collide(Eigen::MatrixXd& f) const {
  const OperatorMatrix& m = *m_;
  const double hn = m.grid.cell_volume();
  NullBasis nb;
  if (opt_.nonlinear && m.conservative) nb = NullBasis::make(m.grid);
  auto source = [&](const Eigen::VectorXd& x) {
    const ScalarField g = to_field(m.grid, x);
    Eigen::VectorXd q = as_vec(gamma_apply(g, g, m.params, *rule_));
    if (m.conservative) project_micro(q, nb, hn);
    return q;
  };
  for (Eigen::Index ix = 0; ix < f.cols(); ++ix) {
    if (opt_.scheme == Scheme::implicit_euler) {
      Eigen::VectorXd rhs = f.col(ix);
      if (opt_.nonlinear) rhs += opt_.dt * source(f.col(ix));
      f.col(ix) = lu_.solve(rhs);
    } else {
      const double h = opt_.dt / substeps_;
      for (int k = 0; k < substeps_; ++k) {
        Eigen::VectorXd x = f.col(ix);
        Eigen::VectorXd d = -(m.L * x);
        if (opt_.nonlinear) d += source(x);
        f.col(ix) = x + h * d;
      }
    }
  }
}

State Stepper::step(const State& s) const {
  if (!(s.grid == m_->grid)) throw DomainError("state grid differs from matrix grid");
  State out = s;
  if (s.mode == Mode::transport) advect(out, 0.5 * opt_.dt);
  collide(out.f);
  if (s.mode == Mode::transport) advect(out, 0.5 * opt_.dt);
  out.t = s.t + opt_.dt;
  out.check_finite();
  return out;
}

State step(const State& s, double dt, bool nonlinear, const OperatorMatrix& m, const SphereRule& rule) {
  return Stepper(m, rule, {dt, nonlinear, Scheme::implicit_euler}).step(s);
}

void advect(State& s, double tau) {
  if (s.mode != Mode::transport) return;
  const int nx = s.nx();
  Eigen::FFT<double> fft;
  std::vector<double> row(nx), back(nx);
  std::vector<std::complex<double>> spec;
  std::vector<double> v(s.grid.n());
  for (Eigen::Index i = 0; i < s.f.rows(); ++i) {
    s.grid.node(static_cast<std::size_t>(i), v.data());
    for (int ix = 0; ix < nx; ++ix) row[ix] = s.f(i, ix);
    fft.fwd(spec, row);
    // f(x - v1 tau): mode k picks up exp(-i k v1 tau). Eigen returns the full spectrum.
    for (int k = 0; k < nx; ++k) {
      const int kk = k <= nx / 2 ? k : k - nx;
      const double ph = -kk * v[0] * tau;
      if (nx % 2 == 0 && k == nx / 2) {
        spec[k] *= std::cos(ph);
      } else {
        spec[k] *= std::complex<double>(std::cos(ph), std::sin(ph));
      }
    }
    fft.inv(back, spec);
    for (int ix = 0; ix < nx; ++ix) s.f(i, ix) = back[ix];
  }
}

double MacroFields::mean_a() const {
  double t = 0.0;
  for (double x : a) t += x;
  return t / static_cast<double>(a.size());
}

double MacroFields::mean_c() const {
  double t = 0.0;
  for (double x : c) t += x;
  return t / static_cast<double>(c.size());
}

double MacroFields::mean_b(int d) const {
  double t = 0.0;
  for (double x : b.at(d)) t += x;
  return t / static_cast<double>(b.at(d).size());
}

MacroFields macro_extract(const State& s) {
  const NullBasis nb = NullBasis::make(s.grid);
  const int n = s.grid.n();
  const Eigen::MatrixXd coef = nb.gram.llt().solve(s.grid.cell_volume() * (nb.raw.transpose() * s.f));
  MacroFields m;
  m.b.assign(n, {});
  for (Eigen::Index ix = 0; ix < coef.cols(); ++ix) {
    m.a.push_back(coef(0, ix));
    for (int d = 0; d < n; ++d) m.b[d].push_back(coef(d + 1, ix));
    m.c.push_back(coef(n + 1, ix));
  }
  return m;
}

double MacroResiduals::max() const { return std::max({a, b, c}); }

MacroResiduals macro_residuals(const State& prev, const State& mid, const State& next) {
  if (!(prev.grid == mid.grid && mid.grid == next.grid)) throw DomainError("states on different grids");
  const double dt2 = next.t - prev.t;
  if (!(dt2 > 0.0)) throw DomainError("states must be ordered in time");
  const NullBasis nb = NullBasis::make(mid.grid);
  const int n = mid.grid.n();
  const double hn = mid.grid.cell_volume();
  // Moments m_k = <raw_k, f> obey d_t m_k + d_x <v_1 raw_k, f> = 0 exactly; the a, b, c laws
  // are the same system after inverting the Gram matrix.
  Eigen::MatrixXd flux_basis = nb.raw;
  std::vector<double> v(n);
  for (Eigen::Index i = 0; i < flux_basis.rows(); ++i) {
    mid.grid.node(static_cast<std::size_t>(i), v.data());
    flux_basis.row(i) *= v[0];
  }
  const Eigen::MatrixXd dm = hn * nb.raw.transpose() * (next.f - prev.f) / dt2;
  Eigen::MatrixXd flux = hn * flux_basis.transpose() * mid.f;
  Eigen::MatrixXd r = dm;
  if (mid.mode == Mode::transport) {
    const int nx = mid.nx();
    const double dx = mid.dx();
    for (int ix = 0; ix < nx; ++ix) {
      const int ip = (ix + 1) % nx, im = (ix + nx - 1) % nx;
      r.col(ix) += (flux.col(ip) - flux.col(im)) / (2.0 * dx);
    }
  }
  const Eigen::MatrixXd res = nb.gram.llt().solve(r);
  const double w = std::sqrt(mid.dx());
  MacroResiduals out;
  out.a = w * res.row(0).norm();
  out.b = w * res.middleRows(1, n).colwise().norm().norm();
  out.c = w * res.row(n + 1).norm();
  return out;
}

Eigen::MatrixXd micro_coefficients(const State& s) {
  const VelocityGrid& g = s.grid;
  const int n = g.n();
  const int dim = 2 * n + n * (n - 1) / 2 + n + 1;
  Eigen::MatrixXd e(static_cast<Eigen::Index>(g.size()), dim);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, v.data());
    const double m = sqrt_maxwellian(v);
    double v2 = 0.0;
    for (double x : v) v2 += x * x;
    int col = 0;
    const auto r = static_cast<Eigen::Index>(i);
    for (int d = 0; d < n; ++d) e(r, col++) = v[d] * v2 * m;
    for (int d = 0; d < n; ++d) e(r, col++) = v[d] * v[d] * m;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) e(r, col++) = v[a] * v[b] * m;
    for (int d = 0; d < n; ++d) e(r, col++) = v[d] * m;
    e(r, col) = m;
  }
  const double hn = g.cell_volume();
  const NullBasis nb = NullBasis::make(g);
  Eigen::MatrixXd micro = s.f;
  for (Eigen::Index ix = 0; ix < micro.cols(); ++ix) project_micro(micro.col(ix), nb, hn);
  const Eigen::MatrixXd gram = hn * e.transpose() * e;
  return gram.ldlt().solve(hn * e.transpose() * micro);
}

Interaction interaction_functionals(const State& s) {
  Interaction out;
  if (s.mode != Mode::transport) return out;
  const int n = s.grid.n();
  const int nx = s.nx();
  const double dx = s.dx();
  const MacroFields mf = macro_extract(s);
  const Eigen::MatrixXd r = micro_coefficients(s);
  const int row_c1 = 0;
  const int row_b1 = 2 * n + n * (n - 1) / 2;
  auto d1 = [&](auto&& at, int ix) {
    return (at((ix + 1) % nx) - at((ix + nx - 1) % nx)) / (2.0 * dx);
  };
  for (int ix = 0; ix < nx; ++ix) {
    const double a = mf.a[ix];
    const double db1 = d1([&](int k) { return mf.b[0][k]; }, ix);
    const double drb1 = d1([&](int k) { return r(row_b1, k); }, ix);
    out.Ia += dx * (db1 + drb1) * a;
    const double dc = d1([&](int k) { return mf.c[k]; }, ix);
    out.Ic -= dx * r(row_c1, ix) * dc;
    // r_{1i} sits in the off-diagonal block at position i - 1 for the pair (0, i).
    for (int i = 1; i < n; ++i) {
      const int row = 2 * n + (i - 1);
      const double dri = d1([&](int k) { return r(row, k); }, ix);
      out.Ib -= dx * dri * mf.b[i][ix];
    }
  }
  return out;
}

EnergySample energy_sample(const State& s, const KernelParams& p, const EnergyOptions& opt) {
  EnergySample e;
  e.t = s.t;
  const VelocityGrid& g = s.grid;
  const double hn = g.cell_volume();
  const double dx = s.dx();
  std::vector<double> v(g.n());
  std::vector<double> w2(g.size()), mu(g.size()), sm(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.node(i, v.data());
    const double w = weight_w(v, p);
    w2[i] = w * w;
    mu[i] = maxwellian(v);
    sm[i] = sqrt_maxwellian(v);
  }
  double H = 0.0;
  bool positive = true;
  const NormConfig c0 = NormConfig::from(p, 0.0), c1 = NormConfig::from(p, 1.0);
  for (int ix = 0; ix < s.nx(); ++ix) {
    double e0 = 0.0, e1 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = s.f(static_cast<Eigen::Index>(i), ix);
      e0 += x * x;
      e1 += w2[i] * x * x;
      if (opt.entropy) {
        const double F = mu[i] + sm[i] * x;
        if (F > 0.0) {
          H -= F * std::log(F);
        } else if (F < 0.0) {
          positive = false;
        }
      }
    }
    e.E0 += hn * dx * e0;
    e.E1 += hn * dx * e1;
    if (opt.dissipation) {
      const ScalarField sl = s.slice(ix);
      e.D0 += dx * nsg_parts(sl, c0).total;
      e.D1 += dx * nsg_parts(sl, c1).total;
    }
  }
  e.l2 = std::sqrt(e.E0);
  e.H = !opt.entropy ? 0.0 : positive ? hn * dx * H : std::numeric_limits<double>::quiet_NaN();
  const MacroFields mf = macro_extract(s);
  e.a_mean = mf.mean_a();
  return e;
}

EnergyReport energy_track(std::vector<EnergySample> samples, double tol) {
  EnergyReport r;
  double integral = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (k > 0) integral += 0.5 * (samples[k].t - samples[k - 1].t) * (samples[k].D0 + samples[k - 1].D0);
    samples[k].G = samples[k].E0 + integral;
  }
  if (samples.empty()) return r;
  const double E_ref = std::max(samples.front().E0, std::numeric_limits<double>::min());
  double delta = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const EnergySample& a = samples[k - 1];
    const EnergySample& b = samples[k];
    const double inc = (b.E0 - a.E0) / E_ref;
    r.worst_increase = std::max(r.worst_increase, inc);
    if (inc > tol) r.E_decreasing = false;
    const double dE = (b.E0 - a.E0) / (b.t - a.t);
    const double D = 0.5 * (a.D0 + b.D0);
    if (D > 0.0) delta = std::min(delta, -dE / D);
    if (std::isfinite(a.H) && std::isfinite(b.H)) {
      const double drop = a.H - b.H;
      r.worst_H_drop = std::max(r.worst_H_drop, drop);
      if (drop > 1e-6) r.H_monotone = false;
    } else if (std::isnan(a.H) || std::isnan(b.H)) {
      r.H_monotone = false;
    }
  }
  r.delta = std::isfinite(delta) ? delta : 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const EnergySample& a = samples[k - 1];
    const EnergySample& b = samples[k];
    const double dE = (b.E0 - a.E0) / (b.t - a.t);
    const double D = 0.5 * (a.D0 + b.D0), E = 0.5 * (a.E0 + b.E0);
    if (D > 0.0 && E > 0.0) r.slack = std::max(r.slack, (dE + r.delta * D) / std::sqrt(E * D));
  }
  r.samples = std::move(samples);
  return r;
}

namespace {

struct LineFit {
  double a = 0.0, b = 0.0, r2 = 1.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.b = sxx > 0 ? sxy / sxx : 0.0;
  f.a = my - f.b * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.a - f.b * x[i];
    sse += e * e;
  }
  f.r2 = syy > 1e-28 * std::max(1.0, m * my * my) ? 1.0 - sse / syy : 1.0;
  return f;
}

}  // namespace

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& norm, Regime regime, double t_lo,
                   double t_hi) {
  if (t.size() != norm.size()) throw DomainError("decay_fit: size mismatch");
  const double floor = norm.empty() ? 0.0 : 1e-13 * *std::max_element(norm.begin(), norm.end());
  auto window = [&](double hi, std::vector<double>& xs, std::vector<double>& ys) {
    xs.clear();
    ys.clear();
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] < t_lo || t[k] > hi || !(norm[k] > floor)) continue;
      xs.push_back(regime == Regime::hard ? t[k] : std::log1p(t[k]));
      ys.push_back(std::log(norm[k]));
    }
  };
  std::vector<double> xs, ys;
  window(t_hi, xs, ys);
  if (xs.size() < 30) throw DomainError("decay_fit needs at least 30 samples in the window");
  DecayFit out;
  out.regime = regime;
  double hi = t_hi;
  if (regime == Regime::soft) {
    // Local log-log slopes on windows [t, 1.5 t]. Their growth exponent
    // kappa = dlog|slope| / dlog(1 + t) is 0 for a power law and 1 for an exponential; the
    // window ends once the trend is more exponential than algebraic.
    std::vector<double> mids, slopes;
    for (double a = std::max(t_lo, 0.5); 1.5 * a <= t_hi; a *= 1.5) {
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < a || t[k] > 1.5 * a || !(norm[k] > floor)) continue;
        lx.push_back(std::log1p(t[k]));
        ly.push_back(std::log(norm[k]));
      }
      if (lx.size() < 4) continue;
      mids.push_back(1.25 * a);
      slopes.push_back(fit_line(lx, ly).b);
    }
    for (std::size_t k = 0; k + 1 < slopes.size(); ++k) {
      if (!(slopes[k] < 0.0 && slopes[k + 1] < 0.0)) continue;
      const double kappa = std::log(slopes[k + 1] / slopes[k]) / std::log((1.0 + mids[k + 1]) / (1.0 + mids[k]));
      out.curvature = kappa;
      if (kappa >= 0.75) {
        std::vector<double> nx, ny;
        window(mids[k + 1] * 1.2, nx, ny);
        if (nx.size() >= 30) {
          hi = mids[k + 1] * 1.2;
          xs = std::move(nx);
          ys = std::move(ny);
        }
        break;
      }
    }
  }
  const LineFit lf = fit_line(xs, ys);
  out.rate = regime == Regime::hard ? -lf.b : lf.b;
  if (out.rate == 0.0) out.rate = 0.0;  // no negative zero in reports
  out.r2 = lf.r2;
  out.t_lo = t_lo;
  out.t_hi = std::min(hi, t.back());
  out.samples = static_cast<int>(xs.size());
  out.reliable = out.r2 >= 0.9;
  return out;
}

PicardResult picard(const ScalarField& f0, const OperatorMatrix& m, const SphereRule& rule, const PicardOptions& opt) {
  if (!(f0.grid == m.grid)) throw DomainError("initial data grid differs from matrix grid");
  if (m.N.size() == 0) throw DomainError("picard needs the N and K parts of the matrix");
  if (opt.steps < 1 || opt.m_max < 1 || !(opt.T_star > 0.0)) throw ConfigError("picard: bad time grid");
  const double size0 = l2_norm(f0);
  if (size0 > opt.small_data) {
    std::ostringstream os;
    os << "picard data too large: |f0| = " << size0 << " > " << opt.small_data;
    throw DomainError(os.str());
  }
  const VelocityGrid& g = m.grid;
  const double dt = opt.T_star / opt.steps;
  const double hn = g.cell_volume();
  const NullBasis nb = NullBasis::make(g);
  Eigen::MatrixXd A = m.N;
  A *= dt;
  A.diagonal().array() += 1.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  const NormConfig nc = NormConfig::from(m.params, 0.0);

  const auto S = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(S, opt.steps + 1);  // f^0 = 0
  PicardResult res;
  if (size0 == 0.0) {
    res.G.push_back(0.0);
    res.diffs.push_back(0.0);
    res.final_state = ScalarField(g);
    res.iterations = 1;
    res.converged = true;
    return res;
  }
  auto G_of = [&](const Eigen::MatrixXd& path) {
    double sup = 0.0, integral = 0.0, Dlast = 0.0;
    for (Eigen::Index k = 0; k < path.cols(); ++k) {
      const ScalarField fk = to_field(g, path.col(k));
      sup = std::max(sup, hn * path.col(k).squaredNorm());
      const double D = nsg_parts(fk, nc).total;
      if (k > 0) integral += 0.5 * dt * (D + Dlast);
      Dlast = D;
    }
    return sup + integral;
  };
  for (int it = 0; it < opt.m_max; ++it) {
    Eigen::MatrixXd cur(S, opt.steps + 1);
    cur.col(0) = as_vec(f0);
    for (int k = 0; k < opt.steps; ++k) {
      const ScalarField old_next = to_field(g, prev.col(k + 1));
      const ScalarField new_now = to_field(g, cur.col(k));
      Eigen::VectorXd rhs = cur.col(k) - dt * (m.K * prev.col(k + 1));
      if (it > 0) {
        Eigen::VectorXd q = as_vec(gamma_apply(old_next, new_now, m.params, rule));
        if (m.conservative) project_micro(q, nb, hn);
        rhs += dt * q;
      }
      cur.col(k + 1) = lu.solve(rhs);
    }
    if (!cur.allFinite()) {
      res.diverged = true;
      break;
    }
    const double diff = std::sqrt(hn) * (cur - prev).colwise().norm().maxCoeff();
    res.G.push_back(G_of(cur));
    res.diffs.push_back(diff);
    res.iterations = it + 1;
    prev = std::move(cur);
    if (!std::isfinite(res.G.back()) || res.G.back() > opt.G_factor * res.G.front()) {
      res.diverged = true;
      break;
    }
    if (it > 0 && diff <= opt.tol * size0) {
      res.converged = true;
      break;
    }
  }
  res.final_state = to_field(g, prev.col(opt.steps));
  return res;
}

}  // namespace ncb
