#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ncb/kernel_model.hpp"
#include "ncb/linearized.hpp"
#include "ncb/quadrature.hpp"

namespace ncb {

enum class Mode { homogeneous, transport };

// f(x, v) stored as columns over the torus points (one column in homogeneous mode).
// The torus is [0, 2 pi) in x_1, advected by v_1.
struct State {
  double t = 0.0;
  VelocityGrid grid;
  Mode mode = Mode::homogeneous;
  Eigen::MatrixXd f;  // grid.size() x nx

  static State homogeneous(const ScalarField& f0);
  static State transport(const std::vector<ScalarField>& slices);

  int nx() const { return static_cast<int>(f.cols()); }
  double dx() const;
  ScalarField slice(int ix) const;
  void check_finite() const;
};

enum class Scheme { implicit_euler, explicit_euler };

struct StepperOptions {
  double dt = 0.05;
  bool nonlinear = false;
  Scheme scheme = Scheme::implicit_euler;
};

// Implicit Euler for L (factorized once), explicit Gamma(f,f) source, Strang splitting
// with exact Fourier advection in transport mode.
class Stepper {
 public:
  Stepper(const OperatorMatrix& m, const SphereRule& rule, StepperOptions opt);
  State step(const State& s) const;
  double dt() const { return opt_.dt; }
  // Set when an explicit step had to be shortened to respect the stability bound.
  const std::optional<std::string>& cfl_note() const { return cfl_note_; }

 private:
  void collide(Eigen::MatrixXd& f) const;
  const OperatorMatrix* m_;
  const SphereRule* rule_;
  StepperOptions opt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  int substeps_ = 1;
  std::optional<std::string> cfl_note_;
};

State step(const State& s, double dt, bool nonlinear, const OperatorMatrix& m, const SphereRule& rule);

// Exact advection f(x, v) <- f(x - v_1 tau, v) on the torus.
void advect(State& s, double tau);

struct MacroFields {
  std::vector<double> a, c;
  std::vector<std::vector<double>> b;  // b[d][ix]
  double mean_a() const;
  double mean_c() const;
  double mean_b(int d) const;
};

MacroFields macro_extract(const State& s);

struct MacroResiduals {
  double a = 0.0, b = 0.0, c = 0.0;  // L^2_x norms of the conservation-law residuals
  double max() const;
};

// Residuals of the local conservation laws at the middle state, centered differences in t and x.
MacroResiduals macro_residuals(const State& prev, const State& mid, const State& next);

// Coefficients of (I - P) f against the non-orthogonal moment basis
//   v_i |v|^2 sqrt(mu), v_i^2 sqrt(mu), v_i v_j sqrt(mu) (i < j), v_i sqrt(mu), sqrt(mu),
// by inverting its Gram matrix on the grid. Rows follow that order; columns are torus points.
Eigen::MatrixXd micro_coefficients(const State& s);

// Interaction functionals for the zeroth x-derivative on the torus in x_1:
//   I_a = int (d_1 b_1) a + int (d_1 r_b1) a,  I_b = -sum_{i != 1} int (d_1 r_i1) b_i,
//   I_c = -int r_c1 d_1 c, with centered differences.
struct Interaction {
  double Ia = 0.0, Ib = 0.0, Ic = 0.0;
  double total() const { return Ia + Ib + Ic; }
};
Interaction interaction_functionals(const State& s);

struct EnergySample {
  double t = 0.0;
  double E0 = 0.0, E1 = 0.0;  // |w^l f|^2
  double D0 = 0.0, D1 = 0.0;  // |f|^2 in N^{s,gamma}_l
  double G = 0.0;             // E0(t) + int_0^t D0
  double a_mean = 0.0;
  double H = 0.0;             // -int F log F with F = mu + sqrt(mu) f, NaN if F <= 0 somewhere
  double l2 = 0.0;            // |f|_{L^2}
};

struct EnergyOptions {
  bool dissipation = true;  // compute D0, D1 (anisotropic double sums)
  bool entropy = true;
};

EnergySample energy_sample(const State& s, const KernelParams& p, const EnergyOptions& opt = {});

struct EnergyReport {
  std::vector<EnergySample> samples;
  bool E_decreasing = true;
  double worst_increase = 0.0;  // largest E0(t_{k+1}) - E0(t_k), relative to E0(0)
  double delta = 0.0;           // min over steps of -dE0/dt / D0
  double slack = 0.0;           // max of (dE0/dt + delta D0) / sqrt(E0 D0)
  bool H_monotone = true;
  double worst_H_drop = 0.0;
};

// Accumulates G and checks the energy inequality along a recorded series.
EnergyReport energy_track(std::vector<EnergySample> samples, double tol = 1e-12);

struct DecayFit {
  Regime regime = Regime::hard;
  double rate = 0.0;  // hard: lambda in |f| ~ e^{-lambda t}; soft: slope of log|f| vs log(1+t)
  double r2 = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double curvature = 0.0;  // soft: growth exponent of the local log-log slope where the window ends
  int samples = 0;
  bool reliable = true;
};

// Hard: log-linear fit on [t_lo, t_hi]. Soft: log-log fit on [t_lo, t_end], where t_end <= t_hi is
// where the log-log curve starts bending towards the exponential tail of the truncated problem.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& norm, Regime regime, double t_lo,
                   double t_hi);

struct PicardOptions {
  double T_star = 0.5;
  int steps = 10;
  int m_max = 12;
  double tol = 1e-10;        // stop when successive differences fall below tol * |f0|
  double G_factor = 4.0;     // divergence when sup_m G > G_factor * G(f^1)
  double small_data = 0.05;  // |f0|_{L^2} threshold
};

struct PicardResult {
  std::vector<double> G;      // G(f^m) on [0, T*], m = 1, 2, ...
  std::vector<double> diffs;  // sup_t |f^{m+1} - f^m|_{L^2}
  ScalarField final_state;    // last iterate at T*
  int iterations = 0;
  bool converged = false;
  bool diverged = false;  // G(f^m) exceeded G_factor * G(f^1); G keeps the history
};

// f^{m+1}: (1 + dt N) f_{k+1} = f_k - dt K f^m_{k+1} + dt Gamma(f^m_{k+1}, f^{m+1}_k), f^0 = 0.
PicardResult picard(const ScalarField& f0, const OperatorMatrix& m, const SphereRule& rule, const PicardOptions& opt);

}  // namespace ncb
