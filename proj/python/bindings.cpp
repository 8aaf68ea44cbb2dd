#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ncb/cli.hpp"
#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/evolution.hpp"
#include "ncb/geometry.hpp"
#include "ncb/kernel_model.hpp"
#include "ncb/linearized.hpp"
#include "ncb/littlewood_paley.hpp"
#include "ncb/norms.hpp"
#include "ncb/quadrature.hpp"

namespace py = pybind11;
using namespace ncb;

namespace {

ScalarField field(const VelocityGrid& g, const std::vector<double>& values) { return ScalarField(g, values); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linearized non-cutoff Boltzmann operators on velocity grids";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<AccuracyError>(m, "AccuracyError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());

  py::class_<KernelParams>(m, "KernelParams")
      .def(py::init([](int n, double s, double gamma, double c_phi) {
             KernelParams p{n, s, gamma, c_phi};
             p.validate();
             return p;
           }),
           py::arg("n") = 2, py::arg("s") = 0.25, py::arg("gamma") = 0.0, py::arg("c_phi") = 1.0)
      .def_readonly("n", &KernelParams::n)
      .def_readonly("s", &KernelParams::s)
      .def_readonly("gamma", &KernelParams::gamma)
      .def_readonly("c_phi", &KernelParams::c_phi)
      .def_property_readonly("regime", [](const KernelParams& p) { return to_string(p.regime()); })
      .def_static("from_inverse_power", &KernelParams::from_inverse_power, py::arg("p"), py::arg("n") = 3)
      .def("__repr__", [](const KernelParams& p) {
        return "KernelParams(n=" + std::to_string(p.n) + ", s=" + cli::fmt(p.s) + ", gamma=" + cli::fmt(p.gamma) + ")";
      });

  m.def("maxwellian", [](const std::vector<double>& v) { return maxwellian(v); });
  m.def("sqrt_maxwellian", [](const std::vector<double>& v) { return sqrt_maxwellian(v); });
  m.def("angular_b", &angular_b, py::arg("cos_theta"), py::arg("params"));
  m.def("post_collisional", [](const std::vector<double>& v, const std::vector<double>& vs,
                               const std::vector<double>& sigma) { return post_collisional(v, vs, sigma); });
  m.def("metric_d", [](const std::vector<double>& a, const std::vector<double>& b) { return metric_d(a, b); });
  m.def("jacobian_zeta_shift", &jacobian_zeta_shift);

  py::class_<VelocityGrid>(m, "VelocityGrid")
      .def(py::init<int, double, int>(), py::arg("n") = 2, py::arg("r_cut") = 8.0, py::arg("points_per_axis") = 48)
      .def_property_readonly("n", &VelocityGrid::n)
      .def_property_readonly("r_cut", &VelocityGrid::r_cut)
      .def_property_readonly("points_per_axis", &VelocityGrid::points_per_axis)
      .def_property_readonly("h", &VelocityGrid::h)
      .def("__len__", &VelocityGrid::size)
      .def("nodes", [](const VelocityGrid& g) {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(g.size()), g.n());
        std::vector<double> v(g.n());
        for (std::size_t i = 0; i < g.size(); ++i) {
          g.node(i, v.data());
          for (int d = 0; d < g.n(); ++d) out(static_cast<Eigen::Index>(i), d) = v[d];
        }
        return out;
      });

  py::class_<SphereRule>(m, "SphereRule")
      .def_static("graded", &SphereRule::graded, py::arg("n"), py::arg("n_theta"), py::arg("q") = 3.0,
                  py::arg("n_omega") = 8)
      .def_static("full", &SphereRule::full, py::arg("n"), py::arg("n_theta"), py::arg("n_omega") = 16)
      .def("__len__", &SphereRule::size);

  m.def("integrate", [](const VelocityGrid& g, const std::vector<double>& f) { return integrate(field(g, f)); });
  m.def(
      "nsg_norm",
      [](const VelocityGrid& g, const std::vector<double>& f, const KernelParams& p, double ell) {
        return nsg_norm(field(g, f), NormConfig::from(p, ell));
      },
      py::arg("grid"), py::arg("f"), py::arg("params"), py::arg("ell") = 0.0);
  m.def("l2_weighted", [](const VelocityGrid& g, const std::vector<double>& f, double ell) {
    return l2_weighted(field(g, f), ell);
  });
  m.def(
      "L_apply",
      [](const VelocityGrid& g, const std::vector<double>& f, const KernelParams& p, const SphereRule& r) {
        return L_apply(field(g, f), p, r).values;
      },
      py::call_guard<py::gil_scoped_release>());

  py::class_<LPBasis>(m, "LPBasis")
      .def_readonly("M", &LPBasis::M)
      .def_readonly("R", &LPBasis::R)
      .def("phi", &LPBasis::phi)
      .def("psi", &LPBasis::psi)
      .def("support", &LPBasis::support);
  m.def("build_basis", &build_basis, py::arg("M"), py::arg("R"), py::arg("n") = 2);
  m.def("normalization_residual", [](const LPBasis& b, const std::vector<double>& v) {
    return normalization_residual(b, v);
  });

  py::class_<OperatorMatrix>(m, "OperatorMatrix")
      .def_readonly("L", &OperatorMatrix::L)
      .def_readonly("asymmetry", &OperatorMatrix::asymmetry)
      .def_readonly("conservation_defect", &OperatorMatrix::conservation_defect)
      .def("eigenvalues", [](const OperatorMatrix& om) { return eigenvalues(om); })
      .def("dump", &OperatorMatrix::dump);
  m.def(
      "assemble",
      [](const VelocityGrid& g, const KernelParams& p, const SphereRule& r, bool conservative, double max_asymmetry) {
        AssembleOptions o;
        o.conservative = conservative;
        o.max_asymmetry = max_asymmetry;
        return assemble(g, p, r, o);
      },
      py::arg("grid"), py::arg("params"), py::arg("rule"), py::arg("conservative") = false,
      py::arg("max_asymmetry") = 0.05, py::call_guard<py::gil_scoped_release>());

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("rate", &DecayFit::rate)
      .def_readonly("r2", &DecayFit::r2)
      .def_readonly("t_lo", &DecayFit::t_lo)
      .def_readonly("t_hi", &DecayFit::t_hi)
      .def_readonly("reliable", &DecayFit::reliable);
  m.def("decay_fit", [](const std::vector<double>& t, const std::vector<double>& norm, const std::string& regime,
                        double t_lo, double t_hi) {
    if (regime != "hard" && regime != "soft") throw ConfigError("regime must be 'hard' or 'soft'");
    return decay_fit(t, norm, regime == "hard" ? Regime::hard : Regime::soft, t_lo, t_hi);
  });

  m.def("default_config", [] { return cli::default_config().dump(); });
  m.def(
      "run",
      [](const std::string& command, const std::vector<std::string>& tasks, const std::string& config_json,
         const std::string& out_dir) {
        nlohmann::json cfg = cli::default_config();
        if (!config_json.empty()) cli::merge_config(cfg, nlohmann::json::parse(config_json));
        const auto rc = cli::RunConfig::from_json(cfg);
        cli::Outcome o;
        if (command == "validate") o = cli::cmd_validate(rc, out_dir);
        else if (command == "verify") o = cli::cmd_verify(rc, tasks, out_dir);
        else if (command == "scan-gap") o = cli::cmd_scan_gap(rc, out_dir);
        else if (command == "simulate") o = cli::cmd_simulate(rc, out_dir);
        else throw ConfigError("unknown command '" + command + "'");
        return py::make_tuple(o.code, o.files, o.messages);
      },
      py::arg("command"), py::arg("tasks") = std::vector<std::string>{}, py::arg("config") = "",
      py::arg("out_dir") = ".");
}
