#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "ncb/cli.hpp"
#include "ncb/error.hpp"

int main(int argc, char** argv) {
  using namespace ncb;
  CLI::App app{"Non-cutoff Boltzmann verification and simulation"};
  app.require_subcommand(1);
  cli::Overrides ov;
  std::string out_dir = "ncb_out";
  std::string config;
  std::uint64_t seed = 0;
  int ppa = 0, ang = 0;
  app.add_option("--config", config, "JSON config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--points-per-axis", ppa, "velocity grid points per axis");
  app.add_option("--angular-nodes", ang, "angular quadrature nodes");
  app.fallthrough();

  auto* validate = app.add_subcommand("validate", "kernel, geometry and quadrature invariants");
  auto* verify = app.add_subcommand("verify", "module checks: representations | norms | lp | coercivity | entropy");
  std::vector<std::string> tasks;
  verify->add_option("task", tasks, "tasks to run");
  auto* scan = app.add_subcommand("scan-gap", "spectral-gap trend table");
  auto* simulate = app.add_subcommand("simulate", "time evolution with trajectory and decay fit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kConfigError;
  }
  if (!config.empty()) ov.config_path = config;
  if (app.count("--seed")) ov.seed = seed;
  if (app.count("--points-per-axis")) ov.points_per_axis = ppa;
  if (app.count("--angular-nodes")) ov.angular_nodes = ang;

  cli::Outcome out;
  try {
    const cli::RunConfig cfg = cli::load(ov, cli::environment());
    if (validate->parsed()) {
      out = cli::cmd_validate(cfg, out_dir);
    } else if (verify->parsed()) {
      out = cli::cmd_verify(cfg, tasks, out_dir);
    } else if (scan->parsed()) {
      out = cli::cmd_scan_gap(cfg, out_dir);
    } else if (simulate->parsed()) {
      out = cli::cmd_simulate(cfg, out_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return cli::kDivergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kCheckFailure;
  }
  for (const auto& m : out.messages) std::cerr << m << "\n";
  for (const auto& f : out.files) std::cout << f << "\n";
  return out.code;
}
