#include "ncb/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ncb/collision.hpp"
#include "ncb/error.hpp"
#include "ncb/evolution.hpp"
#include "ncb/linearized.hpp"

extern char** environ;

namespace ncb::cli {

using nlohmann::json;

json default_config() {
  return json::parse(R"({
    "kernel": {"n": 2, "s": 0.25, "gamma": 0.0, "c_phi": 1.0, "p": null},
    "grid": {"r_cut": 8.0, "points_per_axis": 48, "refined_points_per_axis": 64},
    "rule": {"angular_nodes": 32, "grading": 3.0},
    "lp": {"M": 2, "R": 0.0625, "j_lo": 1, "j_hi": 5, "box_r_cut": 4.0, "box_points_per_axis": 64,
           "box_refined_points_per_axis": 96},
    "verify": {"suite_size": 10, "samples": 1000, "entropy_steps": 10, "entropy_dt": 0.05},
    "scan": {"params": [[0.0, 0.25], [-1.0, 0.5], [-2.0, 0.3]],
             "radii": [2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0], "points_per_axis": 64},
    "simulate": {"mode": "homogeneous", "nonlinear": false, "picard": false, "scheme": "implicit",
                 "dt": 0.01, "t_end": 12.0, "initial": "micro_bump", "amplitude": 1.0,
                 "extra_weight": 2.0, "nx": 16, "fit_t_lo": 2.0, "max_asymmetry": 0.05,
                 "record_every": 10, "dissipation": true, "small_data": 0.05,
                 "picard_steps": 10, "picard_m_max": 10, "picard_tol": 1e-9, "dump_matrix": false},
    "seed": 1
  })");
}

void merge_config(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError("config " + (where.empty() ? "root" : where) + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_config(slot, it.value(), key);
      continue;
    }
    const json& v = it.value();
    const bool ok = slot.is_null() ? (v.is_number() || v.is_null())
                    : slot.is_number() ? v.is_number()
                    : slot.is_boolean() ? v.is_boolean()
                    : slot.is_string() ? v.is_string()
                    : slot.is_array() ? v.is_array()
                                      : false;
    if (!ok) throw ConfigError("config key '" + key + "' has the wrong type");
    slot = v;
  }
}

std::map<std::string, std::string> environment(const std::string& prefix) {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    if (kv.rfind(prefix, 0) != 0) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void apply_env(json& cfg, const std::map<std::string, std::string>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind("NCB_", 0) != 0) continue;
    std::string path = name.substr(4);
    std::transform(path.begin(), path.end(), path.begin(), [](unsigned char c) { return std::tolower(c); });
    json patch;
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    // "lp__m" must reach "M": match keys case-insensitively against the defaults.
    std::vector<std::string> parts;
    for (std::size_t pos = 0;;) {
      const auto next = path.find("__", pos);
      parts.push_back(path.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    const json* node = &cfg;
    std::vector<std::string> keys;
    for (const auto& part : parts) {
      std::string found;
      if (node->is_object())
        for (auto it = node->begin(); it != node->end(); ++it) {
          std::string k = it.key();
          std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
          if (k == part) found = it.key();
        }
      if (found.empty()) throw ConfigError("environment variable " + name + " names no config key");
      keys.push_back(found);
      node = &(*node)[found];
    }
    if (node->is_string()) parsed = value;
    json* target = &patch;
    for (std::size_t k = 0; k + 1 < keys.size(); ++k) target = &(*target)[keys[k]];
    (*target)[keys.back()] = parsed;
    merge_config(cfg, patch);
  }
}

RunConfig RunConfig::from_json(const json& cfg) {
  RunConfig c;
  c.raw = cfg;
  try {
    const json& k = cfg.at("kernel");
    if (!k.at("p").is_null()) {
      c.kernel = KernelParams::from_inverse_power(k.at("p").get<double>(), k.at("n").get<int>());
      c.from_p = true;
    } else {
      c.kernel.n = k.at("n").get<int>();
      c.kernel.s = k.at("s").get<double>();
      c.kernel.gamma = k.at("gamma").get<double>();
      c.kernel.c_phi = k.at("c_phi").get<double>();
      c.kernel.validate();
    }
    const json& g = cfg.at("grid");
    c.res.r_cut = g.at("r_cut").get<double>();
    c.res.points_per_axis = g.at("points_per_axis").get<int>();
    c.refined_points = g.at("refined_points_per_axis").get<int>();
    c.res.angular_nodes = cfg.at("rule").at("angular_nodes").get<int>();
    c.res.grading = cfg.at("rule").at("grading").get<double>();
    c.seed = cfg.at("seed").get<std::uint64_t>();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!(c.res.r_cut > 0.0)) throw ConfigError("grid.r_cut must be positive");
  if (c.res.points_per_axis < 8 || c.refined_points < 8) throw ConfigError("grid needs at least 8 points per axis");
  if (c.res.angular_nodes < 4) throw ConfigError("rule.angular_nodes must be at least 4");
  if (!(c.res.grading >= 1.0)) throw ConfigError("rule.grading must be >= 1");
  const json& sim = cfg.at("simulate");
  const std::string mode = sim.at("mode").get<std::string>();
  if (mode != "homogeneous" && mode != "transport") throw ConfigError("simulate.mode must be homogeneous or transport");
  const std::string scheme = sim.at("scheme").get<std::string>();
  if (scheme != "implicit" && scheme != "explicit") throw ConfigError("simulate.scheme must be implicit or explicit");
  const std::string init = sim.at("initial").get<std::string>();
  if (init != "micro_bump" && init != "null" && init != "weighted")
    throw ConfigError("simulate.initial must be micro_bump, null or weighted");
  if (!(sim.at("dt").get<double>() > 0.0) || !(sim.at("t_end").get<double>() > 0.0))
    throw ConfigError("simulate.dt and simulate.t_end must be positive");
  if (sim.at("record_every").get<int>() < 1) throw ConfigError("simulate.record_every must be >= 1");
  if (sim.at("nx").get<int>() < 4) throw ConfigError("simulate.nx must be >= 4");
  const json& sp = cfg.at("scan").at("params");
  for (const auto& row : sp) {
    if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
      throw ConfigError("scan.params entries must be [gamma, s] pairs");
    KernelParams q;
    q.gamma = row[0].get<double>();
    q.s = row[1].get<double>();
    try {
      q.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("scan.params: ") + e.what());
    }
  }
  for (const auto& r : cfg.at("scan").at("radii"))
    if (!r.is_number()) throw ConfigError("scan.radii must be numbers");
  return c;
}

void RunConfig::require_grid_dimension() const {
  if (kernel.n != 2) throw ConfigError("grid-based tasks run with n = 2 velocity grids (kernel.n = 2, no p)");
}

RunConfig load(const Overrides& o, const std::map<std::string, std::string>& env) {
  json cfg = default_config();
  if (o.config_path) {
    std::ifstream in(*o.config_path);
    if (!in) throw ConfigError("cannot read config file " + *o.config_path);
    json file = json::parse(in, nullptr, false);
    if (file.is_discarded()) throw ConfigError("config file " + *o.config_path + " is not valid JSON");
    merge_config(cfg, file);
  }
  apply_env(cfg, env);
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.points_per_axis) cfg["grid"]["points_per_axis"] = *o.points_per_axis;
  if (o.angular_nodes) cfg["rule"]["angular_nodes"] = *o.angular_nodes;
  return RunConfig::from_json(cfg);
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string rows_to_csv(const std::vector<CheckRow>& rows) {
  std::string out = "anchor,check,label,value,relation,bound,pass,detail\n";
  for (const auto& r : rows) {
    out += csv_field(r.anchor) + "," + csv_field(r.check) + "," + csv_field(r.label) + "," + fmt(r.value) + "," +
           csv_field(r.relation) + "," + fmt(r.bound) + "," + (r.pass ? "true" : "false") + "," +
           csv_field(r.detail) + "\n";
  }
  return out;
}

json rows_summary(const std::vector<CheckRow>& rows) {
  json j;
  int failed = 0;
  json failures = json::array();
  for (const auto& r : rows)
    if (!r.pass) {
      ++failed;
      failures.push_back({{"anchor", r.anchor}, {"check", r.check}, {"label", r.label}, {"value", r.value},
                          {"bound", r.bound}, {"relation", r.relation}});
    }
  j["checks"] = rows.size();
  j["failed"] = failed;
  j["pass"] = failed == 0;
  j["failures"] = failures;
  return j;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

Outcome emit_checks(const RunConfig& c, const std::vector<CheckRow>& rows, const std::string& out_dir,
                    const std::string& stem, json extra = json::object()) {
  Outcome o;
  const std::string csv = join_path(out_dir, stem + ".csv");
  const std::string js = join_path(out_dir, stem + ".json");
  write_atomic(csv, rows_to_csv(rows));
  json summary = rows_summary(rows);
  summary["config"] = c.raw;
  for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
  write_atomic(js, summary.dump(2) + "\n");
  o.files = {csv, js};
  o.code = all_pass(rows) ? kPass : kCheckFailure;
  for (const auto& r : rows)
    if (!r.pass) o.messages.push_back("FAIL [" + r.anchor + "] " + r.check + " (" + r.label + "): " + fmt(r.value) +
                                      " " + r.relation + " " + fmt(r.bound));
  return o;
}

std::vector<CheckRow> quadrature_invariants() {
  std::vector<CheckRow> rows;
  double worst = 0.0;
  for (int m : {4, 8, 16}) {
    auto [x, w] = gauss_legendre(m, 0.0, 1.0);
    for (int k = 0; k < 2 * m; ++k) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += w[i] * std::pow(x[i], k);
      worst = std::max(worst, std::abs(s - 1.0 / (k + 1)));
    }
  }
  rows.push_back({"8.2", "Gauss-Legendre exactness to degree 2m-1", "m=4,8,16", worst, 1e-13, "<=", worst <= 1e-13, ""});
  for (int n : {2, 3}) {
    const SphereRule r = SphereRule::full(n, 32);
    std::vector<double> axis(n, 0.0);
    axis[0] = 1.0;
    double sum = 0.0;
    for (const auto& node : r.nodes(axis)) sum += node.weight;
    const double exact = n == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    const double err = std::abs(sum - exact) / exact;
    rows.push_back({"1.3", "full sphere rule total weight vs |S^{n-1}|", "n=" + std::to_string(n), err, 1e-10, "<=",
                    err <= 1e-10, ""});
  }
  for (int n : {2, 3})
    for (double s : {0.25, 0.75}) {
      KernelParams p;
      p.n = n;
      p.s = s;
      const double m = std::abs(regularized_b(p, 0.1).moment());
      rows.push_back({"3.2", "regularized b_eps moment", "n=" + std::to_string(n) + " s=" + fmt(s), m, 1e-10, "<=",
                      m <= 1e-10, ""});
    }
  return rows;
}

}  // namespace

const std::vector<std::string>& verify_tasks() {
  static const std::vector<std::string> t{"representations", "norms", "lp", "coercivity", "entropy"};
  return t;
}

Outcome cmd_validate(const RunConfig& c, const std::string& out_dir) {
  std::vector<CheckRow> rows;
  if (c.kernel.n == 2) {
    for (auto& r : check_moments(c.res)) rows.push_back(r);
  }
  for (auto& r : check_kinematics(10000, c.seed)) rows.push_back(r);
  for (auto& r : quadrature_invariants()) rows.push_back(r);
  json extra;
  extra["kernel"] = {{"n", c.kernel.n}, {"s", c.kernel.s}, {"gamma", c.kernel.gamma},
                     {"regime", to_string(c.kernel.regime())}};
  return emit_checks(c, rows, out_dir, "validate", extra);
}

Outcome cmd_verify(const RunConfig& c, const std::vector<std::string>& tasks, const std::string& out_dir) {
  if (tasks.empty()) throw ConfigError("verify needs at least one task: representations, norms, lp, coercivity, entropy");
  for (const auto& t : tasks)
    if (std::find(verify_tasks().begin(), verify_tasks().end(), t) == verify_tasks().end())
      throw ConfigError("unknown verify task '" + t + "'");
  c.require_grid_dimension();
  const json& v = c.raw.at("verify");
  const int suite = v.at("suite_size").get<int>();
  const int samples = v.at("samples").get<int>();
  Outcome total;
  for (const auto& t : tasks) {
    std::vector<CheckRow> rows;
    json extra{{"task", t}};
    auto add = [&rows](std::vector<CheckRow> r) { rows.insert(rows.end(), r.begin(), r.end()); };
    if (t == "representations") {
      add(check_representations(c.kernel, c.res, c.refined_points));
      double gap = 0.0;
      json table = json::array();
      for (const auto& r : rows)
        if (r.check == "sigma vs dual relative gap") {
          gap = std::max(gap, r.value);
          table.push_back({{"label", r.label}, {"relative_gap", r.value}, {"detail", r.detail}});
        }
      extra["max_relative_gap"] = gap;
      extra["sigma_vs_dual"] = table;
    } else if (t == "norms") {
      add(check_form_identity(c.kernel, c.res, suite, c.seed));
      add(check_norm_equivalence(c.kernel, c.res, c.refined_points));
      add(check_sandwich(c.kernel, c.res, c.kernel.regime() == Regime::soft));
      add(check_carleman(c.kernel, samples, c.seed));
    } else if (t == "lp") {
      const json& lp = c.raw.at("lp");
      const int M = lp.at("M").get<int>();
      const double R = lp.at("R").get<double>();
      add(check_lp(M, R, c.res, lp.at("j_lo").get<int>(), lp.at("j_hi").get<int>()));
      Resolution box = c.res;
      box.r_cut = lp.at("box_r_cut").get<double>();
      box.points_per_axis = lp.at("box_points_per_axis").get<int>();
      add(check_square_function(M, R, box, lp.at("box_refined_points_per_axis").get<int>()));
    } else if (t == "coercivity") {
      add(check_linearized_structure(c.kernel, c.res.refined(c.refined_points)));
      add(check_coercivity(c.kernel, c.res, c.refined_points, std::max(suite, 20)));
    } else if (t == "entropy") {
      add(check_entropy(c.kernel, c.res, suite, c.seed));
      add(check_entropy_run(c.kernel, c.res, v.at("entropy_steps").get<int>(), v.at("entropy_dt").get<double>()));
    }
    Outcome o = emit_checks(c, rows, out_dir, "verify_" + t, extra);
    total.files.insert(total.files.end(), o.files.begin(), o.files.end());
    total.messages.insert(total.messages.end(), o.messages.begin(), o.messages.end());
    total.code = std::max(total.code, o.code);
  }
  return total;
}

Outcome cmd_scan_gap(const RunConfig& c, const std::string& out_dir) {
  c.require_grid_dimension();
  const json& sc = c.raw.at("scan");
  std::vector<KernelParams> params;
  for (const auto& row : sc.at("params")) {
    KernelParams q;
    q.gamma = row[0].get<double>();
    q.s = row[1].get<double>();
    params.push_back(q);
  }
  if (params.empty()) throw ConfigError("scan.params is empty");
  const std::vector<double> radii = sc.at("radii").get<std::vector<double>>();
  Resolution res = c.res;
  res.points_per_axis = sc.at("points_per_axis").get<int>();
  const auto table = gap_dichotomy_scan(params, radii, res.grid(2), res.rule(2));
  std::string csv = "anchor,gamma,s,gamma_plus_2s,classification,slope,slope_matches,min_quotient,fit_lo,fit_hi,rejected\n";
  std::string qcsv = "anchor,gamma,s,radius,quotient\n";
  json rows = json::array();
  for (const GapRow& g : table) {
    const double t = g.params.gamma + 2.0 * g.params.s;
    csv += "2.13," + fmt(g.params.gamma) + "," + fmt(g.params.s) + "," + fmt(t) + "," + csv_field(g.classification) +
           "," + fmt(g.slope) + "," + (g.slope_matches ? "true" : "false") + "," + fmt(g.min_quotient) + "," +
           fmt(g.fit_lo) + "," + fmt(g.fit_hi) + "," + std::to_string(g.rejected.size()) + "\n";
    for (std::size_t k = 0; k < g.radii.size(); ++k)
      qcsv += "2.13," + fmt(g.params.gamma) + "," + fmt(g.params.s) + "," + fmt(g.radii[k]) + "," +
              fmt(g.quotients[k]) + "\n";
    rows.push_back({{"gamma", g.params.gamma}, {"s", g.params.s}, {"classification", g.classification},
                    {"slope", g.slope}, {"slope_matches", g.slope_matches}, {"min_quotient", g.min_quotient}});
  }
  Outcome o;
  o.files = {join_path(out_dir, "scan_gap.csv"), join_path(out_dir, "scan_gap_quotients.csv"),
             join_path(out_dir, "scan_gap.json")};
  write_atomic(o.files[0], csv);
  write_atomic(o.files[1], qcsv);
  json summary{{"anchor", "2.13"}, {"rows", rows}, {"config", c.raw}};
  write_atomic(o.files[2], summary.dump(2) + "\n");
  return o;
}

Outcome cmd_simulate(const RunConfig& c, const std::string& out_dir) {
  c.require_grid_dimension();
  const json& sim = c.raw.at("simulate");
  const VelocityGrid g = c.res.grid(2);
  const SphereRule rule = c.res.rule(2);
  const bool nonlinear = sim.at("nonlinear").get<bool>();
  const bool use_picard = sim.at("picard").get<bool>();
  const bool transport = sim.at("mode").get<std::string>() == "transport";
  const double dt = sim.at("dt").get<double>();
  const double t_end = sim.at("t_end").get<double>();
  const double amp = sim.at("amplitude").get<double>();
  const double small = sim.at("small_data").get<double>();
  AssembleOptions ao;
  ao.conservative = true;
  ao.max_asymmetry = sim.at("max_asymmetry").get<double>();
  ao.keep_parts = use_picard;
  const OperatorMatrix m = assemble(g, c.kernel, rule, ao);
  Outcome o;
  json meta;
  meta["params"] = {{"n", c.kernel.n}, {"s", c.kernel.s}, {"gamma", c.kernel.gamma},
                    {"regime", to_string(c.kernel.regime())}};
  meta["grid"] = {{"r_cut", c.res.r_cut}, {"points_per_axis", c.res.points_per_axis},
                  {"angular_nodes", c.res.angular_nodes}};
  meta["scheme"] = {{"time", sim.at("scheme")}, {"dt", dt}, {"nonlinear", nonlinear}, {"mode", sim.at("mode")},
                    {"splitting", transport ? "strang, exact fourier advection" : "none"}};
  meta["seed"] = c.seed;
  meta["operator"] = {{"form_asymmetry", m.asymmetry}, {"entry_asymmetry", m.entry_asymmetry},
                      {"conservation_defect", m.conservation_defect}};
  meta["config"] = c.raw;
  if (sim.at("dump_matrix").get<bool>()) {
    const std::string p = join_path(out_dir, "operator.bin");
    m.dump(p);
    o.files.push_back(p);
  }

  const NullBasis nb = NullBasis::make(g);
  const std::string init = sim.at("initial").get<std::string>();
  ScalarField f0;
  if (init == "null") {
    f0 = ScalarField::from_function(g, [](std::span<const double> v) {
      return (1.0 + 0.5 * v[0] + 0.25 * norm2(v)) * sqrt_maxwellian(v);
    });
  } else if (init == "weighted") {
    const double decay = 1.0 + sim.at("extra_weight").get<double>() * std::abs(c.kernel.gamma + 2.0 * c.kernel.s) + 0.1;
    f0 = project_null(ScalarField::from_function(g, [&](std::span<const double> v) {
           return std::pow(1.0 + norm2(v), -0.5 * decay) * (1.0 + 0.3 * v[0]);
         }), nb).micro;
  } else {
    f0 = project_null(ScalarField::from_function(g, [](std::span<const double> v) {
           const double d2 = (v[0] - 0.3) * (v[0] - 0.3) + (v[1] + 0.2) * (v[1] + 0.2);
           return std::exp(-d2 / 2.42) * (1.0 + 0.5 * (v[0] - 0.3));
         }), nb).micro;
  }
  f0 *= amp / l2_norm(f0);

  if (use_picard) {
    PicardOptions po;
    po.T_star = t_end;
    po.steps = sim.at("picard_steps").get<int>();
    po.m_max = sim.at("picard_m_max").get<int>();
    po.tol = sim.at("picard_tol").get<double>();
    po.small_data = small;
    PicardResult pr;
    try {
      pr = picard(f0, m, rule, po);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    std::string csv = "m,G,diff\n";
    for (std::size_t k = 0; k < pr.G.size(); ++k)
      csv += std::to_string(k + 1) + "," + fmt(pr.G[k]) + "," + fmt(pr.diffs[k]) + "\n";
    const std::string p = join_path(out_dir, "picard.csv");
    write_atomic(p, csv);
    o.files.push_back(p);
    meta["picard"] = {{"iterations", pr.iterations}, {"converged", pr.converged}, {"diverged", pr.diverged},
                      {"G", pr.G}, {"diffs", pr.diffs}, {"anchor", "8.3"}};
    const std::string js = join_path(out_dir, "simulate.json");
    write_atomic(js, meta.dump(2) + "\n");
    o.files.push_back(js);
    if (pr.diverged) {
      o.code = kDivergence;
      o.messages.push_back("picard iteration diverged: G history written to " + p);
    } else if (!pr.converged) {
      o.code = kCheckFailure;
      o.messages.push_back("picard iteration did not converge within picard_m_max");
    }
    return o;
  }

  if (nonlinear && l2_norm(f0) > small)
    throw ConfigError("nonlinear runs need |f0| <= simulate.small_data (" + fmt(small) + ")");
  StepperOptions so;
  so.dt = dt;
  so.nonlinear = nonlinear;
  so.scheme = sim.at("scheme").get<std::string>() == "explicit" ? Scheme::explicit_euler : Scheme::implicit_euler;
  const Stepper stepper(m, rule, so);
  if (stepper.cfl_note()) {
    o.messages.push_back("warning: " + *stepper.cfl_note());
    meta["cfl_note"] = *stepper.cfl_note();
  }
  State s;
  if (transport) {
    const int nx = sim.at("nx").get<int>();
    std::vector<ScalarField> slices;
    for (int ix = 0; ix < nx; ++ix) {
      const double x = 2.0 * std::numbers::pi * ix / nx;
      ScalarField sl = ScalarField::from_function(g, [&](std::span<const double> v) {
        return std::cos(x) * (1.0 + v[0] + 0.5 * norm2(v)) * sqrt_maxwellian(v) + std::sin(x) * v[1] * sqrt_maxwellian(v);
      });
      sl *= 0.5 * amp;
      sl += std::cos(2.0 * x) * f0;
      slices.push_back(sl);
    }
    s = State::transport(slices);
  } else {
    s = State::homogeneous(f0);
  }

  EnergyOptions eo;
  eo.dissipation = sim.at("dissipation").get<bool>();
  const int every = sim.at("record_every").get<int>();
  const int K = static_cast<int>(std::lround(t_end / dt));
  std::vector<EnergySample> samples;
  std::vector<double> ts, ns;
  double worst_mean = 0.0;
  nlohmann::json interaction = nlohmann::json::array();
  for (int k = 0; k <= K; ++k) {
    ts.push_back(s.t);
    ns.push_back(std::sqrt(g.cell_volume() * s.dx()) * s.f.norm());
    if (k % every == 0 || k == K) {
      samples.push_back(energy_sample(s, c.kernel, eo));
      if (transport) {
        const MacroFields mf = macro_extract(s);
        worst_mean = std::max({worst_mean, std::abs(mf.mean_a()), std::abs(mf.mean_b(0)), std::abs(mf.mean_b(1)),
                               std::abs(mf.mean_c())});
        const Interaction I = interaction_functionals(s);
        interaction.push_back({{"t", s.t}, {"Ia", I.Ia}, {"Ib", I.Ib}, {"Ic", I.Ic}, {"I", I.total()}});
      }
    }
    if (k == K) break;
    try {
      s = stepper.step(s);
      s.t = (k + 1) * dt;
    } catch (const NumericalError& e) {
      throw DivergenceError(e.what());
    }
    if (s.f.cwiseAbs().maxCoeff() > 1e6 * std::max(1.0, amp)) throw DivergenceError("solution blew up at t = " + fmt(s.t));
  }
  const EnergyReport rep = energy_track(samples);
  std::string csv = "t,E0,E1,D0,D1,G,a_mean,H\n";
  for (const auto& e : rep.samples)
    csv += fmt(e.t) + "," + fmt(e.E0) + "," + fmt(e.E1) + "," + fmt(e.D0) + "," + fmt(e.D1) + "," + fmt(e.G) + "," +
           fmt(e.a_mean) + "," + fmt(e.H) + "\n";
  const std::string traj = join_path(out_dir, "trajectory.csv");
  write_atomic(traj, csv);
  o.files.push_back(traj);
  meta["energy"] = {{"E_decreasing", rep.E_decreasing}, {"worst_increase", rep.worst_increase}, {"delta", rep.delta},
                    {"slack", rep.slack}, {"H_monotone", rep.H_monotone}, {"worst_H_drop", rep.worst_H_drop}};
  if (transport) {
    meta["max_abs_macro_mean"] = worst_mean;
    meta["interaction"] = interaction;
  }
  const Regime regime = c.kernel.regime();
  try {
    const double lo = regime == Regime::hard ? sim.at("fit_t_lo").get<double>() : 1.0;
    const DecayFit fit = decay_fit(ts, ns, regime, lo, t_end);
    meta["decay"] = {{"regime", to_string(regime)}, {"rate", fit.rate}, {"r2", fit.r2},
                     {"window", {fit.t_lo, fit.t_hi}}, {"samples", fit.samples}, {"reliable", fit.reliable},
                     {"kappa", fit.curvature}, {"anchor", regime == Regime::hard ? "1.1" : "1.2"},
                     {"quantity", regime == Regime::hard ? "lambda in |f| ~ exp(-lambda t)"
                                                         : "slope of log|f| vs log(1+t)"}};
    if (!fit.reliable) o.messages.push_back("warning: unreliable decay fit (R^2 = " + fmt(fit.r2) + ")");
  } catch (const DomainError& e) {
    meta["decay"] = {{"skipped", e.what()}};
  }
  const std::string js = join_path(out_dir, "simulate.json");
  write_atomic(js, meta.dump(2) + "\n");
  o.files.push_back(js);
  return o;
}

}  // namespace ncb::cli
