#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncb/cli.hpp"
#include "ncb/error.hpp"

using namespace ncb;
using namespace ncb::cli;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("ncb_unit_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("configuration layering") {
  json cfg = default_config();
  CHECK_NOTHROW(RunConfig::from_json(cfg));
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"kernel": {"bogus": 1}})")), ConfigError);
  CHECK_THROWS_AS(merge_config(cfg, json::parse(R"({"kernel": {"s": "x"}})")), ConfigError);

  apply_env(cfg, {{"NCB_GRID__POINTS_PER_AXIS", "32"}, {"NCB_LP__M", "3"}, {"NCB_SIMULATE__INITIAL", "null"}});
  CHECK(cfg["grid"]["points_per_axis"] == 32);
  CHECK(cfg["lp"]["M"] == 3);
  CHECK(cfg["simulate"]["initial"] == "null");
  CHECK_THROWS_AS(apply_env(cfg, {{"NCB_NOPE", "1"}}), ConfigError);

  Overrides o;
  o.points_per_axis = 40;
  const auto rc = load(o, {{"NCB_GRID__POINTS_PER_AXIS", "32"}});
  CHECK(rc.res.points_per_axis == 40);
  CHECK(load({}, {{"NCB_GRID__POINTS_PER_AXIS", "32"}}).res.points_per_axis == 32);
}

TEST_CASE("configuration errors") {
  json p2 = default_config();
  p2["kernel"]["p"] = 2.0;
  p2["kernel"]["n"] = 3;
  CHECK_THROWS_WITH_AS(RunConfig::from_json(p2), doctest::Contains("not well defined"), ConfigError);
  json s15 = default_config();
  s15["kernel"]["s"] = 1.5;
  CHECK_THROWS_AS(RunConfig::from_json(s15), ConfigError);
  json scan = default_config();
  scan["scan"]["params"] = json::parse("[[0.0]]");
  CHECK_THROWS_AS(RunConfig::from_json(scan), ConfigError);
  const auto rc = RunConfig::from_json(default_config());
  CHECK_THROWS_AS(cmd_verify(rc, {}, scratch_dir("empty").string()), ConfigError);
  CHECK_THROWS_AS(cmd_verify(rc, {"nonsense"}, scratch_dir("bad").string()), ConfigError);
}

TEST_CASE("CSV and number formatting") {
  CHECK(fmt(0.1) == "0.1");
  CHECK(fmt(1e-300) == "1e-300");
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::vector<CheckRow> rows{{"8.2", "mass", "N=8", 1e-5, 1e-4, "<=", true, "x, y"}};
  const std::string csv = rows_to_csv(rows);
  CHECK(csv.rfind("anchor,check,label,value,relation,bound,pass,detail\n", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);
  CHECK(csv.find("8.2,mass,N=8,") != std::string::npos);
  CHECK(csv.find("\"x, y\"") != std::string::npos);
  CHECK(rows_summary(rows)["pass"] == true);
}

TEST_CASE("atomic writes") {
  const auto d = scratch_dir("atomic");
  const auto p = d / "sub" / "out.txt";
  write_atomic(p.string(), "one\n");
  write_atomic(p.string(), "two\n");
  CHECK(slurp(p) == "two\n");
  std::size_t count = 0;
  for (const auto& e : std::filesystem::directory_iterator(p.parent_path())) (void)e, ++count;
  CHECK(count == 1);
  std::filesystem::remove_all(d);
}

TEST_CASE("validate is deterministic") {
  const auto rc = RunConfig::from_json(default_config());
  const auto d1 = scratch_dir("v1"), d2 = scratch_dir("v2");
  const auto o1 = cmd_validate(rc, d1.string());
  const auto o2 = cmd_validate(rc, d2.string());
  CHECK(o1.code == kPass);
  REQUIRE(o1.files.size() == o2.files.size());
  for (std::size_t k = 0; k < o1.files.size(); ++k) {
    CHECK(slurp(o1.files[k]) == slurp(o2.files[k]));
    if (o1.files[k].ends_with(".csv")) {
      const auto text = slurp(o1.files[k]);
      CHECK(text.find("\r") == std::string::npos);
    }
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("simulate with null-space data") {
  json cfg = default_config();
  cfg["grid"]["r_cut"] = 6.0;
  cfg["grid"]["points_per_axis"] = 24;
  cfg["simulate"]["initial"] = "null";
  cfg["simulate"]["t_end"] = 4.0;
  cfg["simulate"]["dt"] = 0.1;
  cfg["simulate"]["fit_t_lo"] = 0.5;
  cfg["simulate"]["max_asymmetry"] = 0.25;
  cfg["simulate"]["record_every"] = 5;
  const auto rc = RunConfig::from_json(cfg);
  const auto d = scratch_dir("sim");
  const auto o = cmd_simulate(rc, d.string());
  CHECK(o.code == kPass);
  const auto meta = json::parse(slurp(d / "simulate.json"));
  CHECK(std::abs(meta["decay"]["rate"].get<double>()) <= 1e-8);
  const auto traj = slurp(d / "trajectory.csv");
  CHECK(traj.rfind("t,E0,E1,D0,D1,G,a_mean,H\n", 0) == 0);
  std::filesystem::remove_all(d);
}
