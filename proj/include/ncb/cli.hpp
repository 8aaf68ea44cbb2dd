#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncb/checks.hpp"
#include "ncb/kernel_model.hpp"

namespace ncb::cli {

enum Exit : int { kPass = 0, kCheckFailure = 1, kConfigError = 2, kDivergence = 3 };

nlohmann::json default_config();

// Recursively overlays `patch` onto `base`; keys absent from `base` are rejected.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");

// NCB_GRID__POINTS_PER_AXIS=64 sets grid.points_per_axis. Values parse as JSON, else as strings.
void apply_env(nlohmann::json& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> environment(const std::string& prefix = "NCB_");

struct RunConfig {
  nlohmann::json raw;
  KernelParams kernel;
  bool from_p = false;
  Resolution res;
  int refined_points = 64;
  std::uint64_t seed = 1;

  static RunConfig from_json(const nlohmann::json& cfg);  // validates, throws ConfigError
  void require_grid_dimension() const;
};

struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> points_per_axis;
  std::optional<int> angular_nodes;
};

// Defaults, then the file, then NCB_ variables, then flags.
RunConfig load(const Overrides& o, const std::map<std::string, std::string>& env);

// Shortest round-trip decimal.
std::string fmt(double x);
std::string csv_field(const std::string& s);
std::string rows_to_csv(const std::vector<CheckRow>& rows);
nlohmann::json rows_summary(const std::vector<CheckRow>& rows);

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

struct Outcome {
  int code = kPass;
  std::vector<std::string> files;
  std::vector<std::string> messages;
};

Outcome cmd_validate(const RunConfig& c, const std::string& out_dir);
Outcome cmd_verify(const RunConfig& c, const std::vector<std::string>& tasks, const std::string& out_dir);
Outcome cmd_scan_gap(const RunConfig& c, const std::string& out_dir);
Outcome cmd_simulate(const RunConfig& c, const std::string& out_dir);

const std::vector<std::string>& verify_tasks();

}  // namespace ncb::cli
