#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bsv {

using json = nlohmann::json;

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr const char* kEngineVersion = "bsv 1.0.0";

/// Directory holding preset files: $BSV_PRESET_DIR when set, else the bundled presets.
std::filesystem::path preset_directory();

struct PresetInfo {
  std::string name;
  std::string description;
  bool long_running = false;
  std::filesystem::path file;
};

std::vector<PresetInfo> list_presets();
json load_preset(const std::string& name);

/// JSON with // and /* */ comments.
json load_json_file(const std::filesystem::path& path);

struct ScanAxis {
  std::string name;
  std::vector<double> values;
};

struct WignerRequest {
  std::vector<double> times;
  int n_theta = 41;
  int n_phi = 80;
  bool invert_z = true;
};

struct FitRequest {
  std::string name;
  std::string series;
  std::string x;       // scan axis
  double t = 0.0;      // time slice
  std::string kind;    // power | log
};

/// Validated scenario with presets and defaults applied.
struct Scenario {
  std::string name;
  std::string model;  // TC | Dicke | FullSim | CatCompare
  std::string mode;   // FullSim: trajectory | appendix_a
  double budget_seconds = 0.0;
  json params;        // N, g, r, F_c, omega, alpha0, ...
  json herald;        // q_tilde, delta_q_tilde, n_q, phi_mode
  std::vector<double> times;
  std::vector<ScanAxis> scan;
  std::vector<std::string> series;
  std::optional<WignerRequest> wigner;
  std::vector<FitRequest> fits;
  json numerics;
  json resolved;      // everything above, for the manifest
};

/// Parses and validates; error messages name the offending JSON path.
/// preset_override replaces numerics.preset when set.
Scenario parse_scenario(const json& doc, const std::optional<std::string>& preset_override = std::nullopt);

struct RunOptions {
  std::filesystem::path out_dir = "results";
  std::optional<std::string> preset;
  int jobs = 0;
};

struct RunResult {
  std::filesystem::path bundle;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
};

RunResult run_scenario(const Scenario& scenario, const RunOptions& options);
RunResult run_scenario_file(const std::filesystem::path& file, const RunOptions& options);

struct CheckResult {
  std::string name;
  std::string kind;
  bool passed = false;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  json to_json() const;
};

/// Evaluates the named checks of an expectations file against a results bundle.
VerifyReport verify_bundle(const std::filesystem::path& bundle, const std::filesystem::path& expectations);

/// One series CSV: scan-axis columns, then t and value.
struct SeriesTable {
  std::vector<std::string> axes;
  std::vector<std::vector<double>> axis_values;  // per row
  std::vector<double> t;
  std::vector<double> value;
};

SeriesTable read_series_csv(const std::filesystem::path& path);

}  // namespace bsv
