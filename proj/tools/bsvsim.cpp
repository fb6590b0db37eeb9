// bsvsim: run heralded-squeezing scenarios and verify result bundles.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bsv/runner.hpp"
#include "bsv/types.hpp"

namespace {

int cmd_run(const std::string& scenario, const bsv::RunOptions& opt) {
  const bsv::RunResult r = bsv::run_scenario_file(scenario, opt);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << r.files.size() << " files to " << r.bundle.string() << " in " << r.wall_seconds << " s\n";
  const bsv::json manifest = bsv::load_json_file(r.bundle / "manifest.json");
  if (!manifest.value("within_budget", true))
    std::cerr << "warning: run exceeded its budget of " << manifest.value("budget_seconds", 0.0) << " s\n";
  return 0;
}

int cmd_verify(const std::string& bundle, const std::string& expectations) {
  const bsv::VerifyReport rep = bsv::verify_bundle(bundle, expectations);
  for (const auto& c : rep.checks) {
    std::printf("%s %s [%s] measured=%.10g expected=%.10g tol=%.3g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                c.kind.c_str(), c.measured, c.expected, c.tolerance, c.detail.c_str());
  }
  std::ofstream(std::filesystem::path(bundle) / "verify_report.json") << rep.to_json().dump(2) << '\n';
  std::printf("%s: %zu checks\n", rep.all_passed() ? "PASSED" : "FAILED", rep.checks.size());
  return rep.all_passed() ? 0 : 1;
}

int cmd_presets() {
  for (const auto& p : bsv::list_presets())
    std::cout << p.name << (p.long_running ? "  (long-running)" : "") << "  " << p.description << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded spin squeezing simulator"};
  app.require_subcommand(1);

  bsv::RunOptions opt;
  std::string scenario, out = "results", preset;
  int jobs = 0;
  auto* run = app.add_subcommand("run", "Run a scenario file and write a results bundle");
  run->add_option("scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory; the bundle goes into <out>/<name>");
  run->add_option("--preset", preset, "Override the numerics preset (fast, paper)");
  run->add_option("--jobs,-j", jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  std::string bundle, expectations;
  auto* verify = app.add_subcommand("verify", "Check a results bundle against an expectations file");
  verify->add_option("bundle", bundle, "Results bundle directory")->required()->check(CLI::ExistingDirectory);
  verify->add_option("expectations", expectations, "Expectations JSON file")->required()->check(CLI::ExistingFile);

  auto* presets = app.add_subcommand("presets", "List numerics presets");
  presets->add_subcommand("list", "List available presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      opt.out_dir = out;
      opt.jobs = jobs;
      if (!preset.empty()) opt.preset = preset;
      return cmd_run(scenario, opt);
    }
    if (*verify) return cmd_verify(bundle, expectations);
    if (*presets) return cmd_presets();
  } catch (const bsv::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const bsv::TruncationError& e) {
    std::cerr << "error: " << e.what() << " (need n_max >= " << e.required_n_max() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
