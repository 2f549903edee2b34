// dumbbell: run verification scenarios and extract plot data.
//
//   dumbbell run configs/scaling.cfg --out results --workers 4
//   dumbbell emit results/scaling.json --kind loglog --out plots
//
// The worker count falls back to DUMBBELL_WORKERS, then to the config value.
// Exit status is 0 iff every verdict passes.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dumbbell/experiments/emit.hpp"
#include "dumbbell/experiments/scenarios.hpp"

namespace ex = dumbbell::experiments;

namespace {

int run(const std::string& config_path, std::optional<int> workers, std::optional<std::string> out) {
  const ex::ScenarioConfig cfg = ex::load_config(config_path);
  const int threads = ex::resolve_workers(workers, cfg.workers);
  const ex::Report report = ex::run_scenario(cfg, threads);
  const std::string dir = out.value_or(cfg.out);
  for (const auto& path : report.write(dir)) std::cout << "wrote " << path << '\n';
  for (const auto& v : report.verdicts()) {
    std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << "  measured " << ex::format_number(v.measured) << "  threshold "
              << v.threshold << '\n';
  }
  return report.all_pass() ? 0 : 1;
}

int emit(const std::string& report_path, const std::string& kind, const std::string& out) {
  const auto report = ex::load_report(report_path);
  std::cout << "wrote " << ex::emit_plot_data(report, kind, out).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dumbbell-metric eigenfunction experiments"};
  app.require_subcommand(1);

  std::optional<int> workers;
  std::optional<std::string> out;
  app.add_option("--workers", workers, "concurrent sweep points (overrides " + std::string(ex::kWorkersEnv) + ")")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "output directory");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run the scenario described by a key = value config");
  run_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--workers", workers, "concurrent sweep points")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out, "output directory");

  std::string report_path;
  std::string kind;
  auto* emit_cmd = app.add_subcommand("emit", "write plot data from a report");
  emit_cmd->add_option("report", report_path, "report JSON")->required()->check(CLI::ExistingFile);
  emit_cmd->add_option("--kind", kind, "loglog, profile or surface")
      ->required()
      ->check(CLI::IsMember({"loglog", "profile", "surface"}));
  emit_cmd->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config_path, workers, out);
    return emit(report_path, kind, out.value_or("."));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
