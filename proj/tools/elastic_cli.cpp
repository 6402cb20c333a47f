// elastic: train, evaluate, replay and report multi-agent autoscaling runs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "elastic/experiment.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Turns leftover `--a.b value` / `--a.b=value` arguments into config overrides.
Overrides parse_overrides(const std::vector<std::string>& extras) {
  Overrides out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3) throw elastic::ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2);
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(key.substr(0, eq), key.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) throw elastic::ConfigError("override --" + key + " needs a value");
    out.emplace_back(key, extras[++i]);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent elastic scaling: simulator, CTDE trainer and evaluation suite"};
  app.require_subcommand(1);

  std::string config_path;
  long long episodes = -1;
  long long seed = -1;
  bool verbose = false;
  auto* train = app.add_subcommand("train", "train MARL policies; writes checkpoint/ and curve.csv");
  train->add_option("--config", config_path, "experiment config JSON")->required();
  train->add_option("--episodes", episodes, "shortcut for --train.episodes");
  train->add_option("--seed", seed, "shortcut for --seed");
  train->add_flag("-v,--verbose", verbose, "print one line per episode");
  train->allow_extras();

  std::string policy;
  std::string scenario;
  std::string run_id;
  auto* evaluate = app.add_subcommand("evaluate", "run a scenario for a baseline or a checkpoint");
  evaluate->add_option("--config", config_path, "experiment config JSON")->required();
  evaluate->add_option("--policy", policy, "static | static-peak | threshold | <checkpoint dir>")->required();
  evaluate->add_option("--scenario", scenario, "comparative | isolation | burst (default: from config)");
  evaluate->add_option("--run-id", run_id, "output directory name under output_dir");
  evaluate->allow_extras();

  std::string manifest;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest, "path to manifest.json")->required();

  std::vector<std::string> run_dirs;
  std::string json_out;
  auto* report = app.add_subcommand("report", "tabulate report.json files against the published reference");
  report->add_option("runs", run_dirs, "run directories containing report.json")->required();
  report->add_option("--json", json_out, "also write the table as JSON to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : elastic::kExitUsage;
  }

  try {
    if (train->parsed()) {
      Overrides ov = parse_overrides(train->remaining());
      if (episodes >= 0) ov.emplace_back("train.episodes", std::to_string(episodes));
      if (seed >= 0) ov.emplace_back("seed", std::to_string(seed));
      const auto cfg = elastic::load_experiment(config_path, ov);
      return elastic::run_train(cfg, std::cout, verbose).exit_code;
    }
    if (evaluate->parsed()) {
      Overrides ov = parse_overrides(evaluate->remaining());
      if (!scenario.empty()) ov.emplace_back("scenario.kind", scenario);
      const auto cfg = elastic::load_experiment(config_path, ov);
      return elastic::run_evaluate(cfg, policy, run_id.empty() ? std::nullopt : std::optional<std::string>(run_id))
          .exit_code;
    }
    if (replay->parsed()) return elastic::run_replay(manifest);
    if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      const auto table = elastic::build_report(dirs, std::cout);
      if (!json_out.empty()) std::ofstream(json_out) << table.dump(2) << '\n';
      return elastic::kExitOk;
    }
  } catch (const elastic::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return elastic::kExitDivergence;
  } catch (const elastic::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return elastic::kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return elastic::kExitUsage;
  }
  return elastic::kExitUsage;
}
