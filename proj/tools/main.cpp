#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowexp/runner.hpp"
#include "lowexp/version.hpp"

namespace {

nlohmann::json load_config_json(const std::string& config_path, const std::string& preset) {
  if (!config_path.empty() && !preset.empty())
    throw lowexp::ConfigError("give either --config or --preset, not both");
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw lowexp::ConfigError("cannot open config file: " + config_path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw lowexp::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return j;
  }
  if (!preset.empty()) return lowexp::preset_config(preset);
  throw lowexp::ConfigError("one of --config or --preset is required");
}

void print_summary(const lowexp::RunSummary& summary) {
  const auto agg = lowexp::summarize(summary);
  std::cout << "experiment: " << summary.config.name << '\n'
            << "replications: " << summary.replications.size()
            << " (aborted: " << summary.aborted_count << ")\n";
  const auto budget = lowexp::budget_report(summary.config);
  std::cout << "search draws per replication: " << budget.raw_draws_per_replication << '\n';
  std::cout << "column,mean,sd,median\n";
  for (std::size_t i = 0; i < agg.columns.size(); ++i) {
    std::cout << agg.columns[i] << ',' << agg.mean[i] << ',' << agg.sd[i] << ','
              << agg.median[i] << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic approximation of lower/upper expectations"};
  app.set_version_flag("--version", std::string(lowexp::kVersion));
  app.require_subcommand(1);

  std::string config_path, preset, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps, workers;

  auto add_source_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "path to a JSON experiment config");
    sub->add_option("--preset", preset, "name of a built-in experiment");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment");
  add_source_opts(run_cmd);
  run_cmd->add_option("--seed", seed, "override base_seed");
  run_cmd->add_option("--reps", reps, "override replications");
  run_cmd->add_option("--out", out_dir, "override output_dir");
  run_cmd->add_option("--workers", workers, "override worker thread count");

  CLI::App* budget_cmd = app.add_subcommand("budget", "print the simulation budget");
  add_source_opts(budget_cmd);

  CLI::App* presets_cmd = app.add_subcommand("presets", "list or show built-in experiments");
  std::string presets_action = "list", preset_name;
  presets_cmd->add_option("action", presets_action, "list | show")
      ->check(CLI::IsMember({"list", "show"}));
  presets_cmd->add_option("name", preset_name, "preset name for 'show'");

  CLI11_PARSE(app, argc, argv);

  try {
    if (presets_cmd->parsed()) {
      if (presets_action == "list") {
        for (const auto& n : lowexp::preset_names()) std::cout << n << '\n';
      } else {
        if (preset_name.empty()) throw lowexp::ConfigError("presets show requires a name");
        std::cout << lowexp::preset_config(preset_name).dump(2) << '\n';
      }
      return 0;
    }

    nlohmann::json j = load_config_json(config_path, preset);
    lowexp::ExperimentConfig config = lowexp::parse_config(j);
    if (seed) config.base_seed = *seed;
    if (reps) {
      if (*reps < 1) throw lowexp::ConfigError("--reps must be >= 1");
      config.replications = *reps;
    }
    if (workers) {
      if (*workers < 1) throw lowexp::ConfigError("--workers must be >= 1");
      config.workers = *workers;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;

    if (budget_cmd->parsed()) {
      const auto b = lowexp::budget_report(config);
      std::cout << "experiment: " << config.name << '\n'
                << "replications: " << config.replications << '\n'
                << "objective draws per replication: " << b.objective_draws_per_replication
                << '\n'
                << "raw draws per objective: " << b.draws_per_objective << '\n'
                << "raw draws per replication: " << b.raw_draws_per_replication << '\n'
                << "raw draws total: " << b.total_raw_draws << '\n';
      return 0;
    }

    const lowexp::RunSummary summary = lowexp::run_experiment(config);
    print_summary(summary);
    if (!config.output_dir.empty())
      std::cout << "outputs written under " << config.output_dir << '/' << config.name << '\n';
    if (summary.aborted_count == static_cast<int>(summary.replications.size())) {
      std::cerr << "error: every replication aborted\n";
      return 2;
    }
    return 0;
  } catch (const lowexp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
