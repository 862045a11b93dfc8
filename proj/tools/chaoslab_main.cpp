#include <CLI11.hpp>

#include <cstdio>

#include "chaoslab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Particle-system and mean-field study harness"};
  app.require_subcommand(1);

  chaoslab::RunOptions options;
  for (const std::string& name : chaoslab::runner_subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--scenario", options.scenario_path, "Scenario YAML file")
        ->required();
    sub->add_option("--out", options.out_dir, "Output root directory");
    sub->add_option("--seed", options.seed,
                    "Seed override (beats " + std::string(chaoslab::kSeedEnvVar) +
                        " and the scenario file)")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", options.threads, "Recorded in the sidecar; all "
                    "runs reduce in a fixed order, so results do not depend on it");
    sub->add_flag("--no-svg", [&](std::int64_t) { options.emit_svg = false; },
                  "Skip the chart file");
    sub->callback([&options, sub, name] {
      options.subcommand = name;
      options.seed_overridden = sub->count("--seed") > 0;
    });
  }

  CLI11_PARSE(app, argc, argv);

  const chaoslab::RunOutcome outcome = chaoslab::run_scenario(options);
  if (outcome.exit_code != 0) {
    std::fprintf(stderr, "chaoslab: [%s] %s\n", outcome.error_code.c_str(),
                 outcome.message.c_str());
    if (!outcome.sidecar_path.empty()) {
      std::fprintf(stderr, "chaoslab: details in %s\n", outcome.sidecar_path.c_str());
    }
    return outcome.exit_code;
  }
  std::printf("wrote %s\n", outcome.csv_path.c_str());
  std::printf("sidecar %s\n", outcome.sidecar_path.c_str());
  return 0;
}
