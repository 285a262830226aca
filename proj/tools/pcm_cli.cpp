// Command-line entry point: pcm case1|case2|gradcheck|props --config <path> --out <dir>
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "pcm/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Parameterized convex minorant experiments"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, models;
  std::optional<std::uint64_t> seed;
  for (const char* name : {"case1", "case2", "gradcheck", "props"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--models", models, "comma list of fnn,plse,dlse,eplse (case2 also linear-mpc)");
    sub->add_option("--seed", seed, "overrides [run] seed");
  }
  CLI11_PARSE(app, argc, argv);

  try {
    const pcm::Experiment experiment =
        pcm::experiment_from_string(app.get_subcommands().front()->get_name());
    pcm::RunConfig config = pcm::load_run_config(config_path, experiment);
    if (seed) {
      config.seed = *seed;
      config.train.seed = *seed;
    }
    if (!models.empty()) pcm::parse_model_list(models, config);
    const pcm::RunOutcome outcome = pcm::run_experiment(config, out_dir, std::cerr);
    for (const auto& f : outcome.failures) std::cerr << "failure: " << f << '\n';
    return outcome.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
