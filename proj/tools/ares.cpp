#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ares/commands.hpp"
#include "ares/error.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void warn_on_large_step(const ares::RunConfig& config) {
  if (config.scenario.attacker.attack.alpha_exceeds_budget()) {
    std::cerr << "warning: scenario.attack.alpha exceeds 2*eps; steps past the ball are projected\n";
  }
  if (config.evaluation.alpha_exceeds_budget()) {
    std::cerr << "warning: evaluation.alpha exceeds 2*eps; steps past the ball are projected\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ares: adversarial game between an attacker and a moving-target defender"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = 1;
  bool strict = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--threads", threads, "worker threads for trials")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--strict-budget", strict, "fail the run if any query leaves the eps-ball");
  };
  auto* train = app.add_subcommand("train", "train and evaluate every configured model");
  auto* wargame = app.add_subcommand("wargame", "play the game against each configured pool");
  auto* similarity = app.add_subcommand("similarity", "gradient and perturbation similarity for model pairs");
  for (auto* sub : {train, wargame, similarity}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const ares::RunConfig config = ares::load_run_config(config_path);
    warn_on_large_step(config);
    ares::CommandOptions options;
    if (!out_dir.empty()) options.out_dir = out_dir;
    options.threads = threads;
    options.strict_budget = strict;
    options.log = &std::cerr;

    ares::CommandOutput out;
    if (*train) {
      out = ares::cmd_train(config, options);
    } else if (*wargame) {
      out = ares::cmd_wargame(config, options);
    } else {
      out = ares::cmd_similarity(config, options);
    }
    for (const auto& f : out.files) std::cout << f << "\n";
    return 0;
  } catch (const ares::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
