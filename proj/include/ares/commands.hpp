#pragma once

// The train / wargame / similarity verbs behind the ares CLI.
//
// Output files (in the output directory):
//   train       models/<name>.aresmdl, train_report.json, train_report.csv
//   wargame     wargame_report.json, wargame_report.csv
//   similarity  similarity_report.json, similarity_report.csv
//
// CSV columns:
//   train_report.csv       model,train_method,natural_accuracy,adversarial_accuracy,num_samples,final_train_loss
//   wargame_report.csv     pool,mean_rounds,ci95,attacker_win_rate,adversarial_accuracy,timeouts
//   similarity_report.csv  model_a,model_b,outcome,trials,round_avg,final_image_cosine,undefined_rounds

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ares/config.hpp"
#include "ares/data.hpp"
#include "ares/network.hpp"
#include "json.hpp"

namespace ares {

struct CommandOptions {
  std::optional<std::string> out_dir;  // overrides output.directory
  unsigned threads = 1;
  bool strict_budget = false;
  std::ostream* log = nullptr;  // progress lines; nothing when null
};

struct CommandOutput {
  std::vector<std::string> files;
  nlohmann::ordered_json document;
};

struct SplitData {
  Dataset train;
  Dataset test;
};

SplitData load_dataset(const DatasetConfig& config);

// Architecture of a configured model for the given data geometry.
ModelSpec model_spec(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes);

// Loads models with a load path and trains the rest, once per name.
class ModelRegistry {
 public:
  ModelRegistry(const RunConfig& config, const Dataset& train, std::ostream* log);
  const Model& get(const std::string& name);
  std::optional<std::vector<double>> epoch_losses(const std::string& name) const;

 private:
  const RunConfig& config_;
  const Dataset& train_;
  std::ostream* log_;
  std::map<std::string, Model> models_;
  std::map<std::string, std::vector<double>> losses_;
};

CommandOutput cmd_train(const RunConfig& config, const CommandOptions& options);
CommandOutput cmd_wargame(const RunConfig& config, const CommandOptions& options);
CommandOutput cmd_similarity(const RunConfig& config, const CommandOptions& options);

}  // namespace ares
