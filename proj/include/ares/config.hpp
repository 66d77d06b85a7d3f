#pragma once

// Run configuration for the command-line front end. The document is JSON:
//
//   dataset   {kind: "blobs", num_classes, dim, samples_per_class, center_spread,
//              noise_std, seed} or {kind: "idx", images, labels, per_class_limit?,
//              num_classes?}; plus train_fraction (0.8) and split_seed (0)
//   models    [{name, hidden: [..] | layers: [{kind, in?, out?}],
//               training: {mode, learning_rate, epochs, batch_size, seed,
//                          adv_eps, adv_alpha, adv_steps, adv_random_start}
//               | load: "path"}]
//   pools     [{name, models: [names], policy: "uniform_random" | {static: i}}]
//   scenario  {threat_model, max_rounds (20), num_trials (100), win_condition,
//              master_seed, strict_budget,
//              attack: {eps (0.1), alpha (0.025), max_steps, random_start},
//              attacker: {kind, nes_sigma, nes_samples}}
//   evaluation {eps, alpha, steps (10), random_start}   (defaults from scenario.attack)
//   analysis  {pairs: [[a, b]], max_rounds (10), num_trials (10)}   (optional)
//   output    {directory ("out"), formats (["json", "csv"])}

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ares/attacks.hpp"
#include "ares/data.hpp"
#include "ares/defenses.hpp"
#include "ares/game.hpp"
#include "ares/model_zoo.hpp"
#include "json.hpp"

namespace ares {

struct DatasetConfig {
  enum class Kind { blobs, idx };
  Kind kind = Kind::blobs;
  BlobParams blobs;
  std::string images_path;
  std::string labels_path;
  std::optional<std::size_t> per_class_limit;
  std::optional<std::size_t> num_classes;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

struct ModelConfig {
  std::string name;
  std::vector<std::size_t> hidden;
  std::optional<std::vector<LayerSpec>> layers;
  std::optional<TrainingConfig> training;
  std::optional<std::string> load_path;
};

struct PoolConfig {
  std::string name;
  std::vector<std::string> models;
  DefenderPolicy policy = DefenderPolicy::uniform();
};

struct AnalysisConfig {
  std::vector<std::pair<std::string, std::string>> pairs;
  int max_rounds = 10;
  int num_trials = 10;
};

struct OutputConfig {
  std::string directory = "out";
  bool json = true;
  bool csv = true;
};

struct RunConfig {
  DatasetConfig dataset;
  std::vector<ModelConfig> models;
  std::vector<PoolConfig> pools;
  ScenarioConfig scenario;
  AttackConfig evaluation;
  std::optional<AnalysisConfig> analysis;
  OutputConfig output;

  const ModelConfig& model(const std::string& name) const;
  // The config after defaulting, in canonical key order.
  nlohmann::ordered_json resolved() const;
};

// Throws ConfigError with a line/column for syntax errors or the dotted
// field path for schema errors. Name resolution is checked here too.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace ares
