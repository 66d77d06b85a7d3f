#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ares/attacks.hpp"
#include "ares/data.hpp"
#include "ares/network.hpp"

namespace ares {

enum class TrainingMode { natural, adversarial };

std::string to_string(TrainingMode mode);
TrainingMode parse_training_mode(std::string_view name);

struct TrainingConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
  TrainingMode mode = TrainingMode::natural;
  // Inner PGD for adversarial mode.
  double adv_eps = 0.1;
  double adv_alpha = 0.025;
  int adv_steps = 10;
  bool adv_random_start = false;

  void validate() const;
  AttackConfig inner_attack() const { return {adv_eps, adv_alpha, adv_steps, adv_random_start}; }
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
};

struct EvalReport {
  double natural_accuracy = 0.0;
  std::optional<double> adversarial_accuracy;
  std::size_t num_samples = 0;
};

// Weights ~ N(0, 1) / sqrt(in_dim), biases zero.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

// Plain minibatch SGD over a per-epoch seeded shuffle. In adversarial mode
// each batch is replaced by full-length PGD examples against the current
// parameters before the step.
TrainResult train(const ModelSpec& spec, const Dataset& data, const TrainingConfig& config);

// Adversarial accuracy counts samples that are correct and remain correct
// after pgd_full (early stopping on success).
EvalReport evaluate(const Model& model, const Dataset& data, const std::optional<AttackConfig>& attack);

// Binary layout, all integers little-endian:
//   "ARESMDL1"                        8 bytes (the trailing digit is the version)
//   u32 layer_count
//   per layer: u32 kind (0 dense, 1 relu), u32 in_dim, u32 out_dim
//   u32 num_classes
//   u32 name_length, name bytes (UTF-8)
//   per dense layer: weight [out*in] then bias [out] as IEEE-754 f64
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);
std::vector<std::uint8_t> serialize_model(const Model& model);
Model deserialize_model(const std::vector<std::uint8_t>& bytes);

}  // namespace ares
