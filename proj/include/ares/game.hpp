#pragma once

// Turn-based attacker/defender game. In every round the attacker issues one
// query and the defender answers it; the attacker moves first.
//
// Round protocol: the round-1 query is the clean input x0 (the attacker has
// no response to work from yet), so the first perturbed query happens in
// round 2. rounds_used therefore counts queries, including the clean one.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ares/analysis.hpp"
#include "ares/attacks.hpp"
#include "ares/data.hpp"
#include "ares/defenses.hpp"

namespace ares {

enum class WinCondition { responder_misclassifies, all_models_misclassify };
enum class Winner { attacker, defender };

std::string to_string(WinCondition c);
WinCondition parse_win_condition(std::string_view name);
std::string to_string(Winner w);

inline constexpr double kBudgetSlack = 1e-12;

struct ScenarioConfig {
  ThreatModel threat_model = ThreatModel::white_box;
  int max_rounds = 20;
  int num_trials = 100;
  AttackerPolicyConfig attacker;
  WinCondition win_condition = WinCondition::responder_misclassifies;
  std::uint64_t master_seed = 0;
  // Out-of-budget queries abort the episode instead of being projected.
  bool strict_budget = false;
  // Model pairs whose loss gradients are compared every round.
  std::vector<std::pair<std::size_t, std::size_t>> instrument_pairs;

  void validate() const;
};

struct RoundRecord {
  int round_index = 0;  // 1-based
  std::size_t responder_index = 0;
  double attacker_query_linf = 0.0;
  std::size_t response_label = 0;
  bool misclassified = false;     // responder's label != true label
  bool budget_flagged = false;    // the raw query had to be projected
  std::size_t probe_queries = 0;  // extra queries issued inside the round
  Tensor query;
};

struct EpisodeResult {
  std::size_t trial_index = 0;
  std::size_t sample_index = 0;
  Winner winner = Winner::defender;
  int rounds_used = 0;
  Tensor x0;
  Tensor final_x;  // last query issued
  std::size_t true_label = 0;
  std::vector<RoundRecord> rounds;

  // The attacker wants few rounds, the defender many.
  double attacker_reward() const { return -static_cast<double>(rounds_used); }
  double defender_reward() const { return static_cast<double>(rounds_used); }
};

struct EvalSample {
  std::size_t index = 0;  // position in the dataset
  Tensor x0;
  std::size_t label = 0;
};

// Uniform draw without replacement from the samples every pool model
// classifies correctly. Throws ScenarioError when fewer than num_trials exist.
std::vector<EvalSample> select_eval_samples(const Dataset& data, const DefensePool& pool, std::size_t num_trials,
                                            Rng& rng);

// Runs one episode with an existing agent. The defender rng drives model
// selection, including for probe queries.
EpisodeResult run_episode(AttackerAgent& attacker, const DefensePool& pool, const DefenderPolicy& defender,
                          const ScenarioConfig& scenario, const EvalSample& sample, Rng& defender_rng);

// Builds the agent from scenario.attacker and derives the attacker and
// defender streams from episode_seed.
EpisodeResult run_episode(const DefensePool& pool, const DefenderPolicy& defender, const ScenarioConfig& scenario,
                          const EvalSample& sample, std::uint64_t episode_seed);

struct ExperimentReport {
  ScenarioConfig config;
  std::string pool_label;
  std::string defender_policy;
  // Rounds-to-win over attacker-won episodes; empty if the attacker never won.
  std::optional<StatSummary> rounds;
  std::size_t attacker_wins = 0;
  std::size_t timeouts = 0;
  double attacker_win_rate = 0.0;
  double adversarial_accuracy = 0.0;
  std::vector<EpisodeResult> episodes;
  // similarity[e][k] belongs to episode e and config.instrument_pairs[k].
  std::vector<std::vector<SimilarityRecord>> similarity;
};

struct Experiment {
  const Dataset& data;
  const DefensePool& pool;
  DefenderPolicy defender;
  ScenarioConfig scenario;
  std::string pool_label;
};

// Samples drawn for an experiment; depends only on the data, pool and seed.
std::vector<EvalSample> experiment_samples(const Experiment& exp);

// Seed for trial i: Rng::child_seed(master_seed, i).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index);

EpisodeResult run_trial(const Experiment& exp, const std::vector<EvalSample>& samples, std::size_t trial_index);

// Trials may run on `threads` workers; results are identical for any count.
ExperimentReport run_experiment(const Experiment& exp, unsigned threads = 1);

// Same, with trial i played on samples[i] (samples may repeat).
ExperimentReport run_experiment(const Experiment& exp, const std::vector<EvalSample>& samples, unsigned threads);

// Aggregates already-computed episodes (also used by run_experiment).
ExperimentReport summarize(const Experiment& exp, std::vector<EpisodeResult> episodes);

}  // namespace ares
