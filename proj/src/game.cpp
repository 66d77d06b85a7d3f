#include "ares/game.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "ares/error.hpp"

namespace ares {

namespace {

constexpr std::uint64_t kSelectionStream = ~std::uint64_t{0};
constexpr std::uint64_t kDefenderStream = 0;
constexpr std::uint64_t kAttackerStream = 1;

bool outside_budget(const Tensor& q, const Tensor& x0, double eps) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] >= 0.0 && q[i] <= 1.0)) return true;
    if (!(std::abs(q[i] - x0[i]) <= eps + kBudgetSlack)) return true;
  }
  return false;
}

bool all_models_wrong(const DefensePool& pool, const Tensor& x, std::size_t label) {
  for (const auto& m : pool.models()) {
    if (predict(m, x) == label) return false;
  }
  return true;
}

// Probe queries go through the same defender and gating as round queries.
class DefenderProbeChannel final : public ProbeChannel {
 public:
  DefenderProbeChannel(const DefensePool& pool, const DefenderPolicy& policy, ThreatModel threat,
                       const EvalSample& sample, double eps, Rng& rng)
      : pool_(pool), policy_(policy), threat_(threat), sample_(sample), eps_(eps), rng_(rng) {}

  AttackerView probe(const Tensor& x) override {
    if (!x.same_shape(sample_.x0)) {
      throw ProtocolError("probe query shape " + shape_string(x.shape()) + " differs from the sample");
    }
    ++count_;
    Tensor q = project(x, sample_.x0, eps_);
    return attacker_view(respond(pool_, policy_, threat_, q, sample_.label, rng_));
  }

  std::size_t take_count() { return std::exchange(count_, 0); }

 private:
  const DefensePool& pool_;
  const DefenderPolicy& policy_;
  ThreatModel threat_;
  const EvalSample& sample_;
  double eps_;
  Rng& rng_;
  std::size_t count_ = 0;
};

}  // namespace

std::string to_string(WinCondition c) {
  return c == WinCondition::responder_misclassifies ? "responder_misclassifies" : "all_models_misclassify";
}

WinCondition parse_win_condition(std::string_view name) {
  if (name == "responder_misclassifies") return WinCondition::responder_misclassifies;
  if (name == "all_models_misclassify") return WinCondition::all_models_misclassify;
  throw ArgumentError("unknown win condition '" + std::string(name) + "'");
}

std::string to_string(Winner w) { return w == Winner::attacker ? "attacker" : "defender"; }

void ScenarioConfig::validate() const {
  if (max_rounds < 1) throw ScenarioError("max_rounds must be >= 1");
  if (num_trials < 1) throw ScenarioError("num_trials must be >= 1");
  attacker.validate();
  if (!compatible(attacker.kind, threat_model)) {
    throw ScenarioError("attacker '" + to_string(attacker.kind) + "' needs more information than the " +
                        to_string(threat_model) + " threat model provides");
  }
}

std::vector<EvalSample> select_eval_samples(const Dataset& data, const DefensePool& pool, std::size_t num_trials,
                                            Rng& rng) {
  if (data.input_dim() != pool.input_dim()) {
    throw ScenarioError("dataset width " + std::to_string(data.input_dim()) + " differs from pool input width " +
                        std::to_string(pool.input_dim()));
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (classifies_correctly_all(pool, data.inputs[i], data.labels[i])) eligible.push_back(i);
  }
  if (eligible.size() < num_trials) {
    throw ScenarioError("only " + std::to_string(eligible.size()) +
                        " samples are classified correctly by every pool model; " + std::to_string(num_trials) +
                        " trials requested");
  }
  // Partial Fisher-Yates: the first num_trials slots form the draw.
  for (std::size_t i = 0; i < num_trials; ++i) {
    std::size_t j = i + rng.uniform_index(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  std::vector<EvalSample> out;
  out.reserve(num_trials);
  for (std::size_t i = 0; i < num_trials; ++i) {
    const auto idx = eligible[i];
    out.push_back({idx, data.inputs[idx], data.labels[idx]});
  }
  return out;
}

EpisodeResult run_episode(AttackerAgent& attacker, const DefensePool& pool, const DefenderPolicy& defender,
                          const ScenarioConfig& scenario, const EvalSample& sample, Rng& defender_rng) {
  scenario.validate();
  defender.validate(pool);
  const double eps = scenario.attacker.attack.eps;
  EpisodeResult result;
  result.sample_index = sample.index;
  result.x0 = sample.x0;
  result.true_label = sample.label;
  DefenderProbeChannel probes(pool, defender, scenario.threat_model, sample, eps, defender_rng);

  std::optional<AttackerView> last;
  for (int round = 1; round <= scenario.max_rounds; ++round) {
    Tensor query = attacker.next_query(last, probes);
    if (!query.same_shape(sample.x0)) {
      throw ProtocolError("round " + std::to_string(round) + ": query shape " + shape_string(query.shape()) +
                          " differs from the sample");
    }
    RoundRecord rec;
    rec.round_index = round;
    rec.probe_queries = probes.take_count();
    if (outside_budget(query, sample.x0, eps)) {
      if (scenario.strict_budget) {
        throw ProtocolError("round " + std::to_string(round) + ": query outside the l-inf budget or [0,1] box");
      }
      query = project(query, sample.x0, eps);
      rec.budget_flagged = true;
    }
    QueryResponse resp = respond(pool, defender, scenario.threat_model, query, sample.label, defender_rng);
    rec.responder_index = resp.responder_index;
    rec.attacker_query_linf = linf_distance(query, sample.x0);
    rec.response_label = resp.label;
    rec.misclassified = resp.label != sample.label;
    const bool win = scenario.win_condition == WinCondition::responder_misclassifies
                         ? rec.misclassified
                         : all_models_wrong(pool, query, sample.label);
    rec.query = std::move(query);
    result.rounds.push_back(std::move(rec));
    result.rounds_used = round;
    if (win) {
      result.winner = Winner::attacker;
      break;
    }
    last = attacker_view(resp);
  }
  result.final_x = result.rounds.back().query;
  return result;
}

EpisodeResult run_episode(const DefensePool& pool, const DefenderPolicy& defender, const ScenarioConfig& scenario,
                          const EvalSample& sample, std::uint64_t episode_seed) {
  auto attacker = make_attacker(scenario.attacker, sample.x0, sample.label, Rng::child(episode_seed, kAttackerStream));
  Rng defender_rng = Rng::child(episode_seed, kDefenderStream);
  return run_episode(*attacker, pool, defender, scenario, sample, defender_rng);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_index) {
  return Rng::child_seed(master_seed, trial_index);
}

std::vector<EvalSample> experiment_samples(const Experiment& exp) {
  exp.scenario.validate();
  Rng rng = Rng::child(exp.scenario.master_seed, kSelectionStream);
  return select_eval_samples(exp.data, exp.pool, static_cast<std::size_t>(exp.scenario.num_trials), rng);
}

EpisodeResult run_trial(const Experiment& exp, const std::vector<EvalSample>& samples, std::size_t trial_index) {
  EpisodeResult r = run_episode(exp.pool, exp.defender, exp.scenario, samples.at(trial_index),
                                trial_seed(exp.scenario.master_seed, trial_index));
  r.trial_index = trial_index;
  return r;
}

ExperimentReport summarize(const Experiment& exp, std::vector<EpisodeResult> episodes) {
  ExperimentReport report;
  report.config = exp.scenario;
  report.pool_label = exp.pool_label;
  report.defender_policy = to_string(exp.defender);
  std::vector<double> win_rounds;
  for (const auto& e : episodes) {
    if (e.winner == Winner::attacker) {
      win_rounds.push_back(e.rounds_used);
    } else {
      ++report.timeouts;
    }
  }
  report.attacker_wins = win_rounds.size();
  if (!win_rounds.empty()) report.rounds = mean_ci95(win_rounds);
  if (!episodes.empty()) {
    report.adversarial_accuracy = adversarial_accuracy(episodes);
    report.attacker_win_rate = static_cast<double>(report.attacker_wins) / static_cast<double>(episodes.size());
  }
  for (const auto& e : episodes) {
    std::vector<SimilarityRecord> recs;
    for (const auto& pair : exp.scenario.instrument_pairs) {
      recs.push_back(instrument_episode_gradients(exp.pool, pair, e));
    }
    report.similarity.push_back(std::move(recs));
  }
  report.episodes = std::move(episodes);
  return report;
}

ExperimentReport run_experiment(const Experiment& exp, unsigned threads) {
  return run_experiment(exp, experiment_samples(exp), threads);
}

ExperimentReport run_experiment(const Experiment& exp, const std::vector<EvalSample>& samples, unsigned threads) {
  exp.scenario.validate();
  for (const auto& [a, b] : exp.scenario.instrument_pairs) {
    if (a >= exp.pool.size() || b >= exp.pool.size()) throw ScenarioError("instrumented pair index outside the pool");
  }
  const std::size_t n = samples.size();
  std::vector<EpisodeResult> episodes(n);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) episodes[i] = run_trial(exp, samples, i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            episodes[i] = run_trial(exp, samples, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }
  return summarize(exp, std::move(episodes));
}

}  // namespace ares
