#include "ares/commands.hpp"

#include <filesystem>

#include "ares/analysis.hpp"
#include "ares/error.hpp"
#include "ares/game.hpp"
#include "ares/model_zoo.hpp"
#include "ares/report.hpp"

namespace ares {

namespace {

namespace fs = std::filesystem;
using oj = nlohmann::ordered_json;

constexpr const char* kRoundProtocol =
    "round 1 queries the clean input; rounds_used counts queries including that one; "
    "mean_rounds averages attacker-won episodes only";

// Stream for picking the two episodes compared in the final-image metric.
constexpr std::uint64_t kPairPickStream = 0xf1a1;

std::string output_dir(const RunConfig& config, const CommandOptions& options) {
  std::string dir = options.out_dir.value_or(config.output.directory);
  fs::create_directories(dir);
  return dir;
}

oj header(const RunConfig& config, const char* command) {
  oj doc;
  doc["tool"] = kToolVersion;
  doc["command"] = command;
  doc["config"] = config.resolved();
  return doc;
}

oj nullable(const std::optional<double>& v) { return v ? oj(*v) : oj(nullptr); }

void write_outputs(const RunConfig& config, const std::string& dir, const std::string& stem, const oj& doc,
                   const CsvTable& table, CommandOutput& out) {
  if (config.output.json) {
    auto path = (fs::path(dir) / (stem + ".json")).string();
    write_text_file(path, canonical_json(doc));
    out.files.push_back(path);
  }
  if (config.output.csv) {
    auto path = (fs::path(dir) / (stem + ".csv")).string();
    write_text_file(path, table.str());
    out.files.push_back(path);
  }
  out.document = doc;
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

ScenarioConfig effective_scenario(const RunConfig& config, const CommandOptions& options) {
  ScenarioConfig s = config.scenario;
  if (options.strict_budget) s.strict_budget = true;
  return s;
}

RunConfig with_options(const RunConfig& config, const CommandOptions& options) {
  RunConfig c = config;
  c.scenario = effective_scenario(config, options);
  return c;
}

}  // namespace

SplitData load_dataset(const DatasetConfig& config) {
  Dataset full;
  if (config.kind == DatasetConfig::Kind::blobs) {
    full = generate_blobs(config.blobs);
  } else {
    full = load_idx_pair(config.images_path, config.labels_path);
    if (config.num_classes) {
      if (*config.num_classes < full.num_classes) {
        throw ConfigError("dataset.num_classes is smaller than the largest label + 1 in the IDX file");
      }
      full.num_classes = *config.num_classes;
    }
    if (config.per_class_limit) full = take_per_class(full, *config.per_class_limit);
  }
  full.validate();
  auto [train, test] = split(full, config.train_fraction, config.split_seed);
  return {std::move(train), std::move(test)};
}

ModelSpec model_spec(const ModelConfig& config, std::size_t input_dim, std::size_t num_classes) {
  try {
    if (config.layers) {
      ModelSpec spec{config.name, *config.layers, num_classes};
      spec.validate();
      if (spec.input_dim() != input_dim) {
        throw DimensionError("first layer takes " + std::to_string(spec.input_dim()) + " inputs but the data has " +
                             std::to_string(input_dim));
      }
      return spec;
    }
    return ModelSpec::mlp(config.name, input_dim, config.hidden, num_classes);
  } catch (const DimensionError& e) {
    throw ConfigError("model '" + config.name + "': " + e.what());
  }
}

ModelRegistry::ModelRegistry(const RunConfig& config, const Dataset& train, std::ostream* log)
    : config_(config), train_(train), log_(log) {}

const Model& ModelRegistry::get(const std::string& name) {
  if (auto it = models_.find(name); it != models_.end()) return it->second;
  const ModelConfig& mc = config_.model(name);
  Model model;
  if (mc.load_path) {
    model = load_model(*mc.load_path);
    if (model.spec.input_dim() != train_.input_dim() || model.spec.num_classes != train_.num_classes) {
      throw ConfigError("model '" + name + "' loaded from '" + *mc.load_path + "' does not fit the dataset geometry");
    }
    model.spec.name = name;
    log_line(log_, "loaded model '" + name + "' from " + *mc.load_path);
  } else {
    const ModelSpec spec = model_spec(mc, train_.input_dim(), train_.num_classes);
    log_line(log_, "training model '" + name + "' (" + to_string(mc.training->mode) + ")");
    auto result = train(spec, train_, *mc.training);
    losses_[name] = result.epoch_losses;
    model = std::move(result.model);
  }
  return models_.emplace(name, std::move(model)).first->second;
}

std::optional<std::vector<double>> ModelRegistry::epoch_losses(const std::string& name) const {
  if (auto it = losses_.find(name); it != losses_.end()) return it->second;
  return std::nullopt;
}

CommandOutput cmd_train(const RunConfig& config, const CommandOptions& options) {
  const std::string dir = output_dir(config, options);
  const auto data = load_dataset(config.dataset);
  ModelRegistry registry(config, data.train, options.log);
  CommandOutput out;
  fs::create_directories(fs::path(dir) / "models");

  oj doc = header(with_options(config, options), "train");
  oj rows = oj::array();
  CsvTable table({"model", "train_method", "natural_accuracy", "adversarial_accuracy", "num_samples",
                  "final_train_loss"});
  for (const auto& mc : config.models) {
    const Model& model = registry.get(mc.name);
    if (!mc.load_path) {
      auto path = (fs::path(dir) / "models" / (mc.name + ".aresmdl")).string();
      save_model(model, path);
      out.files.push_back(path);
    }
    const EvalReport ev = evaluate(model, data.test, config.evaluation);
    const std::string method = mc.load_path ? "loaded" : (mc.training->mode == TrainingMode::natural ? "N" : "A");
    std::optional<double> final_loss;
    if (auto losses = registry.epoch_losses(mc.name)) final_loss = losses->back();
    oj row;
    row["model"] = mc.name;
    row["train_method"] = method;
    row["natural_accuracy"] = ev.natural_accuracy;
    row["adversarial_accuracy"] = nullable(ev.adversarial_accuracy);
    row["num_samples"] = ev.num_samples;
    row["final_train_loss"] = nullable(final_loss);
    rows.push_back(row);
    table.add_row({mc.name, method, format_real(ev.natural_accuracy), csv_optional(ev.adversarial_accuracy),
                   std::to_string(ev.num_samples), csv_optional(final_loss)});
    log_line(options.log, "model '" + mc.name + "': natural " + format_real(ev.natural_accuracy) + ", adversarial " +
                              csv_optional(ev.adversarial_accuracy));
  }
  doc["models"] = rows;
  write_outputs(config, dir, "train_report", doc, table, out);
  return out;
}

CommandOutput cmd_wargame(const RunConfig& config, const CommandOptions& options) {
  if (config.pools.empty()) throw ConfigError("pools: wargame needs at least one pool");
  const std::string dir = output_dir(config, options);
  const auto data = load_dataset(config.dataset);
  ModelRegistry registry(config, data.train, options.log);
  const ScenarioConfig scenario = effective_scenario(config, options);

  CommandOutput out;
  oj doc = header(with_options(config, options), "wargame");
  doc["round_protocol"] = kRoundProtocol;
  oj results = oj::array();
  oj table_rows = oj::array();
  CsvTable table({"pool", "mean_rounds", "ci95", "attacker_win_rate", "adversarial_accuracy", "timeouts"});

  for (const auto& pc : config.pools) {
    std::vector<Model> members;
    for (const auto& name : pc.models) members.push_back(registry.get(name));
    const DefensePool pool(std::move(members));
    Experiment exp{data.test, pool, pc.policy, scenario, pc.name};
    log_line(options.log, "pool '" + pc.name + "': running " + std::to_string(scenario.num_trials) + " trials");
    ExperimentReport rep;
    try {
      rep = run_experiment(exp, options.threads);
    } catch (const Error& e) {
      throw Error("pool '" + pc.name + "': " + e.what());
    }

    std::optional<double> mean;
    std::optional<double> ci;
    std::optional<double> sd;
    if (rep.rounds) {
      mean = rep.rounds->mean;
      ci = rep.rounds->ci95_half_width;
      sd = rep.rounds->sample_std;
    }
    std::size_t flagged = 0;
    oj episodes = oj::array();
    for (const auto& e : rep.episodes) {
      oj ej;
      ej["trial"] = e.trial_index;
      ej["sample"] = e.sample_index;
      ej["label"] = e.true_label;
      ej["winner"] = to_string(e.winner);
      ej["rounds_used"] = e.rounds_used;
      oj responders = oj::array();
      double max_linf = 0.0;
      for (const auto& r : e.rounds) {
        responders.push_back(r.responder_index);
        max_linf = std::max(max_linf, r.attacker_query_linf);
        if (r.budget_flagged) ++flagged;
      }
      ej["responders"] = responders;
      ej["max_query_linf"] = max_linf;
      episodes.push_back(ej);
    }
    oj pj;
    pj["pool"] = pc.name;
    pj["models"] = pc.models;
    pj["policy"] = rep.defender_policy;
    pj["trials"] = rep.episodes.size();
    pj["attacker_wins"] = rep.attacker_wins;
    pj["timeouts"] = rep.timeouts;
    pj["attacker_win_rate"] = rep.attacker_win_rate;
    pj["adversarial_accuracy"] = rep.adversarial_accuracy;
    pj["mean_rounds"] = nullable(mean);
    pj["sample_std"] = nullable(sd);
    pj["ci95"] = nullable(ci);
    pj["budget_flagged_rounds"] = flagged;
    pj["episodes"] = episodes;
    results.push_back(pj);

    oj row;
    row["pool"] = pc.name;
    row["mean_rounds"] = nullable(mean);
    row["ci95"] = nullable(ci);
    table_rows.push_back(row);
    table.add_row({pc.name, csv_optional(mean), csv_optional(ci), format_real(rep.attacker_win_rate),
                   format_real(rep.adversarial_accuracy), std::to_string(rep.timeouts)});
    log_line(options.log, "pool '" + pc.name + "': mean rounds " + csv_optional(mean) + " +/- " + csv_optional(ci) +
                              ", adversarial accuracy " + format_real(rep.adversarial_accuracy));
  }
  doc["results"] = results;
  doc["table"] = table_rows;
  write_outputs(config, dir, "wargame_report", doc, table, out);
  return out;
}

CommandOutput cmd_similarity(const RunConfig& config, const CommandOptions& options) {
  if (!config.analysis || config.analysis->pairs.empty()) {
    throw ConfigError("analysis: similarity needs an analysis section with at least one pair");
  }
  const std::string dir = output_dir(config, options);
  const auto data = load_dataset(config.dataset);
  ModelRegistry registry(config, data.train, options.log);
  ScenarioConfig scenario = effective_scenario(config, options);
  scenario.max_rounds = config.analysis->max_rounds;
  scenario.num_trials = config.analysis->num_trials;

  CommandOutput out;
  oj doc = header(with_options(config, options), "similarity");
  doc["round_protocol"] = kRoundProtocol;
  oj rows = oj::array();
  CsvTable table({"model_a", "model_b", "outcome", "trials", "round_avg", "final_image_cosine", "undefined_rounds"});

  for (const auto& [name_a, name_b] : config.analysis->pairs) {
    std::vector<Model> members{registry.get(name_a)};
    std::pair<std::size_t, std::size_t> pair{0, 0};
    if (name_b != name_a) {
      members.push_back(registry.get(name_b));
      pair.second = 1;
    }
    const DefensePool pool(std::move(members));
    ScenarioConfig s = scenario;
    s.instrument_pairs = {pair};
    Experiment exp{data.test, pool, DefenderPolicy::uniform(), s, name_a + "+" + name_b};

    // Every trial attacks the same randomly chosen sample.
    ScenarioConfig pick = s;
    pick.num_trials = 1;
    const auto chosen = experiment_samples(Experiment{data.test, pool, exp.defender, pick, exp.pool_label});
    const std::vector<EvalSample> samples(static_cast<std::size_t>(s.num_trials), chosen.front());
    const ExperimentReport rep = run_experiment(exp, samples, options.threads);

    Rng pick_rng = Rng::child(s.master_seed, kPairPickStream);
    for (Winner outcome : {Winner::attacker, Winner::defender}) {
      std::vector<std::size_t> group;
      for (std::size_t e = 0; e < rep.episodes.size(); ++e) {
        if (rep.episodes[e].winner == outcome) group.push_back(e);
      }
      if (group.empty()) continue;
      double sum = 0.0;
      std::size_t defined = 0;
      std::size_t undefined = 0;
      for (auto e : group) {
        const auto& rec = rep.similarity[e].front();
        for (const auto& c : rec.per_round_cosines) {
          if (c) {
            sum += *c;
            ++defined;
          }
        }
        undefined += rec.undefined_rounds;
      }
      std::optional<double> round_avg;
      if (defined) round_avg = sum / static_cast<double>(defined);
      std::optional<double> final_cos;
      if (group.size() >= 2) {
        const std::size_t i = pick_rng.uniform_index(group.size());
        std::size_t j = pick_rng.uniform_index(group.size() - 1);
        if (j >= i) ++j;
        try {
          final_cos = final_perturbation_similarity(rep.episodes[group[i]], rep.episodes[group[j]]);
        } catch (const UndefinedSimilarityError&) {
        }
      }
      const std::string outcome_name = outcome == Winner::attacker ? "attacker_wins" : "defender_wins";
      oj row;
      row["model_a"] = name_a;
      row["model_b"] = name_b;
      row["outcome"] = outcome_name;
      row["sample"] = chosen.front().index;
      row["trials"] = group.size();
      row["round_avg"] = nullable(round_avg);
      row["final_image_cosine"] = nullable(final_cos);
      row["undefined_rounds"] = undefined;
      rows.push_back(row);
      table.add_row({name_a, name_b, outcome_name, std::to_string(group.size()), csv_optional(round_avg),
                     csv_optional(final_cos), std::to_string(undefined)});
      log_line(options.log, "pair " + name_a + "/" + name_b + " " + outcome_name + ": round_avg " +
                                csv_optional(round_avg) + ", final image " + csv_optional(final_cos));
    }
  }
  doc["pairs"] = rows;
  write_outputs(config, dir, "similarity_report", doc, table, out);
  return out;
}

}  // namespace ares
