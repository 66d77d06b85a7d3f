#include "ares/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ares/error.hpp"

namespace ares {

namespace {

using json = nlohmann::json;

// A JSON value plus the dotted path used in diagnostics.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_.empty() ? msg : path_ + ": " + msg); }

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    for (const auto& [key, _] : value_.items()) {
      if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }) == allowed.end()) {
        Node(value_[key], child_path(key)).fail("unknown key");
      }
    }
  }

  bool has(const char* key) const { return value_.is_object() && value_.contains(key); }

  Node at(const char* key) const {
    if (!has(key)) fail(std::string("missing required key '") + key + "'");
    return Node(value_.at(key), child_path(key));
  }

  std::optional<Node> get(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Node(value_.at(key), child_path(key));
  }

  Node index(std::size_t i) const { return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]"); }

  std::size_t array_size() const {
    if (!value_.is_array()) fail("expected an array");
    return value_.size();
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }

  std::int64_t integer() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    return value_.get<std::int64_t>();
  }

  std::uint64_t seed() const {
    if (value_.is_number_unsigned()) return value_.get<std::uint64_t>();
    auto v = integer();
    if (v < 0) fail("expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  std::size_t positive() const {
    auto v = integer();
    if (v <= 0) fail("expected a positive integer");
    return static_cast<std::size_t>(v);
  }

  std::string str() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& value_;
  std::string path_;
};

template <typename F>
auto checked(const Node& node, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    node.fail(e.what());
  }
}

DatasetConfig parse_dataset(const Node& n) {
  DatasetConfig d;
  const auto kind = n.at("kind").str();
  if (kind == "blobs") {
    n.expect_object({"kind", "num_classes", "dim", "samples_per_class", "center_spread", "noise_std", "seed",
                     "train_fraction", "split_seed"});
    d.kind = DatasetConfig::Kind::blobs;
    d.blobs.num_classes = n.at("num_classes").positive();
    d.blobs.dim = n.at("dim").positive();
    d.blobs.samples_per_class = n.at("samples_per_class").positive();
    if (auto v = n.get("center_spread")) d.blobs.center_spread = v->number();
    if (auto v = n.get("noise_std")) d.blobs.noise_std = v->number();
    if (auto v = n.get("seed")) d.blobs.seed = v->seed();
    if (!(d.blobs.center_spread > 0.0 && d.blobs.center_spread <= 1.0)) {
      n.at("center_spread").fail("must lie in (0, 1]");
    }
    if (!(d.blobs.noise_std >= 0.0)) n.at("noise_std").fail("must be >= 0");
  } else if (kind == "idx") {
    n.expect_object({"kind", "images", "labels", "per_class_limit", "num_classes", "train_fraction", "split_seed"});
    d.kind = DatasetConfig::Kind::idx;
    d.images_path = n.at("images").str();
    d.labels_path = n.at("labels").str();
    if (auto v = n.get("per_class_limit")) d.per_class_limit = v->positive();
    if (auto v = n.get("num_classes")) d.num_classes = v->positive();
  } else {
    n.at("kind").fail("expected \"blobs\" or \"idx\"");
  }
  if (auto v = n.get("train_fraction")) {
    d.train_fraction = v->number();
    if (!(d.train_fraction > 0.0 && d.train_fraction < 1.0)) v->fail("must lie strictly between 0 and 1");
  }
  if (auto v = n.get("split_seed")) d.split_seed = v->seed();
  return d;
}

AttackConfig parse_attack(const Node& n, AttackConfig a, const char* steps_key) {
  n.expect_object({"eps", "alpha", steps_key, "random_start"});
  if (auto v = n.get("eps")) a.eps = v->number();
  if (auto v = n.get("alpha")) a.alpha = v->number();
  if (auto v = n.get(steps_key)) a.max_steps = static_cast<int>(v->positive());
  if (auto v = n.get("random_start")) a.random_start = v->boolean();
  checked(n, [&] { a.validate(); });
  return a;
}

TrainingConfig parse_training(const Node& n, const AttackConfig& scenario_attack) {
  n.expect_object({"mode", "learning_rate", "epochs", "batch_size", "seed", "adv_eps", "adv_alpha", "adv_steps",
                   "adv_random_start"});
  TrainingConfig t;
  t.adv_eps = scenario_attack.eps;
  t.adv_alpha = scenario_attack.alpha;
  if (auto v = n.get("mode")) t.mode = checked(*v, [&] { return parse_training_mode(v->str()); });
  if (auto v = n.get("learning_rate")) t.learning_rate = v->number();
  if (auto v = n.get("epochs")) t.epochs = static_cast<int>(v->positive());
  if (auto v = n.get("batch_size")) t.batch_size = static_cast<int>(v->positive());
  if (auto v = n.get("seed")) t.seed = v->seed();
  if (auto v = n.get("adv_eps")) t.adv_eps = v->number();
  if (auto v = n.get("adv_alpha")) t.adv_alpha = v->number();
  if (auto v = n.get("adv_steps")) t.adv_steps = static_cast<int>(v->positive());
  if (auto v = n.get("adv_random_start")) t.adv_random_start = v->boolean();
  checked(n, [&] { t.validate(); });
  return t;
}

ModelConfig parse_model(const Node& n, const AttackConfig& scenario_attack) {
  n.expect_object({"name", "hidden", "layers", "training", "load"});
  ModelConfig m;
  m.name = n.at("name").str();
  if (m.name.empty()) n.at("name").fail("must not be empty");
  if (auto v = n.get("load")) m.load_path = v->str();
  if (auto v = n.get("hidden")) {
    for (std::size_t i = 0; i < v->array_size(); ++i) m.hidden.push_back(v->index(i).positive());
  }
  if (auto v = n.get("layers")) {
    if (n.has("hidden")) v->fail("give either 'hidden' or 'layers', not both");
    std::vector<LayerSpec> layers;
    for (std::size_t i = 0; i < v->array_size(); ++i) {
      Node l = v->index(i);
      l.expect_object({"kind", "in", "out", "width"});
      const auto kind = l.at("kind").str();
      if (kind == "dense") {
        layers.push_back(LayerSpec::dense(l.at("in").positive(), l.at("out").positive()));
      } else if (kind == "relu") {
        layers.push_back(LayerSpec::relu(l.has("width") ? l.at("width").positive() : 0));
      } else {
        l.at("kind").fail("expected \"dense\" or \"relu\"");
      }
    }
    // ReLU width may be omitted; it inherits the previous layer's width.
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].kind == LayerKind::relu && layers[i].in_dim == 0) {
        if (i == 0) v->index(i).fail("relu as first layer needs an explicit width");
        layers[i].in_dim = layers[i].out_dim = layers[i - 1].out_dim;
      }
    }
    m.layers = std::move(layers);
  }
  if (auto v = n.get("training")) {
    if (m.load_path) v->fail("a model with 'load' cannot also be trained");
    m.training = parse_training(*v, scenario_attack);
  } else if (!m.load_path) {
    m.training = TrainingConfig{};
    m.training->adv_eps = scenario_attack.eps;
    m.training->adv_alpha = scenario_attack.alpha;
  }
  return m;
}

DefenderPolicy parse_policy(const Node& n) {
  if (n.raw().is_string()) {
    const auto s = n.str();
    if (s == "uniform_random") return DefenderPolicy::uniform();
    n.fail("expected \"uniform_random\" or {\"static\": index}");
  }
  n.expect_object({"static"});
  const auto index = n.at("static").integer();
  if (index < 0) n.at("static").fail("must be >= 0");
  return DefenderPolicy::fixed(static_cast<std::size_t>(index));
}

ScenarioConfig parse_scenario(const Node* n, const AttackConfig& default_attack) {
  ScenarioConfig s;
  s.attacker.attack = default_attack;
  if (!n) return s;
  n->expect_object({"threat_model", "max_rounds", "num_trials", "win_condition", "master_seed", "strict_budget",
                    "attack", "attacker"});
  if (auto v = n->get("threat_model")) s.threat_model = checked(*v, [&] { return parse_threat_model(v->str()); });
  if (auto v = n->get("max_rounds")) s.max_rounds = static_cast<int>(v->positive());
  if (auto v = n->get("num_trials")) s.num_trials = static_cast<int>(v->positive());
  if (auto v = n->get("win_condition")) s.win_condition = checked(*v, [&] { return parse_win_condition(v->str()); });
  if (auto v = n->get("master_seed")) s.master_seed = v->seed();
  if (auto v = n->get("strict_budget")) s.strict_budget = v->boolean();
  if (auto v = n->get("attack")) s.attacker.attack = parse_attack(*v, default_attack, "max_steps");
  if (auto v = n->get("attacker")) {
    v->expect_object({"kind", "nes_sigma", "nes_samples"});
    if (auto k = v->get("kind")) s.attacker.kind = checked(*k, [&] { return parse_attacker_kind(k->str()); });
    if (auto k = v->get("nes_sigma")) s.attacker.nes_sigma = k->number();
    if (auto k = v->get("nes_samples")) s.attacker.nes_samples = static_cast<int>(k->positive());
  } else if (s.threat_model == ThreatModel::soft_black_box) {
    s.attacker.kind = AttackerKind::nes_softbox;
  } else if (s.threat_model == ThreatModel::hard_black_box) {
    s.attacker.kind = AttackerKind::random_sign_hardbox;
  }
  checked(*n, [&] { s.validate(); });
  return s;
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

nlohmann::ordered_json attack_json(const AttackConfig& a, const char* steps_key) {
  nlohmann::ordered_json j;
  j["eps"] = a.eps;
  j["alpha"] = a.alpha;
  j[steps_key] = a.max_steps;
  j["random_start"] = a.random_start;
  return j;
}

}  // namespace

const ModelConfig& RunConfig::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  throw ConfigError("undefined model '" + name + "'");
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config syntax error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  Node root(doc, "");
  if (!doc.is_object()) root.fail("config must be a JSON object");
  root.expect_object({"dataset", "models", "pools", "scenario", "evaluation", "analysis", "output"});

  RunConfig cfg;
  cfg.dataset = parse_dataset(root.at("dataset"));

  // Desk-scale data: the library defaults (8/255, 2/255) suit natural images.
  AttackConfig default_attack;
  default_attack.eps = 0.1;
  default_attack.alpha = 0.025;
  auto scenario_node = root.get("scenario");
  cfg.scenario = parse_scenario(scenario_node ? &*scenario_node : nullptr, default_attack);

  cfg.evaluation = cfg.scenario.attacker.attack;
  cfg.evaluation.max_steps = 10;
  cfg.evaluation.random_start = false;
  if (auto v = root.get("evaluation")) cfg.evaluation = parse_attack(*v, cfg.evaluation, "steps");

  Node models = root.at("models");
  std::set<std::string> names;
  for (std::size_t i = 0; i < models.array_size(); ++i) {
    auto m = parse_model(models.index(i), cfg.scenario.attacker.attack);
    if (!names.insert(m.name).second) models.index(i).at("name").fail("duplicate model name '" + m.name + "'");
    cfg.models.push_back(std::move(m));
  }
  if (cfg.models.empty()) models.fail("at least one model is required");

  if (auto pools = root.get("pools")) {
    std::set<std::string> pool_names;
    for (std::size_t i = 0; i < pools->array_size(); ++i) {
      Node p = pools->index(i);
      p.expect_object({"name", "models", "policy"});
      PoolConfig pc;
      pc.name = p.at("name").str();
      if (!pool_names.insert(pc.name).second) p.at("name").fail("duplicate pool name '" + pc.name + "'");
      Node members = p.at("models");
      for (std::size_t k = 0; k < members.array_size(); ++k) {
        auto name = members.index(k).str();
        if (!names.count(name)) members.index(k).fail("undefined model '" + name + "'");
        pc.models.push_back(std::move(name));
      }
      if (pc.models.empty()) members.fail("a pool needs at least one model");
      if (auto pol = p.get("policy")) pc.policy = parse_policy(*pol);
      if (pc.policy.kind == DefenderPolicy::Kind::static_index && pc.policy.index >= pc.models.size()) {
        p.at("policy").fail("static index outside the pool");
      }
      cfg.pools.push_back(std::move(pc));
    }
  }

  if (auto a = root.get("analysis")) {
    a->expect_object({"pairs", "max_rounds", "num_trials"});
    AnalysisConfig ac;
    Node pairs = a->at("pairs");
    for (std::size_t i = 0; i < pairs.array_size(); ++i) {
      Node pr = pairs.index(i);
      if (pr.array_size() != 2) pr.fail("a pair lists exactly two model names");
      auto first = pr.index(0).str();
      auto second = pr.index(1).str();
      if (!names.count(first)) pr.index(0).fail("undefined model '" + first + "'");
      if (!names.count(second)) pr.index(1).fail("undefined model '" + second + "'");
      ac.pairs.emplace_back(std::move(first), std::move(second));
    }
    if (auto v = a->get("max_rounds")) ac.max_rounds = static_cast<int>(v->positive());
    if (auto v = a->get("num_trials")) ac.num_trials = static_cast<int>(v->positive());
    cfg.analysis = std::move(ac);
  }

  if (auto o = root.get("output")) {
    o->expect_object({"directory", "formats"});
    if (auto v = o->get("directory")) cfg.output.directory = v->str();
    if (auto v = o->get("formats")) {
      cfg.output.json = cfg.output.csv = false;
      for (std::size_t i = 0; i < v->array_size(); ++i) {
        auto f = v->index(i).str();
        if (f == "json") {
          cfg.output.json = true;
        } else if (f == "csv") {
          cfg.output.csv = true;
        } else {
          v->index(i).fail("expected \"json\" or \"csv\"");
        }
      }
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

nlohmann::ordered_json RunConfig::resolved() const {
  using oj = nlohmann::ordered_json;
  oj j;
  oj d;
  if (dataset.kind == DatasetConfig::Kind::blobs) {
    d["kind"] = "blobs";
    d["num_classes"] = dataset.blobs.num_classes;
    d["dim"] = dataset.blobs.dim;
    d["samples_per_class"] = dataset.blobs.samples_per_class;
    d["center_spread"] = dataset.blobs.center_spread;
    d["noise_std"] = dataset.blobs.noise_std;
    d["seed"] = dataset.blobs.seed;
  } else {
    d["kind"] = "idx";
    d["images"] = dataset.images_path;
    d["labels"] = dataset.labels_path;
    d["per_class_limit"] = dataset.per_class_limit ? oj(*dataset.per_class_limit) : oj(nullptr);
    d["num_classes"] = dataset.num_classes ? oj(*dataset.num_classes) : oj(nullptr);
  }
  d["train_fraction"] = dataset.train_fraction;
  d["split_seed"] = dataset.split_seed;
  j["dataset"] = d;

  oj ms = oj::array();
  for (const auto& m : models) {
    oj mj;
    mj["name"] = m.name;
    if (m.layers) {
      oj ls = oj::array();
      for (const auto& l : *m.layers) {
        oj lj;
        lj["kind"] = l.kind == LayerKind::dense ? "dense" : "relu";
        lj["in"] = l.in_dim;
        lj["out"] = l.out_dim;
        ls.push_back(lj);
      }
      mj["layers"] = ls;
    } else {
      mj["hidden"] = m.hidden;
    }
    if (m.load_path) mj["load"] = *m.load_path;
    if (m.training) {
      const auto& t = *m.training;
      oj tj;
      tj["mode"] = to_string(t.mode);
      tj["learning_rate"] = t.learning_rate;
      tj["epochs"] = t.epochs;
      tj["batch_size"] = t.batch_size;
      tj["seed"] = t.seed;
      tj["adv_eps"] = t.adv_eps;
      tj["adv_alpha"] = t.adv_alpha;
      tj["adv_steps"] = t.adv_steps;
      tj["adv_random_start"] = t.adv_random_start;
      mj["training"] = tj;
    }
    ms.push_back(mj);
  }
  j["models"] = ms;

  oj ps = oj::array();
  for (const auto& p : pools) {
    oj pj;
    pj["name"] = p.name;
    pj["models"] = p.models;
    if (p.policy.kind == DefenderPolicy::Kind::static_index) {
      pj["policy"] = oj{{"static", p.policy.index}};
    } else {
      pj["policy"] = "uniform_random";
    }
    ps.push_back(pj);
  }
  j["pools"] = ps;

  oj s;
  s["threat_model"] = to_string(scenario.threat_model);
  s["max_rounds"] = scenario.max_rounds;
  s["num_trials"] = scenario.num_trials;
  s["win_condition"] = to_string(scenario.win_condition);
  s["master_seed"] = scenario.master_seed;
  s["strict_budget"] = scenario.strict_budget;
  s["attack"] = attack_json(scenario.attacker.attack, "max_steps");
  oj a;
  a["kind"] = to_string(scenario.attacker.kind);
  a["nes_sigma"] = scenario.attacker.nes_sigma;
  a["nes_samples"] = scenario.attacker.nes_samples;
  s["attacker"] = a;
  j["scenario"] = s;
  j["evaluation"] = attack_json(evaluation, "steps");

  if (analysis) {
    oj an;
    oj prs = oj::array();
    for (const auto& [x, y] : analysis->pairs) prs.push_back(oj::array({x, y}));
    an["pairs"] = prs;
    an["max_rounds"] = analysis->max_rounds;
    an["num_trials"] = analysis->num_trials;
    j["analysis"] = an;
  }
  // The output directory is left out so reports do not depend on where they are written.
  oj out;
  oj formats = oj::array();
  if (output.json) formats.push_back("json");
  if (output.csv) formats.push_back("csv");
  out["formats"] = formats;
  j["output"] = out;
  return j;
}

}  // namespace ares
