#pragma once

// The defender agent: a pool of classifiers, a policy choosing which one
// answers each query, and responses gated by the threat model.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ares/attacks.hpp"
#include "ares/network.hpp"
#include "ares/rng.hpp"
#include "ares/threat_model.hpp"

namespace ares {

class DefensePool {
 public:
  // Throws ArgumentError if empty or if models disagree on input width or
  // class count.
  explicit DefensePool(std::vector<Model> models);

  std::size_t size() const { return models_.size(); }
  const Model& model(std::size_t i) const { return models_.at(i); }
  const std::vector<Model>& models() const { return models_; }
  const std::string& name(std::size_t i) const { return models_.at(i).spec.name; }
  std::size_t input_dim() const { return models_.front().spec.input_dim(); }
  std::size_t num_classes() const { return models_.front().spec.num_classes; }

 private:
  std::vector<Model> models_;
};

// Both kinds are non-adaptive: the selection distribution never changes
// during an episode.
struct DefenderPolicy {
  enum class Kind { static_index, uniform_random };
  Kind kind = Kind::uniform_random;
  std::size_t index = 0;

  static DefenderPolicy fixed(std::size_t i) { return {Kind::static_index, i}; }
  static DefenderPolicy uniform() { return {Kind::uniform_random, 0}; }
  void validate(const DefensePool& pool) const;
};

std::string to_string(const DefenderPolicy& policy);

struct QueryResponse {
  std::size_t label = 0;
  std::optional<Tensor> probs;
  std::optional<Tensor> loss_gradient;
  // Instrumentation only; never part of AttackerView.
  std::size_t responder_index = 0;
};

// The uniform policy consumes exactly one rng draw per call, even for a
// pool of one; the static policy consumes none.
std::size_t select_model(const DefenderPolicy& policy, const DefensePool& pool, Rng& rng);

// Truthful answer from the selected model. The label is always the
// responder's argmax; probabilities and gradient are attached only when the
// threat model allows. The gradient is taken at true_label.
QueryResponse respond(const DefensePool& pool, const DefenderPolicy& policy, ThreatModel threat, const Tensor& x,
                      std::size_t true_label, Rng& rng);

// Same as respond() with the responder already chosen.
QueryResponse respond_with(const DefensePool& pool, std::size_t responder, ThreatModel threat, const Tensor& x,
                           std::size_t true_label);

AttackerView attacker_view(const QueryResponse& response);

bool classifies_correctly_all(const DefensePool& pool, const Tensor& x, std::size_t true_label);

}  // namespace ares
