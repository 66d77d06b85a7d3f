#include "ares/defenses.hpp"

#include "ares/error.hpp"

namespace ares {

DefensePool::DefensePool(std::vector<Model> models) : models_(std::move(models)) {
  if (models_.empty()) throw ArgumentError("defense pool must contain at least one model");
  for (const auto& m : models_) {
    m.validate();
    if (m.spec.input_dim() != models_.front().spec.input_dim() ||
        m.spec.num_classes != models_.front().spec.num_classes) {
      throw ArgumentError("defense pool model '" + m.spec.name + "' disagrees with '" + models_.front().spec.name +
                          "' on input width or class count");
    }
  }
}

void DefenderPolicy::validate(const DefensePool& pool) const {
  if (kind == Kind::static_index && index >= pool.size()) {
    throw ArgumentError("static defender index " + std::to_string(index) + " outside pool of " +
                        std::to_string(pool.size()));
  }
}

std::string to_string(const DefenderPolicy& policy) {
  if (policy.kind == DefenderPolicy::Kind::static_index) return "static(" + std::to_string(policy.index) + ")";
  return "uniform_random";
}

std::size_t select_model(const DefenderPolicy& policy, const DefensePool& pool, Rng& rng) {
  if (policy.kind == DefenderPolicy::Kind::static_index) {
    policy.validate(pool);
    return policy.index;
  }
  return rng.uniform_index(pool.size());
}

QueryResponse respond_with(const DefensePool& pool, std::size_t responder, ThreatModel threat, const Tensor& x,
                           std::size_t true_label) {
  if (responder >= pool.size()) {
    throw ArgumentError("responder " + std::to_string(responder) + " outside a pool of " +
                        std::to_string(pool.size()));
  }
  const Model& model = pool.model(responder);
  Tensor probs = softmax(logits(model, x));
  QueryResponse r;
  r.responder_index = responder;
  r.label = argmax(probs);
  if (exposes_gradient(threat)) r.loss_gradient = input_gradient(model, x, true_label);
  if (exposes_probs(threat)) r.probs = std::move(probs);
  return r;
}

QueryResponse respond(const DefensePool& pool, const DefenderPolicy& policy, ThreatModel threat, const Tensor& x,
                      std::size_t true_label, Rng& rng) {
  if (x.size() != pool.input_dim()) {
    throw DimensionError("respond: query has " + std::to_string(x.size()) + " values, pool expects " +
                         std::to_string(pool.input_dim()));
  }
  return respond_with(pool, select_model(policy, pool, rng), threat, x, true_label);
}

AttackerView attacker_view(const QueryResponse& response) {
  return {response.label, response.probs, response.loss_gradient};
}

bool classifies_correctly_all(const DefensePool& pool, const Tensor& x, std::size_t true_label) {
  for (const auto& m : pool.models()) {
    if (predict(m, x) != true_label) return false;
  }
  return true;
}

}  // namespace ares
