#include "ares/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "ares/error.hpp"

namespace ares {

std::string to_string(ThreatModel t) {
  switch (t) {
    case ThreatModel::white_box: return "white_box";
    case ThreatModel::soft_black_box: return "soft_black_box";
    case ThreatModel::hard_black_box: return "hard_black_box";
  }
  return "unknown";
}

ThreatModel parse_threat_model(std::string_view name) {
  if (name == "white_box") return ThreatModel::white_box;
  if (name == "soft_black_box") return ThreatModel::soft_black_box;
  if (name == "hard_black_box") return ThreatModel::hard_black_box;
  throw ArgumentError("unknown threat model '" + std::string(name) + "'");
}

void AttackConfig::validate() const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ArgumentError("attack eps must be finite and >= 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ArgumentError("attack alpha must be finite and > 0");
  if (max_steps < 1) throw ArgumentError("attack max_steps must be >= 1");
}

Tensor sign_step(const Tensor& x, const Tensor& grad, double alpha) {
  require_same_shape(x, grad, "sign_step");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (grad[i] > 0.0) {
      out[i] += alpha;
    } else if (grad[i] < 0.0) {
      out[i] -= alpha;
    }
  }
  return out;
}

Tensor project(const Tensor& x, const Tensor& x0, double eps) {
  require_same_shape(x, x0, "project");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = std::clamp(out[i], x0[i] - eps, x0[i] + eps);
    out[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

AttackState pgd_round_step(const AttackState& state, const Tensor& grad, const AttackConfig& config) {
  AttackState next = state;
  next.x = project(sign_step(state.x, grad, config.alpha), state.x0, config.eps);
  ++next.steps_taken;
  return next;
}

GradientOracle model_oracle(const Model& model) {
  // Captures by reference: the model must outlive the oracle.
  return {[&model](const Tensor& x, std::size_t label) { return input_gradient(model, x, label); },
          [&model](const Tensor& x) { return predict(model, x); }};
}

PgdResult pgd_full(const GradientOracle& oracle, const Tensor& x0, std::size_t true_label,
                   const AttackConfig& config, Rng* rng, bool stop_on_success) {
  config.validate();
  AttackState state = AttackState::start(x0, true_label);
  if (config.random_start && config.eps > 0.0) {
    if (!rng) throw ArgumentError("pgd_full: random_start requires an rng");
    Tensor start = x0;
    for (std::size_t i = 0; i < start.size(); ++i) start[i] += rng->uniform(-config.eps, config.eps);
    state.x = project(start, x0, config.eps);
  }
  for (int step = 0; step < config.max_steps; ++step) {
    if (stop_on_success && oracle.predict(state.x) != true_label) {
      return {state.x, true, step};
    }
    state = pgd_round_step(state, oracle.loss_gradient(state.x, true_label), config);
  }
  const bool success = oracle.predict(state.x) != true_label;
  return {state.x, success, config.max_steps};
}

Tensor nes_gradient_estimate(const ProbOracle& oracle, const Tensor& x, std::size_t true_label, double sigma,
                             int n_samples, Rng& rng) {
  if (!(sigma > 0.0)) throw ArgumentError("nes_gradient_estimate: sigma must be positive");
  if (n_samples < 1) throw ArgumentError("nes_gradient_estimate: n_samples must be >= 1");
  auto loss_at = [&](const Tensor& q) {
    Tensor p = oracle(q);
    if (true_label >= p.size()) throw ArgumentError("nes_gradient_estimate: label outside probability vector");
    return -std::log(std::max(p[true_label], 1e-300));
  };
  Tensor estimate(x.shape());
  Tensor u(x.shape());
  for (int s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.normal();
    Tensor plus = x;
    Tensor minus = x;
    for (std::size_t i = 0; i < u.size(); ++i) {
      plus[i] += sigma * u[i];
      minus[i] -= sigma * u[i];
    }
    const double diff = loss_at(plus) - loss_at(minus);
    if (diff == 0.0) continue;
    for (std::size_t i = 0; i < u.size(); ++i) estimate[i] += diff * u[i];
  }
  const double scale = 1.0 / (2.0 * sigma * n_samples);
  for (std::size_t i = 0; i < estimate.size(); ++i) estimate[i] *= scale;
  return estimate;
}

Tensor random_sign_proposal(const AttackState& state, const AttackConfig& config, Rng& rng) {
  Tensor proposal = state.x;
  for (std::size_t i = 0; i < proposal.size(); ++i) {
    proposal[i] += (rng.next_u64() >> 63) ? config.alpha : -config.alpha;
  }
  return project(proposal, state.x0, config.eps);
}

AttackState random_sign_step(const LabelOracle& oracle, const AttackState& state, const AttackConfig& config,
                             Rng& rng) {
  AttackState next = state;
  Tensor proposal = random_sign_proposal(state, config, rng);
  if (oracle(proposal) != state.true_label) next.x = std::move(proposal);
  ++next.steps_taken;
  return next;
}

// ---------------------------------------------------------------------------

std::string to_string(AttackerKind kind) {
  switch (kind) {
    case AttackerKind::pgd_whitebox: return "pgd_whitebox";
    case AttackerKind::nes_softbox: return "nes_softbox";
    case AttackerKind::random_sign_hardbox: return "random_sign_hardbox";
  }
  return "unknown";
}

AttackerKind parse_attacker_kind(std::string_view name) {
  if (name == "pgd_whitebox") return AttackerKind::pgd_whitebox;
  if (name == "nes_softbox") return AttackerKind::nes_softbox;
  if (name == "random_sign_hardbox") return AttackerKind::random_sign_hardbox;
  throw ArgumentError("unknown attacker kind '" + std::string(name) + "'");
}

bool compatible(AttackerKind kind, ThreatModel threat) {
  switch (kind) {
    case AttackerKind::pgd_whitebox: return exposes_gradient(threat);
    case AttackerKind::nes_softbox: return exposes_probs(threat);
    case AttackerKind::random_sign_hardbox: return true;
  }
  return false;
}

void AttackerPolicyConfig::validate() const {
  attack.validate();
  if (kind == AttackerKind::nes_softbox) {
    if (!(nes_sigma > 0.0)) throw ArgumentError("nes sigma must be positive");
    if (nes_samples < 1) throw ArgumentError("nes n_samples must be >= 1");
  }
}

namespace {

class PgdAttacker final : public AttackerAgent {
 public:
  PgdAttacker(AttackConfig config, AttackState state) : config_(config), state_(std::move(state)) {}

  Tensor next_query(const std::optional<AttackerView>& last, ProbeChannel&) override {
    if (last) {
      if (!last->loss_gradient) throw ProtocolError("pgd_whitebox attacker received a response without a gradient");
      state_ = pgd_round_step(state_, *last->loss_gradient, config_);
    }
    return state_.x;
  }
  const AttackState& state() const override { return state_; }

 private:
  AttackConfig config_;
  AttackState state_;
};

class NesAttacker final : public AttackerAgent {
 public:
  NesAttacker(AttackerPolicyConfig config, AttackState state, Rng rng)
      : config_(config), state_(std::move(state)), rng_(std::move(rng)) {}

  Tensor next_query(const std::optional<AttackerView>& last, ProbeChannel& probes) override {
    if (last) {
      ProbOracle oracle = [&probes](const Tensor& q) {
        AttackerView v = probes.probe(q);
        if (!v.probs) throw ProtocolError("nes_softbox attacker received a response without probabilities");
        return *v.probs;
      };
      Tensor g = nes_gradient_estimate(oracle, state_.x, state_.true_label, config_.nes_sigma, config_.nes_samples,
                                       rng_);
      state_ = pgd_round_step(state_, g, config_.attack);
    }
    return state_.x;
  }
  const AttackState& state() const override { return state_; }

 private:
  AttackerPolicyConfig config_;
  AttackState state_;
  Rng rng_;
};

// The round's query is the proposal itself; a response that keeps the true
// label means the proposal is discarded and the committed state stays put.
class RandomSignAttacker final : public AttackerAgent {
 public:
  RandomSignAttacker(AttackConfig config, AttackState state, Rng rng)
      : config_(config), state_(std::move(state)), rng_(std::move(rng)) {}

  Tensor next_query(const std::optional<AttackerView>& last, ProbeChannel&) override {
    if (!last) return state_.x;
    if (pending_ && last->label != state_.true_label) state_.x = *pending_;
    pending_ = random_sign_proposal(state_, config_, rng_);
    ++state_.steps_taken;
    return *pending_;
  }
  const AttackState& state() const override { return state_; }

 private:
  AttackConfig config_;
  AttackState state_;
  Rng rng_;
  std::optional<Tensor> pending_;
};

}  // namespace

std::unique_ptr<AttackerAgent> make_attacker(const AttackerPolicyConfig& config, const Tensor& x0,
                                             std::size_t true_label, Rng rng) {
  config.validate();
  auto state = AttackState::start(x0, true_label);
  switch (config.kind) {
    case AttackerKind::pgd_whitebox: return std::make_unique<PgdAttacker>(config.attack, std::move(state));
    case AttackerKind::nes_softbox: return std::make_unique<NesAttacker>(config, std::move(state), std::move(rng));
    case AttackerKind::random_sign_hardbox:
      return std::make_unique<RandomSignAttacker>(config.attack, std::move(state), std::move(rng));
  }
  throw ArgumentError("unknown attacker kind");
}

}  // namespace ares
