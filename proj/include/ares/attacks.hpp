#pragma once

// l-inf evasion attacks and the attacker agents that play them one round
// at a time.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "ares/network.hpp"
#include "ares/rng.hpp"
#include "ares/tensor.hpp"
#include "ares/threat_model.hpp"

namespace ares {

struct AttackConfig {
  double eps = 8.0 / 255.0;
  double alpha = 2.0 / 255.0;
  int max_steps = 10;
  bool random_start = false;

  // Throws ArgumentError for negative eps, non-positive alpha or steps.
  void validate() const;
  // alpha > 2 eps with eps > 0: legal (projection absorbs it) but usually a
  // configuration mistake, so callers may want to warn.
  bool alpha_exceeds_budget() const { return eps > 0.0 && alpha > 2.0 * eps; }
};

// Invariant: linf_distance(x, x0) <= eps + 1e-12 and x in [0,1]^d.
struct AttackState {
  Tensor x0;
  Tensor x;
  std::size_t true_label = 0;
  int steps_taken = 0;

  static AttackState start(const Tensor& x0, std::size_t true_label) { return {x0, x0, true_label, 0}; }
};

// x + alpha * sign(grad), with sign(0) = 0.
Tensor sign_step(const Tensor& x, const Tensor& grad, double alpha);

// Clamp to [x0 - eps, x0 + eps], then to [0, 1].
Tensor project(const Tensor& x, const Tensor& x0, double eps);

// One PGD iteration continuing from state.x.
AttackState pgd_round_step(const AttackState& state, const Tensor& grad, const AttackConfig& config);

// White-box access to one fixed model.
struct GradientOracle {
  std::function<Tensor(const Tensor&, std::size_t)> loss_gradient;
  std::function<std::size_t(const Tensor&)> predict;
};

GradientOracle model_oracle(const Model& model);

struct PgdResult {
  Tensor x_adv;
  bool success = false;
  int steps_used = 0;
};

// Up to max_steps PGD iterations. With stop_on_success the attack returns as
// soon as the current iterate is misclassified (steps_used is then the number
// of gradient steps that were needed, 0 if x0 is already misclassified).
// Without it all max_steps are taken and success is judged on the final
// iterate. random_start requires rng.
PgdResult pgd_full(const GradientOracle& oracle, const Tensor& x0, std::size_t true_label,
                   const AttackConfig& config, Rng* rng = nullptr, bool stop_on_success = true);

using ProbOracle = std::function<Tensor(const Tensor&)>;
using LabelOracle = std::function<std::size_t(const Tensor&)>;

// Antithetic Gaussian estimate of the cross-entropy gradient from
// probability queries: (1 / (2 sigma n)) sum_i [L(x + sigma u_i) - L(x - sigma u_i)] u_i.
// Issues exactly 2 n oracle queries.
Tensor nes_gradient_estimate(const ProbOracle& oracle, const Tensor& x, std::size_t true_label, double sigma,
                             int n_samples, Rng& rng);

// Proposes project(x + alpha * s) with s uniform in {-1, +1}^d. Exactly d
// rng draws.
Tensor random_sign_proposal(const AttackState& state, const AttackConfig& config, Rng& rng);

// Label-only step: keep the proposal only if it flips the label.
AttackState random_sign_step(const LabelOracle& oracle, const AttackState& state, const AttackConfig& config,
                             Rng& rng);

// ---------------------------------------------------------------------------
// Attacker agents

enum class AttackerKind { pgd_whitebox, nes_softbox, random_sign_hardbox };

std::string to_string(AttackerKind kind);
AttackerKind parse_attacker_kind(std::string_view name);
bool compatible(AttackerKind kind, ThreatModel threat);

struct AttackerPolicyConfig {
  AttackerKind kind = AttackerKind::pgd_whitebox;
  AttackConfig attack;
  double nes_sigma = 1e-3;
  int nes_samples = 20;

  void validate() const;
};

// The only information an attacker ever sees about a response. It has no
// field identifying which pool model answered.
struct AttackerView {
  std::size_t label = 0;
  std::optional<Tensor> probs;
  std::optional<Tensor> loss_gradient;
};

// Extra queries an attacker may make inside a round (gradient estimation).
class ProbeChannel {
 public:
  virtual ~ProbeChannel() = default;
  virtual AttackerView probe(const Tensor& x) = 0;
};

class AttackerAgent {
 public:
  virtual ~AttackerAgent() = default;

  // Query for the coming round. `last` is the response to the previous
  // round's query and is empty in round 1.
  virtual Tensor next_query(const std::optional<AttackerView>& last, ProbeChannel& probes) = 0;

  virtual const AttackState& state() const = 0;
};

// One agent per episode; it owns its rng.
std::unique_ptr<AttackerAgent> make_attacker(const AttackerPolicyConfig& config, const Tensor& x0,
                                             std::size_t true_label, Rng rng);

}  // namespace ares
