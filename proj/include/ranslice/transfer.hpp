#pragma once

// Exploration controllers that let an expert policy guide a learner agent
// for an initial phase: policy reuse, policy distillation, and a hybrid of
// the two.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ranslice/agents.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

enum class TransferScheme { kNone, kReuse, kDistill, kHybrid };

inline std::string to_string(TransferScheme s) {
  switch (s) {
    case TransferScheme::kNone:
      return "none";
    case TransferScheme::kReuse:
      return "reuse";
    case TransferScheme::kDistill:
      return "distill";
    case TransferScheme::kHybrid:
      return "hybrid";
  }
  return "?";
}

inline TransferScheme transfer_scheme_from_string(const std::string& s) {
  if (s == "none") return TransferScheme::kNone;
  if (s == "reuse") return TransferScheme::kReuse;
  if (s == "distill") return TransferScheme::kDistill;
  if (s == "hybrid") return TransferScheme::kHybrid;
  throw ConfigError("unknown transfer scheme: " + s);
}

struct TransferConfig {
  TransferScheme scheme = TransferScheme::kNone;
  std::int64_t reuse_horizon = 500;
  std::int64_t distill_horizon = 1000;
  std::int64_t hybrid_horizon = 700;
  // Probability of executing the expert action during reuse/distillation.
  double theta = 1.0;
  double distill_lr = 0.5;

  std::int64_t horizon() const {
    switch (scheme) {
      case TransferScheme::kNone:
        return 0;
      case TransferScheme::kReuse:
        return reuse_horizon;
      case TransferScheme::kDistill:
        return distill_horizon;
      case TransferScheme::kHybrid:
        return hybrid_horizon;
    }
    return 0;
  }

  void validate() const {
    if (reuse_horizon < 0 || distill_horizon < 0 || hybrid_horizon < 0)
      throw ConfigError("transfer horizons must be >= 0");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must be in [0, 1]");
    if (!(distill_lr > 0.0)) throw ConfigError("distill_lr must be > 0");
  }
};

enum class TransferPhase { kGuided, kAutonomous };

struct TransferState {
  std::int64_t step = 0;
  TransferPhase phase = TransferPhase::kGuided;
  std::vector<double> distill_loss_trace;
  std::int64_t expert_actions = 0;
};

/// Sum over actions of pi(a) * fractions(a): the allocation the softmax
/// policy recommends on average.
inline std::vector<double> expected_allocation(std::span<const double> probs,
                                               std::span<const AllocationAction> actions) {
  std::vector<double> f(actions.front().percent.size(), 0.0);
  for (std::size_t a = 0; a < actions.size(); ++a)
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += probs[a] * actions[a].percent[i] / 100.0;
  return f;
}

/// Squared Euclidean distance between the learner's expected allocation and
/// the expert's allocation.
inline double distillation_loss(std::span<const double> probs,
                                std::span<const AllocationAction> actions,
                                std::span<const double> expert_fractions) {
  const auto f = expected_allocation(probs, actions);
  double d = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double e = f[i] - expert_fractions[i];
    d += e * e;
  }
  return d;
}

/// d loss / d logits through the softmax.
inline std::vector<double> distillation_logit_gradient(
    std::span<const double> probs, std::span<const AllocationAction> actions,
    std::span<const double> expert_fractions) {
  const auto f = expected_allocation(probs, actions);
  std::vector<double> g(actions.size(), 0.0);
  double mean = 0.0;
  for (std::size_t a = 0; a < actions.size(); ++a) {
    for (std::size_t i = 0; i < f.size(); ++i)
      g[a] += 2.0 * (f[i] - expert_fractions[i]) * actions[a].percent[i] / 100.0;
    mean += probs[a] * g[a];
  }
  for (std::size_t a = 0; a < actions.size(); ++a) g[a] = probs[a] * (g[a] - mean);
  return g;
}

/// Chooses the executed action each step. The learner keeps learning from
/// every environment transition in all phases; that is the caller's loop.
/// The expert is only read.
class TransferController {
 public:
  TransferController(TransferConfig config,
                     std::shared_ptr<const SnapshotPolicy> expert, Agent& learner,
                     std::span<const AllocationAction> actions, std::uint64_t seed)
      : config_(config),
        expert_(std::move(expert)),
        learner_(learner),
        pg_learner_(dynamic_cast<PolicyGradientAgent*>(&learner)),
        actions_(actions.begin(), actions.end()),
        rng_(derive_seed(seed, {0x7f4a})) {
    config_.validate();
    if (config_.scheme != TransferScheme::kNone && !expert_)
      throw ConfigError("transfer scheme " + to_string(config_.scheme) +
                        " needs an expert snapshot");
    if (expert_) check_compatible(expert_->snapshot(), actions_);
    if ((config_.scheme == TransferScheme::kDistill ||
         config_.scheme == TransferScheme::kHybrid) &&
        !pg_learner_)
      throw UnsupportedSchemeError(to_string(config_.scheme) +
                                   " needs a policy-gradient learner, got " +
                                   to_string(learner.kind()));
  }

  const TransferConfig& config() const { return config_; }
  const TransferState& state() const { return state_; }
  std::int64_t horizon() const { return config_.horizon(); }
  bool guided(std::int64_t step) const { return step < horizon(); }

  /// Linear 1 -> 0 over the hybrid horizon.
  double beta(std::int64_t step) const {
    if (config_.hybrid_horizon <= 0 || step >= config_.hybrid_horizon) return 0.0;
    return 1.0 - static_cast<double>(step) / static_cast<double>(config_.hybrid_horizon);
  }

  int select(const Observation& obs, std::int64_t step, RandomStream& learner_rng) {
    state_.step = step;
    state_.phase = guided(step) ? TransferPhase::kGuided : TransferPhase::kAutonomous;
    switch (config_.scheme) {
      case TransferScheme::kNone:
        return learner_.select_action(obs, step, learner_rng);
      case TransferScheme::kReuse:
        return reuse_select(obs, step, learner_rng);
      case TransferScheme::kDistill:
        return distill_step(obs, step, learner_rng);
      case TransferScheme::kHybrid:
        return hybrid_select(obs, step, learner_rng);
    }
    return 0;
  }

  int reuse_select(const Observation& obs, std::int64_t step, RandomStream& learner_rng) {
    if (step < config_.reuse_horizon && rng_.bernoulli(config_.theta))
      return follow(expert_action(obs));
    return learner_.select_action(obs, step, learner_rng);
  }

  int distill_step(const Observation& obs, std::int64_t step, RandomStream& learner_rng) {
    if (step >= config_.distill_horizon) return learner_.select_action(obs, step, learner_rng);
    const auto expert = expert_action(obs);
    distill(obs, expert.fractions);
    if (rng_.bernoulli(config_.theta)) return follow(expert);
    return learner_.select_action(obs, step, learner_rng);
  }

  int hybrid_select(const Observation& obs, std::int64_t step, RandomStream& learner_rng) {
    if (step >= config_.hybrid_horizon) return learner_.select_action(obs, step, learner_rng);
    const auto expert = expert_action(obs);
    distill(obs, expert.fractions);
    if (rng_.bernoulli(beta(step))) return follow(expert);
    return learner_.select_action(obs, step, learner_rng);
  }

 private:
  GreedyChoice expert_action(const Observation& obs) const { return expert_->greedy(obs); }

  int follow(const GreedyChoice& c) {
    ++state_.expert_actions;
    return c.action_index;
  }

  // One gradient step of the learner's logits toward the expert's
  // allocation; records the pre-step loss.
  void distill(const Observation& obs, std::span<const double> expert_fractions) {
    const auto p = pg_learner_->action_probabilities(obs);
    state_.distill_loss_trace.push_back(distillation_loss(p, actions_, expert_fractions));
    const auto g = distillation_logit_gradient(p, actions_, expert_fractions);
    pg_learner_->apply_logit_gradient(obs, g, config_.distill_lr);
  }

  TransferConfig config_;
  std::shared_ptr<const SnapshotPolicy> expert_;
  Agent& learner_;
  PolicyGradientAgent* pg_learner_;
  std::vector<AllocationAction> actions_;
  RandomStream rng_;
  TransferState state_;
};

}  // namespace ranslice
