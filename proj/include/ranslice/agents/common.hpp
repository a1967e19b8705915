#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranslice/env.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/rng.hpp"

namespace ranslice {

enum class AgentKind { kQLearn, kReinforce, kPpo };

inline std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::kQLearn:
      return "qlearn";
    case AgentKind::kReinforce:
      return "reinforce";
    case AgentKind::kPpo:
      return "ppo";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "qlearn") return AgentKind::kQLearn;
  if (s == "reinforce") return AgentKind::kReinforce;
  if (s == "ppo") return AgentKind::kPpo;
  throw ConfigError("unknown agent kind: " + s);
}

/// eps(t) = max(floor, eps0 * decay^t), t counted in decision steps.
struct EpsilonSchedule {
  double epsilon0 = 0.9;
  double decay = 0.99;
  double floor = 0.01;

  double operator()(std::int64_t step) const {
    return std::max(floor, epsilon0 * std::pow(decay, static_cast<double>(step)));
  }
};

inline constexpr double kExpertEpsilon = 0.9;
inline constexpr double kLearnerEpsilon = 0.2;

struct AgentConfig {
  AgentKind kind = AgentKind::kPpo;
  // Zero selects the per-kind default below.
  double learning_rate = 0.0;
  double gamma = 0.9;
  double clip = 0.2;
  int hidden = 16;
  int epochs = 4;
  // Trajectories per PPO update.
  int batch_size = 4;
  // Decision steps per trajectory (return horizon of the continuing task).
  int segment_length = 20;
  // Initial Q value for every state-action pair (qlearn).
  double q_init = 0.0;
  EpsilonSchedule epsilon;

  double effective_learning_rate() const {
    if (learning_rate > 0.0) return learning_rate;
    switch (kind) {
      case AgentKind::kQLearn:
        return 0.1;
      case AgentKind::kReinforce:
        return 0.5;
      case AgentKind::kPpo:
        return 0.01;
    }
    return 0.1;
  }

  void validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
    if (!(effective_learning_rate() > 0.0)) throw ConfigError("learning rate must be > 0");
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("clip must be in (0, 1)");
    if (hidden < 1 || epochs < 1 || segment_length < 1)
      throw ConfigError("hidden, epochs and segment_length must be >= 1");
    if (batch_size < 4 || batch_size > 8) throw ConfigError("batch size must be in [4, 8]");
  }
};

struct Transition {
  Observation observation;
  int action = 0;
  double reward = 0.0;
  Observation next_observation;
};

using Trajectory = std::vector<Transition>;

inline constexpr double kBinWidth = 0.1;
inline constexpr int kBinLevels = 11;

struct Discretization {
  double bin_width = kBinWidth;
  int levels = kBinLevels;
  int num_slices = 3;

  std::size_t num_states() const {
    std::size_t n = 1;
    for (int i = 0; i < num_slices; ++i) n *= static_cast<std::size_t>(levels);
    return n;
  }
};

inline std::vector<int> bin_tuple(const Observation& obs,
                                  const Discretization& d = {}) {
  std::vector<int> bins;
  for (double p : obs.load_ratios) {
    // The small slack keeps exact multiples such as 0.3 = 0.1 * 3 from
    // dropping a bin through rounding.
    int b = static_cast<int>(std::floor(p / d.bin_width + 1e-9));
    bins.push_back(std::clamp(b, 0, d.levels - 1));
  }
  return bins;
}

/// Mixed-radix id of the bin tuple; first component least significant.
inline std::size_t discretize(const Observation& obs,
                              const Discretization& d = {}) {
  if (static_cast<int>(obs.load_ratios.size()) != d.num_slices)
    throw UsageError("observation size does not match discretization");
  std::size_t id = 0;
  std::size_t radix = 1;
  for (int b : bin_tuple(obs, d)) {
    id += static_cast<std::size_t>(b) * radix;
    radix *= static_cast<std::size_t>(d.levels);
  }
  return id;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - m);
  for (auto& x : p) x /= z;
  return p;
}

// Lowest index wins ties.
inline int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline int sample_categorical(std::span<const double> probs, RandomStream& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the running sum; fall back to the last
  // positive-probability action.
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return static_cast<int>(i);
  return 0;
}

/// Reward-to-go within a segment, optionally bootstrapped after the last
/// step.
inline std::vector<double> discounted_returns(std::span<const double> rewards,
                                              double gamma,
                                              double bootstrap = 0.0) {
  std::vector<double> g(rewards.size());
  double acc = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

inline constexpr int kSnapshotVersion = 1;

struct SnapshotLayout {
  int obs_dim = 3;
  int num_actions = 15;
  int hidden = 0;
};

/// Serializable policy used for expert-to-learner transfer.
struct PolicySnapshot {
  int version = kSnapshotVersion;
  AgentKind agent_kind = AgentKind::kQLearn;
  std::string action_table_hash;
  std::optional<Discretization> discretization;
  std::vector<double> parameters;
  SnapshotLayout layout;
};

class Agent {
 public:
  virtual ~Agent() = default;

  virtual AgentKind kind() const = 0;
  virtual int select_action(const Observation& obs, std::int64_t step,
                            RandomStream& rng) = 0;
  virtual int greedy_action(const Observation& obs) const = 0;
  /// Learning hook, called once per environment step.
  virtual void observe(const Transition& t) = 0;
  virtual PolicySnapshot snapshot() const = 0;
  /// Exploration rate in effect at `step`; zero for agents that explore by
  /// sampling.
  virtual double epsilon(std::int64_t /*step*/) const { return 0.0; }
};

/// Agents with a softmax policy that can take gradient steps on their
/// logits. Required by the distillation-based transfer schemes.
class PolicyGradientAgent : public Agent {
 public:
  virtual std::vector<double> action_probabilities(const Observation& obs) const = 0;
  /// One descent step: params -= lr * (d logits / d params)^T grad_logits.
  virtual void apply_logit_gradient(const Observation& obs,
                                    std::span<const double> grad_logits,
                                    double lr) = 0;
};

}  // namespace ranslice
