#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ranslice/agents/common.hpp"

namespace ranslice {

/// Dense tabular action values.
class QTable {
 public:
  QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0)
      : num_actions_(num_actions), q_(num_states * num_actions, init) {}

  std::size_t num_states() const { return q_.size() / num_actions_; }
  std::size_t num_actions() const { return num_actions_; }

  std::span<const double> row(std::size_t s) const {
    return {q_.data() + s * num_actions_, num_actions_};
  }
  double& at(std::size_t s, std::size_t a) { return q_[s * num_actions_ + a]; }
  double at(std::size_t s, std::size_t a) const { return q_[s * num_actions_ + a]; }

  int best_action(std::size_t s) const { return argmax(row(s)); }

  double max_value(std::size_t s) const {
    const auto r = row(s);
    return r[argmax(r)];
  }

  // Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
  void update(std::size_t s, std::size_t a, double reward, std::size_t next,
              double alpha, double gamma) {
    const double target = reward + gamma * max_value(next);
    at(s, a) += alpha * (target - at(s, a));
  }

  const std::vector<double>& values() const { return q_; }
  std::vector<double>& values() { return q_; }

 private:
  std::size_t num_actions_;
  std::vector<double> q_;
};

/// Epsilon-greedy tabular Q-learning over binned load observations.
class QLearningAgent final : public Agent {
 public:
  QLearningAgent(const AgentConfig& config,
                 std::span<const AllocationAction> actions)
      : config_(config),
        disc_{kBinWidth, kBinLevels,
              actions.empty() ? 0 : static_cast<int>(actions.front().percent.size())},
        table_hash_(action_table_hash(actions)),
        q_(disc_.num_states(), actions.size(), config.q_init) {
    config_.validate();
  }

  AgentKind kind() const override { return AgentKind::kQLearn; }

  double epsilon(std::int64_t step) const override { return config_.epsilon(step); }

  int select_action(const Observation& obs, std::int64_t step,
                    RandomStream& rng) override {
    const bool explore = rng.bernoulli(config_.epsilon(step));
    if (explore) return static_cast<int>(rng.index(q_.num_actions()));
    return greedy_action(obs);
  }

  int greedy_action(const Observation& obs) const override {
    return q_.best_action(discretize(obs, disc_));
  }

  void observe(const Transition& t) override {
    q_.update(discretize(t.observation, disc_), static_cast<std::size_t>(t.action),
              t.reward, discretize(t.next_observation, disc_),
              config_.effective_learning_rate(), config_.gamma);
  }

  PolicySnapshot snapshot() const override {
    PolicySnapshot s;
    s.agent_kind = AgentKind::kQLearn;
    s.action_table_hash = table_hash_;
    s.discretization = disc_;
    s.parameters = q_.values();
    s.layout = {disc_.num_slices, static_cast<int>(q_.num_actions()), 0};
    return s;
  }

  const QTable& table() const { return q_; }
  QTable& table() { return q_; }

 private:
  AgentConfig config_;
  Discretization disc_;
  std::string table_hash_;
  QTable q_;
};

}  // namespace ranslice
