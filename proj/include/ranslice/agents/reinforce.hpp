#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "ranslice/agents/common.hpp"

namespace ranslice {

/// Softmax over logits linear in (observation, 1).
struct LinearSoftmaxPolicy {
  int obs_dim = 3;
  int num_actions = 15;
  // Row-major [num_actions][obs_dim + 1]; the last column is the bias.
  std::vector<double> theta;

  LinearSoftmaxPolicy() = default;
  LinearSoftmaxPolicy(int obs, int actions)
      : obs_dim(obs), num_actions(actions), theta(actions * (obs + 1), 0.0) {}

  std::size_t num_params() const { return theta.size(); }

  std::vector<double> logits(std::span<const double> x) const {
    std::vector<double> z(num_actions, 0.0);
    const int cols = obs_dim + 1;
    for (int a = 0; a < num_actions; ++a) {
      const double* w = theta.data() + a * cols;
      double acc = w[obs_dim];
      for (int j = 0; j < obs_dim; ++j) acc += w[j] * x[j];
      z[a] = acc;
    }
    return z;
  }

  std::vector<double> probabilities(std::span<const double> x) const {
    const auto z = logits(x);
    return softmax(z);
  }

  // grad += (d logits / d theta)^T g
  void backprop_logits(std::span<const double> x, std::span<const double> g,
                       std::span<double> grad) const {
    const int cols = obs_dim + 1;
    for (int a = 0; a < num_actions; ++a) {
      double* row = grad.data() + a * cols;
      for (int j = 0; j < obs_dim; ++j) row[j] += g[a] * x[j];
      row[obs_dim] += g[a];
    }
  }
};

/// sum_t (G_t - b) * log pi(a_t | s_t)
inline double reinforce_objective(const LinearSoftmaxPolicy& policy,
                                  const Trajectory& traj,
                                  std::span<const double> returns,
                                  double baseline) {
  double j = 0.0;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto p = policy.probabilities(traj[t].observation.load_ratios);
    j += (returns[t] - baseline) * std::log(p[traj[t].action]);
  }
  return j;
}

inline std::vector<double> reinforce_gradient(const LinearSoftmaxPolicy& policy,
                                              const Trajectory& traj,
                                              std::span<const double> returns,
                                              double baseline) {
  std::vector<double> grad(policy.num_params(), 0.0);
  std::vector<double> g(policy.num_actions);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& x = traj[t].observation.load_ratios;
    const auto p = policy.probabilities(x);
    const double adv = returns[t] - baseline;
    for (int a = 0; a < policy.num_actions; ++a)
      g[a] = adv * ((a == traj[t].action ? 1.0 : 0.0) - p[a]);
    policy.backprop_logits(x, g, grad);
  }
  return grad;
}

/// Monte Carlo policy gradient with a running mean-return baseline. One
/// update per segment of `segment_length` decisions.
class ReinforceAgent final : public PolicyGradientAgent {
 public:
  ReinforceAgent(const AgentConfig& config,
                 std::span<const AllocationAction> actions)
      : config_(config),
        table_hash_(action_table_hash(actions)),
        policy_(actions.empty() ? 0 : static_cast<int>(actions.front().percent.size()),
                static_cast<int>(actions.size())) {
    config_.validate();
  }

  AgentKind kind() const override { return AgentKind::kReinforce; }

  int select_action(const Observation& obs, std::int64_t /*step*/,
                    RandomStream& rng) override {
    const auto p = policy_.probabilities(obs.load_ratios);
    return sample_categorical(p, rng);
  }

  int greedy_action(const Observation& obs) const override {
    const auto z = policy_.logits(obs.load_ratios);
    return argmax(z);
  }

  std::vector<double> action_probabilities(const Observation& obs) const override {
    return policy_.probabilities(obs.load_ratios);
  }

  void apply_logit_gradient(const Observation& obs, std::span<const double> grad_logits,
                            double lr) override {
    std::vector<double> grad(policy_.num_params(), 0.0);
    policy_.backprop_logits(obs.load_ratios, grad_logits, grad);
    for (std::size_t i = 0; i < grad.size(); ++i) policy_.theta[i] -= lr * grad[i];
  }

  void observe(const Transition& t) override {
    segment_.push_back(t);
    if (static_cast<int>(segment_.size()) >= config_.segment_length) {
      update(segment_);
      segment_.clear();
    }
  }

  /// Gradient ascent on the baselined log-likelihood objective.
  void update(const Trajectory& traj) {
    if (traj.empty()) throw UsageError("REINFORCE update on an empty trajectory");
    std::vector<double> rewards;
    for (const auto& t : traj) rewards.push_back(t.reward);
    const auto returns = discounted_returns(rewards, config_.gamma);
    const auto grad = reinforce_gradient(policy_, traj, returns, baseline_);
    const double step = config_.effective_learning_rate() / traj.size();
    for (std::size_t i = 0; i < grad.size(); ++i) policy_.theta[i] += step * grad[i];
    for (double g : returns) {
      ++return_count_;
      baseline_ += (g - baseline_) / static_cast<double>(return_count_);
    }
  }

  PolicySnapshot snapshot() const override {
    PolicySnapshot s;
    s.agent_kind = AgentKind::kReinforce;
    s.action_table_hash = table_hash_;
    s.parameters = policy_.theta;
    s.layout = {policy_.obs_dim, policy_.num_actions, 0};
    return s;
  }

  const LinearSoftmaxPolicy& policy() const { return policy_; }
  LinearSoftmaxPolicy& policy() { return policy_; }
  double baseline() const { return baseline_; }

 private:
  AgentConfig config_;
  std::string table_hash_;
  LinearSoftmaxPolicy policy_;
  Trajectory segment_;
  double baseline_ = 0.0;
  std::int64_t return_count_ = 0;
};

}  // namespace ranslice
