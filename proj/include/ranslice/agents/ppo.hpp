#pragma once

// Clipped-surrogate policy optimization with a one-hidden-layer tanh policy
// network and a linear value head. Gradients are hand-derived
// backpropagation through this fixed architecture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ranslice/agents/common.hpp"

namespace ranslice {

struct PpoForward {
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> probs;
  double value = 0.0;
};

struct PpoNetwork {
  int obs_dim = 3;
  int hidden = 16;
  int num_actions = 15;
  // Flat layout: W1[hidden][obs], b1[hidden], W2[actions][hidden],
  // b2[actions], v[obs], v0.
  std::vector<double> params;

  PpoNetwork() = default;
  PpoNetwork(int obs, int hid, int actions)
      : obs_dim(obs), hidden(hid), num_actions(actions), params(size_for(obs, hid, actions), 0.0) {}

  static std::size_t size_for(int obs, int hid, int actions) {
    return static_cast<std::size_t>(hid * obs + hid + actions * hid + actions + obs + 1);
  }

  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + hidden * obs_dim; }
  std::size_t w2() const { return b1() + hidden; }
  std::size_t b2() const { return w2() + num_actions * hidden; }
  std::size_t v() const { return b2() + num_actions; }
  std::size_t v0() const { return v() + obs_dim; }

  void initialize(RandomStream& rng) {
    std::fill(params.begin(), params.end(), 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(obs_dim));
    for (int i = 0; i < hidden * obs_dim; ++i) params[w1() + i] = s1 * rng.normal();
    for (int i = 0; i < num_actions * hidden; ++i) params[w2() + i] = 0.01 * rng.normal();
  }

  PpoForward forward(std::span<const double> x) const {
    PpoForward f;
    f.hidden.resize(hidden);
    for (int k = 0; k < hidden; ++k) {
      double z = params[b1() + k];
      for (int j = 0; j < obs_dim; ++j) z += params[w1() + k * obs_dim + j] * x[j];
      f.hidden[k] = std::tanh(z);
    }
    f.logits.resize(num_actions);
    for (int a = 0; a < num_actions; ++a) {
      double z = params[b2() + a];
      for (int k = 0; k < hidden; ++k) z += params[w2() + a * hidden + k] * f.hidden[k];
      f.logits[a] = z;
    }
    f.probs = softmax(f.logits);
    f.value = params[v0()];
    for (int j = 0; j < obs_dim; ++j) f.value += params[v() + j] * x[j];
    return f;
  }

  // grad += (d logits / d params)^T g, policy parameters only.
  void backprop_logits(std::span<const double> x, const PpoForward& f,
                       std::span<const double> g, std::span<double> grad) const {
    std::vector<double> dh(hidden, 0.0);
    for (int a = 0; a < num_actions; ++a) {
      if (g[a] == 0.0) continue;
      grad[b2() + a] += g[a];
      for (int k = 0; k < hidden; ++k) {
        grad[w2() + a * hidden + k] += g[a] * f.hidden[k];
        dh[k] += g[a] * params[w2() + a * hidden + k];
      }
    }
    for (int k = 0; k < hidden; ++k) {
      const double dz = dh[k] * (1.0 - f.hidden[k] * f.hidden[k]);
      grad[b1() + k] += dz;
      for (int j = 0; j < obs_dim; ++j) grad[w1() + k * obs_dim + j] += dz * x[j];
    }
  }
};

struct PpoSample {
  std::vector<double> observation;
  int action = 0;
  double old_prob = 1.0;
  double ret = 0.0;
  double advantage = 0.0;
};

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)
inline double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

/// Mean over samples of -clipped_surrogate + (V(s) - G)^2.
inline double ppo_loss(const PpoNetwork& net, std::span<const PpoSample> batch,
                       double clip) {
  double loss = 0.0;
  for (const auto& s : batch) {
    const auto f = net.forward(s.observation);
    const double ratio = f.probs[s.action] / s.old_prob;
    const double dv = f.value - s.ret;
    loss += -clipped_surrogate(ratio, s.advantage, clip) + dv * dv;
  }
  return loss / static_cast<double>(batch.size());
}

inline std::vector<double> ppo_gradient(const PpoNetwork& net,
                                        std::span<const PpoSample> batch,
                                        double clip) {
  std::vector<double> grad(net.params.size(), 0.0);
  std::vector<double> g(net.num_actions);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    const auto f = net.forward(s.observation);
    const double ratio = f.probs[s.action] / s.old_prob;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    // The unclipped branch carries the gradient only when it is the minimum.
    if (ratio * s.advantage <= clipped * s.advantage) {
      for (int a = 0; a < net.num_actions; ++a)
        g[a] = -s.advantage * ratio * ((a == s.action ? 1.0 : 0.0) - f.probs[a]) * inv_n;
      net.backprop_logits(s.observation, f, g, grad);
    }
    const double dv = 2.0 * (f.value - s.ret) * inv_n;
    for (int j = 0; j < net.obs_dim; ++j) grad[net.v() + j] += dv * s.observation[j];
    grad[net.v0()] += dv;
  }
  return grad;
}

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grad) {
    if (m_.size() != params.size()) {
      m_.assign(params.size(), 0.0);
      v_.assign(params.size(), 0.0);
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

class PpoAgent final : public PolicyGradientAgent {
 public:
  PpoAgent(const AgentConfig& config, std::span<const AllocationAction> actions,
           std::uint64_t init_seed)
      : config_(config),
        table_hash_(action_table_hash(actions)),
        net_(actions.empty() ? 0 : static_cast<int>(actions.front().percent.size()),
             config.hidden, static_cast<int>(actions.size())),
        optimizer_(config.effective_learning_rate()) {
    config_.validate();
    RandomStream rng(derive_seed(init_seed, {0x5050}));
    net_.initialize(rng);
  }

  AgentKind kind() const override { return AgentKind::kPpo; }

  int select_action(const Observation& obs, std::int64_t /*step*/,
                    RandomStream& rng) override {
    const auto f = net_.forward(obs.load_ratios);
    return sample_categorical(f.probs, rng);
  }

  int greedy_action(const Observation& obs) const override {
    return argmax(net_.forward(obs.load_ratios).logits);
  }

  std::vector<double> action_probabilities(const Observation& obs) const override {
    return net_.forward(obs.load_ratios).probs;
  }

  void apply_logit_gradient(const Observation& obs, std::span<const double> grad_logits,
                            double lr) override {
    const auto f = net_.forward(obs.load_ratios);
    std::vector<double> grad(net_.params.size(), 0.0);
    net_.backprop_logits(obs.load_ratios, f, grad_logits, grad);
    for (std::size_t i = 0; i < grad.size(); ++i) net_.params[i] -= lr * grad[i];
  }

  void observe(const Transition& t) override {
    segment_.push_back(t);
    if (static_cast<int>(segment_.size()) < config_.segment_length) return;
    batch_.push_back(std::move(segment_));
    segment_.clear();
    if (static_cast<int>(batch_.size()) >= config_.batch_size) {
      update(batch_);
      batch_.clear();
    }
  }

  /// Builds samples against the current (pre-update) policy and value
  /// head, then runs `epochs` full-batch optimizer steps. Returns are
  /// bootstrapped from the value of each segment's final next-observation.
  void update(std::span<const Trajectory> batch) {
    if (batch.size() < 4 || batch.size() > 8)
      throw UsageError("PPO batch must hold 4 to 8 trajectories");
    const auto samples = make_samples(batch);
    for (int e = 0; e < config_.epochs; ++e) {
      const auto grad = ppo_gradient(net_, samples, config_.clip);
      optimizer_.step(net_.params, grad);
    }
  }

  std::vector<PpoSample> make_samples(std::span<const Trajectory> batch) const {
    std::vector<PpoSample> out;
    std::vector<double> rewards;
    for (const auto& traj : batch) {
      if (traj.empty()) throw UsageError("empty trajectory in PPO batch");
      rewards.clear();
      for (const auto& t : traj) rewards.push_back(t.reward);
      const double boot = net_.forward(traj.back().next_observation.load_ratios).value;
      const auto returns = discounted_returns(rewards, config_.gamma, boot);
      for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto f = net_.forward(traj[i].observation.load_ratios);
        out.push_back({traj[i].observation.load_ratios, traj[i].action,
                       f.probs[traj[i].action], returns[i], returns[i] - f.value});
      }
    }
    return out;
  }

  PolicySnapshot snapshot() const override {
    PolicySnapshot s;
    s.agent_kind = AgentKind::kPpo;
    s.action_table_hash = table_hash_;
    s.parameters = net_.params;
    s.layout = {net_.obs_dim, net_.num_actions, net_.hidden};
    return s;
  }

  const PpoNetwork& network() const { return net_; }
  PpoNetwork& network() { return net_; }
  const AgentConfig& config() const { return config_; }

 private:
  AgentConfig config_;
  std::string table_hash_;
  PpoNetwork net_;
  Adam optimizer_;
  Trajectory segment_;
  std::vector<Trajectory> batch_;
};

}  // namespace ranslice
