#pragma once

// Experiment configuration: JSON schema, scenario presets and defaults.
// The full schema is documented in docs/config.md.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranslice/agents.hpp"
#include "ranslice/env.hpp"
#include "ranslice/errors.hpp"
#include "ranslice/transfer.hpp"

namespace ranslice {

enum class Scenario { kExpert, kLearner, kCustom };

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "expert") return Scenario::kExpert;
  if (s == "learner") return Scenario::kLearner;
  if (s == "custom") return Scenario::kCustom;
  throw ConfigError("unknown scenario: " + s);
}

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::kExpert:
      return "expert";
    case Scenario::kLearner:
      return "learner";
    case Scenario::kCustom:
      return "custom";
  }
  return "?";
}

inline RewardKind reward_kind_from_string(const std::string& s) {
  if (s == "fn1") return RewardKind::kFn1;
  if (s == "fn2") return RewardKind::kFn2;
  if (s == "fn3") return RewardKind::kFn3;
  throw ConfigError("unknown reward kind: " + s);
}

inline std::string to_string(RewardKind k) {
  switch (k) {
    case RewardKind::kFn1:
      return "fn1";
    case RewardKind::kFn2:
      return "fn2";
    case RewardKind::kFn3:
      return "fn3";
  }
  return "?";
}

inline constexpr std::int64_t kExpertSteps = 50000;
inline constexpr std::int64_t kLearnerSteps = 20000;

struct RunConfig {
  Scenario scenario = Scenario::kExpert;
  EnvConfig env;
  AgentConfig agent;
  std::optional<Baseline> baseline;
  TransferConfig transfer;
  std::string expert_snapshot;
  std::int64_t total_steps = kExpertSteps;
  std::vector<std::uint64_t> seeds{1};
  std::size_t smoothing_window = 500;
  std::string output_dir = "runs";
  bool save_policy = true;
  bool log_wallclock = false;

  void validate() const {
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (smoothing_window < 1) throw ConfigError("smoothing_window must be >= 1");
    if (env.slices.empty()) throw ConfigError("no slices configured");
    if (baseline && transfer.scheme != TransferScheme::kNone)
      throw ConfigError("baselines cannot use a transfer scheme");
    if (transfer.scheme != TransferScheme::kNone && expert_snapshot.empty())
      throw ConfigError("transfer scheme needs transfer.expert_snapshot");
    agent.validate();
    transfer.validate();
  }
};

/// Expert cell: Video, VoLTE, URLLC with weights 0.2 / 0.1 / 0.7.
inline EnvConfig expert_env() {
  EnvConfig e;
  e.slices = {video_profile(), volte_profile(), urllc_profile()};
  e.reward_weights = {0.2, 0.1, 0.7};
  e.priority_slice = 2;
  return e;
}

/// Learner cell: two VoLTE slices and one URLLC slice, weights 0.15 / 0.15
/// / 0.7. URLLC keeps the expert cell's slot so the expert's allocations
/// stay meaningful when transferred.
inline EnvConfig learner_env() {
  EnvConfig e;
  e.slices = {volte_profile(), volte_profile(), urllc_profile()};
  e.reward_weights = {0.15, 0.15, 0.7};
  e.priority_slice = 2;
  return e;
}

inline int find_slice(const EnvConfig& e, const std::string& name) {
  for (std::size_t i = 0; i < e.slices.size(); ++i)
    if (e.slices[i].name == name) return static_cast<int>(i);
  return -1;
}

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline DistSpec dist_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return DistSpec::constant(j.at("value").get<double>());
  if (kind == "uniform")
    return DistSpec::uniform(j.at("min").get<double>(), j.at("max").get<double>());
  if (kind == "exponential") return DistSpec::exponential(j.at("mean").get<double>());
  if (kind == "truncated-pareto")
    return DistSpec::truncated_pareto(j.at("mean").get<double>(), j.at("max").get<double>(),
                                      j.value("shape", kDefaultParetoShape));
  if (kind == "truncated-lognormal")
    return DistSpec::truncated_lognormal(j.at("mean").get<double>(),
                                         j.at("std_dev").get<double>(),
                                         j.at("max").get<double>());
  throw ConfigError("unknown distribution kind: " + kind);
}

inline ServiceProfile profile_from_json(const nlohmann::json& j) {
  ServiceProfile p;
  p.name = j.at("name").get<std::string>();
  p.interarrival = dist_from_json(j.at("interarrival"));
  p.packet_size = dist_from_json(j.at("packet_size"));
  read_opt(j, "num_users", p.num_users);
  read_opt(j, "sla_c1", p.sla_c1);
  read_opt(j, "sla_c2", p.sla_c2);
  read_opt(j, "deadline", p.deadline);
  read_opt(j, "churn_threshold", p.churn_threshold);
  return p;
}

}  // namespace detail

/// Builds a RunConfig from JSON. Scenario presets supply slices, weights
/// and step budgets; any field present in the JSON overrides them.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  RunConfig c;
  try {
    c.scenario = scenario_from_string(j.value("scenario", std::string("expert")));
    switch (c.scenario) {
      case Scenario::kExpert:
        c.env = expert_env();
        c.total_steps = kExpertSteps;
        c.agent.epsilon.epsilon0 = kExpertEpsilon;
        break;
      case Scenario::kLearner:
        c.env = learner_env();
        c.total_steps = kLearnerSteps;
        c.agent.epsilon.epsilon0 = kLearnerEpsilon;
        break;
      case Scenario::kCustom:
        if (!j.contains("slices")) throw ConfigError("custom scenario needs slices");
        break;
    }
    if (j.contains("slices")) {
      c.env.slices.clear();
      for (const auto& s : j.at("slices")) c.env.slices.push_back(detail::profile_from_json(s));
      c.env.priority_slice = find_slice(c.env, "URLLC");
      if (c.scenario == Scenario::kCustom) c.env.reward_weights.clear();
    }
    if (j.contains("users")) {
      const auto users = j.at("users").get<std::vector<int>>();
      if (users.size() != c.env.slices.size())
        throw ConfigError("users override must list every slice");
      for (std::size_t i = 0; i < users.size(); ++i) c.env.slices[i].num_users = users[i];
    }
    read_opt(j, "capacity_per_slot", c.env.capacity_per_slot);
    read_opt(j, "target_utilization", c.env.target_utilization);
    read_opt(j, "window_len", c.env.window_len);
    read_opt(j, "calibration_seed", c.env.calibration_seed);
    read_opt(j, "calibration_windows", c.env.calibration_windows);

    if (j.contains("reward")) {
      const auto& r = j.at("reward");
      if (r.contains("kind"))
        c.env.reward_kind = reward_kind_from_string(r.at("kind").get<std::string>());
      read_opt(r, "weights", c.env.reward_weights);
      read_opt(r, "shaping_bonus", c.env.shaping_bonus);
      if (r.contains("priority_slice"))
        c.env.priority_slice = find_slice(c.env, r.at("priority_slice").get<std::string>());
    }

    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      if (a.contains("kind")) c.agent.kind = agent_kind_from_string(a.at("kind").get<std::string>());
      read_opt(a, "learning_rate", c.agent.learning_rate);
      read_opt(a, "gamma", c.agent.gamma);
      read_opt(a, "clip", c.agent.clip);
      read_opt(a, "hidden", c.agent.hidden);
      read_opt(a, "epochs", c.agent.epochs);
      read_opt(a, "batch_size", c.agent.batch_size);
      read_opt(a, "segment_length", c.agent.segment_length);
      read_opt(a, "q_init", c.agent.q_init);
      read_opt(a, "epsilon0", c.agent.epsilon.epsilon0);
      read_opt(a, "epsilon_decay", c.agent.epsilon.decay);
      read_opt(a, "epsilon_floor", c.agent.epsilon.floor);
    }

    if (j.contains("baseline") && !j.at("baseline").is_null()) {
      const auto b = j.at("baseline").get<std::string>();
      if (b == "hard")
        c.baseline = Baseline::kHard;
      else if (b == "fixed")
        c.baseline = Baseline::kFixed;
      else
        throw ConfigError("unknown baseline: " + b);
    }

    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      if (t.contains("scheme"))
        c.transfer.scheme = transfer_scheme_from_string(t.at("scheme").get<std::string>());
      read_opt(t, "expert_snapshot", c.expert_snapshot);
      read_opt(t, "theta", c.transfer.theta);
      read_opt(t, "reuse_horizon", c.transfer.reuse_horizon);
      read_opt(t, "distill_horizon", c.transfer.distill_horizon);
      read_opt(t, "hybrid_horizon", c.transfer.hybrid_horizon);
      read_opt(t, "distill_lr", c.transfer.distill_lr);
    }

    read_opt(j, "total_steps", c.total_steps);
    read_opt(j, "seeds", c.seeds);
    read_opt(j, "smoothing_window", c.smoothing_window);
    read_opt(j, "output_dir", c.output_dir);
    read_opt(j, "save_policy", c.save_policy);
    read_opt(j, "log_wallclock", c.log_wallclock);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace ranslice
