#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranslice/agents.hpp"
#include "ranslice/env.hpp"
#include "ranslice/harness/config.hpp"
#include "ranslice/harness/stats.hpp"
#include "ranslice/transfer.hpp"

namespace ranslice {

inline constexpr std::size_t kFirstStepsWindow = 200;

struct StepLogRow {
  std::int64_t step = 0;
  int action_index = -1;  // -1 for static baselines
  double reward = 0.0;
  std::vector<double> latency_ms;
  double epsilon = 0.0;
  int churn = 0;
  std::int64_t wallclock_us = 0;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::string label;
  std::vector<std::string> slices;
  std::int64_t total_steps = 0;
  double final_smoothed_reward = 0.0;
  std::int64_t convergence_step = -1;  // -1: not converged
  int drop_count = 0;
  double first_steps_mean = 0.0;
  double mean_reward = 0.0;
};

struct RunResult {
  std::vector<StepLogRow> rows;
  RunSummary summary;
  std::unique_ptr<Agent> agent;  // null for baselines
  std::vector<double> distill_loss_trace;

  std::vector<double> rewards() const {
    std::vector<double> r;
    r.reserve(rows.size());
    for (const auto& row : rows) r.push_back(row.reward);
    return r;
  }
};

inline RunSummary summarize(std::span<const double> rewards, std::size_t window) {
  RunSummary s;
  s.total_steps = static_cast<std::int64_t>(rewards.size());
  if (rewards.empty()) return s;
  const auto sm = smooth(rewards, window);
  s.final_smoothed_reward = sm.back();
  s.convergence_step = convergence_step(rewards, window);
  s.drop_count = drop_count(rewards, window);
  s.first_steps_mean = mean(rewards.first(std::min(kFirstStepsWindow, rewards.size())));
  s.mean_reward = mean(rewards);
  return s;
}

/// Trains (or, for baselines, just runs) one seed in memory. `env_config`
/// must already be resolved. `expert` is required when a transfer scheme is
/// configured.
inline RunResult train(const RunConfig& cfg, const EnvConfig& env_config,
                       std::uint64_t seed,
                       std::shared_ptr<const SnapshotPolicy> expert = nullptr) {
  SlicingEnv env(env_config);
  RunResult out;
  Observation obs = env.reset(seed);
  RandomStream rng(derive_seed(seed, {0xac7}));
  std::unique_ptr<TransferController> controller;
  std::vector<double> fixed_alloc;
  if (cfg.baseline) {
    fixed_alloc = baseline_policy(*cfg.baseline, env_config.slice_names());
  } else {
    out.agent = make_agent(cfg.agent, env.actions(), derive_seed(seed, {0xa9e}));
    if (cfg.transfer.scheme != TransferScheme::kNone && !expert)
      throw ConfigError("transfer scheme needs an expert snapshot");
    controller = std::make_unique<TransferController>(cfg.transfer, expert, *out.agent,
                                                      env.actions(), seed);
  }

  const auto t0 = std::chrono::steady_clock::now();
  out.rows.reserve(static_cast<std::size_t>(cfg.total_steps));
  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    StepLogRow row;
    row.step = step;
    StepResult res;
    if (cfg.baseline) {
      res = env.step_allocation(fixed_alloc);
    } else {
      row.action_index = controller->select(obs, step, rng);
      row.epsilon = out.agent->epsilon(step);
      res = env.step(row.action_index);
      out.agent->observe({obs, row.action_index, res.reward, res.observation});
    }
    row.reward = res.reward;
    row.latency_ms = res.info.latency_ms;
    row.churn = res.info.churn;
    if (cfg.log_wallclock)
      row.wallclock_us = std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    out.rows.push_back(std::move(row));
    obs = std::move(res.observation);
  }
  if (controller) out.distill_loss_trace = controller->state().distill_loss_trace;

  const auto r = out.rewards();
  out.summary = summarize(r, cfg.smoothing_window);
  out.summary.seed = seed;
  out.summary.slices = env_config.slice_names();
  return out;
}

inline std::string csv_header(std::size_t num_slices) {
  std::string h = "step,action_index,reward";
  for (std::size_t i = 0; i < num_slices; ++i) h += ",lat_slice" + std::to_string(i) + "_ms";
  h += ",epsilon,churn,wallclock_us";
  return h;
}

inline void write_csv(const std::vector<StepLogRow>& rows, std::size_t num_slices,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << csv_header(num_slices) << '\n';
  char buf[64];
  for (const auto& r : rows) {
    out << r.step << ',' << r.action_index << ',';
    std::snprintf(buf, sizeof buf, "%.10g", r.reward);
    out << buf;
    for (double l : r.latency_ms) {
      std::snprintf(buf, sizeof buf, ",%.10g", l);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.10g", r.epsilon);
    out << buf << ',' << r.churn << ',' << r.wallclock_us << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json to_json(const RunSummary& s) {
  return {{"seed", s.seed},
          {"label", s.label},
          {"slices", s.slices},
          {"total_steps", s.total_steps},
          {"final_smoothed_reward", s.final_smoothed_reward},
          {"convergence_step", s.convergence_step},
          {"converged", s.convergence_step >= 0},
          {"drop_count", s.drop_count},
          {"first_steps_mean_reward", s.first_steps_mean},
          {"mean_reward", s.mean_reward}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.label = j.value("label", std::string());
    s.slices = j.value("slices", std::vector<std::string>{});
    s.total_steps = j.at("total_steps").get<std::int64_t>();
    s.final_smoothed_reward = j.at("final_smoothed_reward").get<double>();
    s.convergence_step = j.at("convergence_step").get<std::int64_t>();
    s.drop_count = j.at("drop_count").get<int>();
    s.first_steps_mean = j.at("first_steps_mean_reward").get<double>();
    s.mean_reward = j.value("mean_reward", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run summary: ") + e.what());
  }
  return s;
}

inline std::string run_label(const RunConfig& cfg) {
  if (cfg.baseline) return *cfg.baseline == Baseline::kHard ? "hard" : "fixed";
  return to_string(cfg.scenario) + "-" + to_string(cfg.agent.kind) + "-" +
         to_string(cfg.env.reward_kind) + "-" + to_string(cfg.transfer.scheme);
}

struct ExperimentOutput {
  std::string csv_path;
  std::string summary_path;
  std::string policy_path;  // empty when not saved
  RunSummary summary;
};

/// Runs one seed and writes `<out>/run_seed<N>.csv`,
/// `<out>/summary_seed<N>.json` and, for agents with save_policy set,
/// `<out>/policy_seed<N>.json`.
inline ExperimentOutput run_experiment(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const EnvConfig env_config = resolve_config(cfg.env);
  std::shared_ptr<const SnapshotPolicy> expert;
  if (cfg.transfer.scheme != TransferScheme::kNone) {
    const auto actions = action_table(env_config.slices.size());
    expert = std::make_shared<const SnapshotPolicy>(
        load_policy(cfg.expert_snapshot, actions), actions);
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir + ": " + ec.message());

  auto result = train(cfg, env_config, seed, expert);
  result.summary.label = run_label(cfg);

  ExperimentOutput out;
  const std::string stem = cfg.output_dir + "/";
  const std::string tag = "seed" + std::to_string(seed);
  out.csv_path = stem + "run_" + tag + ".csv";
  out.summary_path = stem + "summary_" + tag + ".json";
  write_csv(result.rows, env_config.slices.size(), out.csv_path);
  {
    std::ofstream s(out.summary_path);
    if (!s) throw IoError("cannot write " + out.summary_path);
    s << to_json(result.summary).dump(2) << '\n';
  }
  if (cfg.save_policy && result.agent) {
    out.policy_path = stem + "policy_" + tag + ".json";
    save_policy(*result.agent, out.policy_path);
  }
  out.summary = result.summary;
  return out;
}

/// Mean reward of a decision rule over `windows` steps from a fresh reset.
inline double evaluate_policy(const EnvConfig& env_config, std::uint64_t seed, int windows,
                              const std::function<int(const Observation&)>& policy) {
  SlicingEnv env(env_config);
  Observation obs = env.reset(seed);
  double sum = 0.0;
  for (int w = 0; w < windows; ++w) {
    auto r = env.step(policy(obs));
    sum += r.reward;
    obs = std::move(r.observation);
  }
  return sum / windows;
}

struct OracleResult {
  int best_action = 0;
  std::vector<double> mean_reward;
};

/// Holds each action fixed for `horizon` windows from an identical fresh
/// environment and picks the best mean reward (lowest index on ties).
inline OracleResult brute_force_static_oracle(const EnvConfig& env_config, int horizon,
                                              std::uint64_t seed) {
  if (horizon < 1) throw UsageError("oracle horizon must be >= 1");
  OracleResult out;
  const auto n = action_table(env_config.slices.size()).size();
  for (std::size_t a = 0; a < n; ++a)
    out.mean_reward.push_back(evaluate_policy(
        env_config, seed, horizon, [a](const Observation&) { return static_cast<int>(a); }));
  out.best_action = argmax(out.mean_reward);
  return out;
}

}  // namespace ranslice
