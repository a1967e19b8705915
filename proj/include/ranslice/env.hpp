#pragma once

// Reinforcement-learning environment over the slicing simulator: discrete
// allocation actions, load-ratio observations, latency rewards, and the
// static slicing baselines.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ranslice/errors.hpp"
#include "ranslice/ransim.hpp"
#include "ranslice/traffic.hpp"

namespace ranslice {

inline constexpr int kAllocationStepPercent = 25;

struct Observation {
  std::vector<double> load_ratios;
};

struct AllocationAction {
  int index = 0;
  std::vector<int> percent;

  std::vector<double> fractions() const {
    std::vector<double> f(percent.size());
    for (std::size_t i = 0; i < percent.size(); ++i) f[i] = percent[i] / 100.0;
    return f;
  }
};

namespace detail {
inline void compositions(int remaining, std::size_t slot, std::vector<int>& cur,
                         std::vector<AllocationAction>& out) {
  if (slot + 1 == cur.size()) {
    cur[slot] = remaining;
    out.push_back({static_cast<int>(out.size()), cur});
    return;
  }
  for (int p = 0; p <= remaining; p += kAllocationStepPercent) {
    cur[slot] = p;
    compositions(remaining - p, slot + 1, cur, out);
  }
}
}  // namespace detail

/// All splits of 100% into `num_slices` multiples of 25%, in ascending
/// lexicographic order. For three slices this is the 15-entry table.
inline std::vector<AllocationAction> action_table(std::size_t num_slices = 3) {
  if (num_slices < 1) throw ConfigError("need at least one slice");
  std::vector<AllocationAction> out;
  std::vector<int> cur(num_slices, 0);
  detail::compositions(100, 0, cur, out);
  return out;
}

/// Index of a percent triple in `table`, or -1.
inline int action_index(std::span<const AllocationAction> table,
                        std::span<const int> percent) {
  for (const auto& a : table)
    if (std::equal(a.percent.begin(), a.percent.end(), percent.begin(),
                   percent.end()))
      return a.index;
  return -1;
}

/// FNV-1a over the table contents, as 16 hex digits.
inline std::string action_table_hash(std::span<const AllocationAction> table) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(table.size());
  for (const auto& a : table) {
    feed(a.percent.size());
    for (int p : a.percent) feed(static_cast<std::uint64_t>(p));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Observation observation_from_loads(std::span<const double> bytes) {
  Observation o;
  double total = 0.0;
  for (double b : bytes) {
    if (!(b >= 0.0)) throw UsageError("negative load");
    total += b;
  }
  o.load_ratios.resize(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    o.load_ratios[i] = total > 0.0 ? bytes[i] / total : 1.0 / bytes.size();
  return o;
}

/// Logistic latency reward with r(c1) = 0.95 and r(c2) = 0.05.
inline double sigmoid_reward(double latency, double c1, double c2) {
  if (!(c1 < c2)) throw ConfigError("sigmoid reward needs c1 < c2");
  const double steepness = 2.0 * std::log(19.0) / (c2 - c1);
  const double mid = 0.5 * (c1 + c2);
  return 1.0 / (1.0 + std::exp(steepness * (latency - mid)));
}

enum class RewardKind { kFn1, kFn2, kFn3 };

struct RewardSpec {
  RewardKind kind = RewardKind::kFn2;
  std::vector<double> weights;
  std::vector<double> c1;
  std::vector<double> c2;
  double shaping_bonus = 0.2;
  // Slice whose SLA earns the shaping bonus under fn3; -1 for none.
  int priority_slice = -1;

  void validate() const {
    const std::size_t n = weights.size();
    if (n == 0 || c1.size() != n || c2.size() != n)
      throw ConfigError("reward spec vectors must match the slice count");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(weights[i] > 0.0)) throw ConfigError("reward weights must be > 0");
      if (!(c1[i] < c2[i])) throw ConfigError("reward needs c1 < c2 per slice");
      sum += weights[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("reward weights must sum to 1");
    if (!(shaping_bonus >= 0.0)) throw ConfigError("shaping bonus must be >= 0");
    if (priority_slice >= static_cast<int>(n))
      throw ConfigError("priority slice out of range");
  }
};

inline double compute_reward(const RewardSpec& spec,
                             std::span<const double> latency) {
  const std::size_t n = spec.weights.size();
  if (latency.size() != n) throw UsageError("latency vector size mismatch");
  double r = 0.0;
  if (spec.kind == RewardKind::kFn1) {
    for (std::size_t i = 0; i < n; ++i)
      r -= spec.weights[i] * (latency[i] / spec.c2[i]);
    return r;
  }
  for (std::size_t i = 0; i < n; ++i)
    r += spec.weights[i] * sigmoid_reward(latency[i], spec.c1[i], spec.c2[i]);
  if (spec.kind == RewardKind::kFn3 && spec.priority_slice >= 0 &&
      latency[spec.priority_slice] <= spec.c2[spec.priority_slice])
    r += spec.shaping_bonus;
  return r;
}

inline std::vector<double> window_latencies(const WindowStats& stats) {
  std::vector<double> l;
  for (const auto& s : stats.slices) l.push_back(s.avg_latency_ms);
  return l;
}

inline double compute_reward(const RewardSpec& spec, const WindowStats& stats) {
  const auto l = window_latencies(stats);
  return compute_reward(spec, l);
}

enum class Baseline { kHard, kFixed };

/// Static comparators, applied every window regardless of the observation.
/// Hard slicing splits evenly. Fixed slicing gives URLLC 70%, Video 20% and
/// VoLTE 10%, looked up by slice name; the shares are renormalized when a
/// cell does not hold exactly one slice of each class.
inline std::vector<double> baseline_policy(
    Baseline kind, std::span<const std::string> slice_names) {
  const std::size_t n = slice_names.size();
  if (n == 0) throw ConfigError("no slices");
  if (kind == Baseline::kHard) return std::vector<double>(n, 1.0 / n);
  std::vector<double> w;
  double sum = 0.0;
  for (const auto& name : slice_names) {
    double share = 0.0;
    if (name == "URLLC")
      share = 0.70;
    else if (name == "Video")
      share = 0.20;
    else if (name == "VoLTE")
      share = 0.10;
    else
      throw ConfigError("fixed slicing has no share for slice " + name);
    w.push_back(share);
    sum += share;
  }
  for (auto& x : w) x /= sum;
  return w;
}

inline std::vector<double> hard_slicing(std::size_t num_slices) {
  return std::vector<double>(num_slices, 1.0 / num_slices);
}

struct EnvConfig {
  std::vector<ServiceProfile> slices;
  // Zero means "derive from target_utilization".
  double capacity_per_slot = 0.0;
  double target_utilization = 0.3;
  int window_len = kWindowSlots;
  double slot_duration = kSlotDurationMs;
  RewardKind reward_kind = RewardKind::kFn2;
  std::vector<double> reward_weights;
  double shaping_bonus = 0.2;
  int priority_slice = -1;
  // Calibration run for unset SLA thresholds.
  std::uint64_t calibration_seed = 7;
  int calibration_windows = 500;

  std::vector<std::string> slice_names() const {
    std::vector<std::string> n;
    for (const auto& p : slices) n.push_back(p.name);
    return n;
  }

  std::vector<int> users() const {
    std::vector<int> u;
    for (const auto& p : slices) u.push_back(p.num_users);
    return u;
  }

  RewardSpec reward_spec() const {
    RewardSpec r;
    r.kind = reward_kind;
    r.weights = reward_weights;
    r.shaping_bonus = shaping_bonus;
    r.priority_slice = priority_slice;
    for (const auto& p : slices) {
      r.c1.push_back(p.sla_c1);
      r.c2.push_back(p.sla_c2);
    }
    return r;
  }
};

struct StepInfo {
  std::vector<double> latency_ms;
  std::vector<int> violations;
  int churn = 0;
  WindowStats window;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  StepInfo info;
};

/// Simulator state for one run. Reset rebuilds everything from the seed.
class SlicingEnv {
 public:
  /// `config` must be resolved (capacity and SLAs set); see resolve_config.
  explicit SlicingEnv(EnvConfig config)
      : config_(std::move(config)),
        actions_(action_table(config_.slices.size())),
        reward_(config_.reward_spec()) {
    if (config_.slices.empty()) throw ConfigError("no slices configured");
    for (const auto& p : config_.slices) {
      p.validate();
      if (!p.sla_calibrated()) throw ConfigError(p.name + ": SLA thresholds unset");
    }
    if (!(config_.capacity_per_slot > 0.0))
      throw ConfigError("capacity_per_slot unset");
    reward_.validate();
  }

  Observation reset(std::uint64_t seed) {
    traffic_.emplace(config_.slices, seed);
    const auto users = config_.users();
    bs_.emplace(config_.capacity_per_slot, users, config_.window_len,
                config_.slot_duration);
    const auto warmup = hard_slicing(num_slices());
    return run(warmup).observation;
  }

  StepResult step(int action_index) {
    if (action_index < 0 || action_index >= static_cast<int>(actions_.size()))
      throw UsageError("action index out of range");
    return step_allocation(actions_[action_index].fractions());
  }

  StepResult step_allocation(std::span<const double> fractions) {
    if (!bs_) throw UsageError("step before reset");
    if (fractions.size() != num_slices()) throw UsageError("allocation size mismatch");
    double sum = 0.0;
    for (double f : fractions) {
      if (f < 0.0) throw UsageError("negative allocation");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw UsageError("allocation must sum to 1");
    return run(fractions);
  }

  std::size_t num_slices() const { return config_.slices.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  const std::vector<AllocationAction>& actions() const { return actions_; }
  const RewardSpec& reward_spec() const { return reward_; }
  const EnvConfig& config() const { return config_; }
  const BaseStation& base_station() const { return *bs_; }

 private:
  StepResult run(std::span<const double> fractions) {
    StepResult r;
    r.info.window = run_window(*bs_, fractions, *traffic_);
    std::vector<double> loads;
    for (const auto& s : r.info.window.slices) {
      loads.push_back(s.bytes_arrived);
      r.info.latency_ms.push_back(s.avg_latency_ms);
      r.info.violations.push_back(s.deadline_violations);
    }
    r.info.churn = r.info.window.total_churn();
    r.observation = observation_from_loads(loads);
    r.reward = compute_reward(reward_, r.info.latency_ms);
    return r;
  }

  EnvConfig config_;
  std::vector<AllocationAction> actions_;
  RewardSpec reward_;
  std::optional<TrafficModel> traffic_;
  std::optional<BaseStation> bs_;
};

struct SlaCalibration {
  std::vector<double> mean_latency_ms;
  std::vector<double> c1, c2, deadline;
};

/// Measures per-slice average latency under hard slicing with churn
/// disabled, then sets c2 = 1.5 x that average, c1 = c2 / 2 and
/// deadline = 2 c2. Slices that never queue get c2 = one slot duration.
inline SlaCalibration calibrate_sla(const EnvConfig& config) {
  if (config.calibration_windows < 1) throw ConfigError("calibration_windows must be >= 1");
  std::vector<ServiceProfile> profiles = config.slices;
  for (auto& p : profiles) {
    p.sla_c1 = p.sla_c2 = 0.0;
    p.deadline = kInf;
  }
  TrafficModel traffic(profiles, config.calibration_seed);
  const auto users = config.users();
  BaseStation bs(config.capacity_per_slot, users, config.window_len,
                 config.slot_duration);
  const auto alloc = hard_slicing(profiles.size());
  std::vector<double> sum(profiles.size(), 0.0);
  for (int w = 0; w < config.calibration_windows; ++w) {
    const auto stats = run_window(bs, alloc, traffic);
    for (std::size_t s = 0; s < sum.size(); ++s) sum[s] += stats.slices[s].avg_latency_ms;
  }
  SlaCalibration out;
  for (std::size_t s = 0; s < sum.size(); ++s) {
    const double mean = sum[s] / config.calibration_windows;
    const double c2 = std::max(1.5 * mean, config.slot_duration);
    out.mean_latency_ms.push_back(mean);
    out.c2.push_back(c2);
    out.c1.push_back(0.5 * c2);
    out.deadline.push_back(2.0 * c2);
  }
  return out;
}

/// Fills in capacity (from target utilization) and any SLA thresholds left
/// unset. Explicitly configured values are kept.
inline EnvConfig resolve_config(EnvConfig config) {
  if (config.slices.empty()) throw ConfigError("no slices configured");
  if (config.reward_weights.empty())
    config.reward_weights.assign(config.slices.size(), 1.0 / config.slices.size());
  if (!(config.capacity_per_slot > 0.0))
    config.capacity_per_slot =
        calibrate_capacity(config.slices, config.target_utilization,
                           config.slot_duration);
  bool need_sla = false;
  for (const auto& p : config.slices) need_sla = need_sla || !p.sla_calibrated();
  if (need_sla) {
    const auto cal = calibrate_sla(config);
    for (std::size_t s = 0; s < config.slices.size(); ++s) {
      auto& p = config.slices[s];
      if (p.sla_calibrated()) continue;
      p.sla_c1 = cal.c1[s];
      p.sla_c2 = cal.c2[s];
      if (std::isinf(p.deadline)) p.deadline = cal.deadline[s];
    }
  }
  for (auto& p : config.slices)
    if (std::isinf(p.deadline)) p.deadline = 2.0 * p.sla_c2;
  return config;
}

}  // namespace ranslice
