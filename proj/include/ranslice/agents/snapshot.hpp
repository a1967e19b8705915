#pragma once

#include <fstream>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranslice/agents/common.hpp"
#include "ranslice/agents/ppo.hpp"
#include "ranslice/agents/qlearning.hpp"
#include "ranslice/agents/reinforce.hpp"

namespace ranslice {

inline nlohmann::json to_json(const PolicySnapshot& s) {
  nlohmann::json j;
  j["version"] = s.version;
  j["agent_kind"] = to_string(s.agent_kind);
  j["action_table_hash"] = s.action_table_hash;
  if (s.discretization) {
    j["discretization"] = {{"bin_width", s.discretization->bin_width},
                           {"levels", s.discretization->levels},
                           {"num_slices", s.discretization->num_slices}};
  } else {
    j["discretization"] = nullptr;
  }
  j["parameters"] = s.parameters;
  j["layout"] = {{"obs_dim", s.layout.obs_dim},
                 {"num_actions", s.layout.num_actions},
                 {"hidden", s.layout.hidden}};
  return j;
}

/// Parses and checks the structure; does not check compatibility with an
/// environment (see check_compatible).
inline PolicySnapshot snapshot_from_json(const nlohmann::json& j) {
  PolicySnapshot s;
  try {
    s.version = j.at("version").get<int>();
    if (s.version != kSnapshotVersion)
      throw IncompatibleSnapshotError("unsupported snapshot version " +
                                      std::to_string(s.version));
    s.agent_kind = agent_kind_from_string(j.at("agent_kind").get<std::string>());
    s.action_table_hash = j.at("action_table_hash").get<std::string>();
    const auto& d = j.at("discretization");
    if (!d.is_null())
      s.discretization = Discretization{d.at("bin_width").get<double>(),
                                        d.at("levels").get<int>(),
                                        d.at("num_slices").get<int>()};
    s.parameters = j.at("parameters").get<std::vector<double>>();
    const auto& l = j.at("layout");
    s.layout = {l.at("obs_dim").get<int>(), l.at("num_actions").get<int>(),
                l.at("hidden").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotParseError(std::string("malformed policy snapshot: ") + e.what());
  } catch (const ConfigError& e) {
    throw SnapshotParseError(std::string("malformed policy snapshot: ") + e.what());
  }

  std::size_t expected = 0;
  switch (s.agent_kind) {
    case AgentKind::kQLearn:
      if (!s.discretization) throw SnapshotParseError("tabular snapshot without discretization");
      expected = s.discretization->num_states() * s.layout.num_actions;
      break;
    case AgentKind::kReinforce:
      expected = static_cast<std::size_t>(s.layout.num_actions * (s.layout.obs_dim + 1));
      break;
    case AgentKind::kPpo:
      expected = PpoNetwork::size_for(s.layout.obs_dim, s.layout.hidden, s.layout.num_actions);
      break;
  }
  if (s.parameters.size() != expected)
    throw SnapshotParseError("snapshot parameter count does not match its layout");
  return s;
}

inline void check_compatible(const PolicySnapshot& s,
                             std::span<const AllocationAction> actions) {
  if (s.version != kSnapshotVersion)
    throw IncompatibleSnapshotError("unsupported snapshot version");
  if (s.action_table_hash != action_table_hash(actions))
    throw IncompatibleSnapshotError(
        "snapshot action table does not match this environment");
}

inline void save_policy(const PolicySnapshot& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(s).dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline void save_policy(const Agent& agent, const std::string& path) {
  save_policy(agent.snapshot(), path);
}

inline PolicySnapshot load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotParseError(path + ": " + e.what());
  }
  return snapshot_from_json(j);
}

/// Loads and rejects snapshots built for a different action table.
inline PolicySnapshot load_policy(const std::string& path,
                                  std::span<const AllocationAction> actions) {
  auto s = load_policy(path);
  check_compatible(s, actions);
  return s;
}

struct GreedyChoice {
  int action_index = 0;
  std::vector<double> fractions;
};

/// Deterministic evaluator for a frozen snapshot. Holds its own copy of the
/// parameters, so evaluating never touches the source snapshot.
class SnapshotPolicy {
 public:
  SnapshotPolicy(PolicySnapshot snapshot, std::span<const AllocationAction> actions)
      : snap_(std::move(snapshot)), actions_(actions.begin(), actions.end()) {
    check_compatible(snap_, actions_);
    if (snap_.layout.num_actions != static_cast<int>(actions_.size()))
      throw IncompatibleSnapshotError("snapshot action count mismatch");
    switch (snap_.agent_kind) {
      case AgentKind::kQLearn:
        break;
      case AgentKind::kReinforce:
        linear_ = LinearSoftmaxPolicy(snap_.layout.obs_dim, snap_.layout.num_actions);
        linear_.theta = snap_.parameters;
        break;
      case AgentKind::kPpo:
        net_ = PpoNetwork(snap_.layout.obs_dim, snap_.layout.hidden, snap_.layout.num_actions);
        net_.params = snap_.parameters;
        break;
    }
  }

  const PolicySnapshot& snapshot() const { return snap_; }

  // Tabular: argmax Q; policy-gradient: argmax logits. Lowest index wins.
  int greedy_index(const Observation& obs) const {
    switch (snap_.agent_kind) {
      case AgentKind::kQLearn: {
        const std::size_t s = discretize(obs, *snap_.discretization);
        const std::span<const double> row(
            snap_.parameters.data() + s * snap_.layout.num_actions,
            static_cast<std::size_t>(snap_.layout.num_actions));
        return argmax(row);
      }
      case AgentKind::kReinforce:
        return argmax(linear_.logits(obs.load_ratios));
      case AgentKind::kPpo:
        return argmax(net_.forward(obs.load_ratios).logits);
    }
    return 0;
  }

  GreedyChoice greedy(const Observation& obs) const {
    const int a = greedy_index(obs);
    return {a, actions_[a].fractions()};
  }

 private:
  PolicySnapshot snap_;
  std::vector<AllocationAction> actions_;
  LinearSoftmaxPolicy linear_;
  PpoNetwork net_;
};

inline GreedyChoice greedy_action(const PolicySnapshot& snapshot,
                                  const Observation& obs,
                                  std::span<const AllocationAction> actions) {
  return SnapshotPolicy(snapshot, actions).greedy(obs);
}

inline std::unique_ptr<Agent> make_agent(const AgentConfig& config,
                                         std::span<const AllocationAction> actions,
                                         std::uint64_t seed) {
  switch (config.kind) {
    case AgentKind::kQLearn:
      return std::make_unique<QLearningAgent>(config, actions);
    case AgentKind::kReinforce:
      return std::make_unique<ReinforceAgent>(config, actions);
    case AgentKind::kPpo:
      return std::make_unique<PpoAgent>(config, actions, seed);
  }
  throw ConfigError("unknown agent kind");
}

}  // namespace ranslice
