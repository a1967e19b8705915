#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ranslice/ranslice.hpp"
#include "support.hpp"

namespace ranslice {
namespace {

namespace fs = std::filesystem;

Observation obs(double a, double b, double c) {
  Observation o;
  o.load_ratios = {a, b, c};
  return o;
}

TEST(Discretize, Examples) {
  EXPECT_EQ(bin_tuple(obs(1.0 / 3, 1.0 / 3, 1.0 / 3)), (std::vector<int>{3, 3, 3}));
  EXPECT_EQ(bin_tuple(obs(1.0, 0.0, 0.0)), (std::vector<int>{10, 0, 0}));
  EXPECT_EQ(discretize(obs(1.0, 0.0, 0.0)), 10u);
  EXPECT_EQ(discretize(obs(0.0, 0.0, 1.0)), 10u * 121u);
}

TEST(Discretize, TotalOverSimplex) {
  RandomStream rng(1);
  const Discretization d;
  for (int i = 0; i < 10000; ++i) {
    const auto o = testing::random_observation(rng, 3);
    const auto s = discretize(o, d);
    EXPECT_LT(s, d.num_states());
    EXPECT_EQ(s, discretize(o, d));
  }
  EXPECT_THROW(discretize(obs(0.5, 0.5, 0.0), Discretization{0.1, 11, 2}), UsageError);
}

TEST(Epsilon, ScheduleValues) {
  const EpsilonSchedule e;
  EXPECT_DOUBLE_EQ(e(0), 0.9);
  EXPECT_DOUBLE_EQ(e(1), 0.891);
  for (std::int64_t t : {0, 1, 100, 10000})
    EXPECT_EQ(e(t), std::max(0.01, 0.9 * std::pow(0.99, static_cast<double>(t))));
  EXPECT_EQ(e(10000), 0.01);
}

AgentConfig qconfig(double eps0) {
  AgentConfig c;
  c.kind = AgentKind::kQLearn;
  c.epsilon.epsilon0 = eps0;
  c.epsilon.decay = 1.0;
  c.epsilon.floor = 0.0;
  return c;
}

TEST(Epsilon, FullExplorationIsUniform) {
  const auto actions = action_table(3);
  QLearningAgent agent(qconfig(1.0), actions);
  agent.table().at(discretize(obs(0.2, 0.3, 0.5)), 4) = 100.0;
  RandomStream rng(2);
  const int n = 100000;
  std::vector<int> counts(15, 0);
  for (int i = 0; i < n; ++i) ++counts[agent.select_action(obs(0.2, 0.3, 0.5), i, rng)];
  const double p = 1.0 / 15, sd = std::sqrt(n * p * (1 - p));
  for (int c : counts) EXPECT_NEAR(c, n * p, 3 * sd);
}

TEST(Epsilon, NoExplorationIsGreedy) {
  const auto actions = action_table(3);
  QLearningAgent agent(qconfig(0.0), actions);
  const auto o = obs(0.2, 0.3, 0.5);
  agent.table().at(discretize(o), 9) = 1.0;
  RandomStream rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(agent.select_action(o, i, rng), 9);
}

TEST(QLearning, SingleUpdate) {
  const auto actions = action_table(3);
  QLearningAgent agent(qconfig(0.0), actions);
  const auto o = obs(0.2, 0.3, 0.5), n = obs(0.5, 0.3, 0.2);
  agent.observe({o, 2, 1.0, n});
  EXPECT_DOUBLE_EQ(agent.table().at(discretize(o), 2), 0.1);
}

TEST(QLearning, FixedPointUnchanged) {
  QTable q(2, 2);
  q.at(1, 0) = 5.0;
  q.at(0, 1) = 1.0 + 0.9 * 5.0;
  q.update(0, 1, 1.0, 1, 0.1, 0.9);
  EXPECT_DOUBLE_EQ(q.at(0, 1), 5.5);
}

struct ToyMdp {
  // next[s][a], reward[s][a]
  std::vector<std::vector<int>> next;
  std::vector<std::vector<double>> reward;
};

QTable solve_by_sweeps(const ToyMdp& m, int updates, double scale = 1.0, double shift = 0.0) {
  const std::size_t ns = m.next.size(), na = m.next[0].size();
  QTable q(ns, na);
  int k = 0;
  while (k < updates)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t a = 0; a < na; ++a, ++k)
        q.update(s, a, scale * m.reward[s][a] + shift, m.next[s][a], 0.1, 0.9);
  return q;
}

TEST(QLearning, TwoStateChain) {
  // s0: a0 stays (0), a1 -> s1 (1). s1: a0 -> s0 (2), a1 stays (0).
  // Optimal cycle: V0 = 1 + 0.9 V1, V1 = 2 + 0.9 V0.
  const ToyMdp m{{{0, 1}, {0, 1}}, {{0.0, 1.0}, {2.0, 0.0}}};
  const double v0 = 2.8 / 0.19, v1 = 2.0 + 0.9 * v0;
  const auto q = solve_by_sweeps(m, 10000);
  EXPECT_NEAR(q.at(0, 0), 0.9 * v0, 1e-3);
  EXPECT_NEAR(q.at(0, 1), v0, 1e-3);
  EXPECT_NEAR(q.at(1, 0), v1, 1e-3);
  EXPECT_NEAR(q.at(1, 1), 0.9 * v1, 1e-3);
}

TEST(QLearning, ThreeStateRing) {
  // a0 stays with reward 1; a1 moves to s+1, paying 10 when leaving s2.
  // Moving is optimal: V2 = 10 + 0.9 V0, V1 = 0.9 V2, V0 = 0.9 V1.
  const ToyMdp m{{{0, 1}, {1, 2}, {2, 0}}, {{1.0, 0.0}, {1.0, 0.0}, {1.0, 10.0}}};
  const double v0 = 8.1 / 0.271, v2 = 10.0 + 0.9 * v0, v1 = 0.9 * v2;
  const double v[] = {v0, v1, v2};
  const auto q = solve_by_sweeps(m, 30000);
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(q.at(s, 1), v[s], 1e-3);
    EXPECT_NEAR(q.at(s, 0), 1.0 + 0.9 * v[s], 1e-3);
    EXPECT_EQ(q.best_action(s), 1);
  }
}

TEST(QLearning, GreedyInvariantUnderAffineRewards) {
  const ToyMdp m{{{0, 1}, {1, 2}, {2, 0}}, {{1.0, 0.0}, {1.0, 0.0}, {1.0, 10.0}}};
  const auto base = solve_by_sweeps(m, 30000);
  for (auto [a, b] : {std::pair{2.0, 3.0}, std::pair{0.5, -4.0}, std::pair{10.0, 100.0}}) {
    const auto q = solve_by_sweeps(m, 30000, a, b);
    for (int s = 0; s < 3; ++s) EXPECT_EQ(q.best_action(s), base.best_action(s));
  }
}

TEST(Reinforce, ZeroAdvantageLeavesParameters) {
  const auto actions = action_table(3);
  AgentConfig c;
  c.kind = AgentKind::kReinforce;
  ReinforceAgent agent(c, actions);
  RandomStream rng(4);
  for (auto& t : agent.policy().theta) t = rng.normal();
  const auto before = agent.policy().theta;
  Trajectory traj;
  for (int t = 0; t < 20; ++t)
    traj.push_back({testing::random_observation(rng, 3), static_cast<int>(rng.index(15)), 0.0,
                    testing::random_observation(rng, 3)});
  agent.update(traj);
  EXPECT_EQ(agent.policy().theta, before);
  EXPECT_THROW(agent.update({}), UsageError);
}

TEST(Reinforce, BanditConverges) {
  const auto actions = action_table(3);
  AgentConfig c;
  c.kind = AgentKind::kReinforce;
  ReinforceAgent agent(c, actions);
  RandomStream rng(5);
  const auto o = obs(0.3, 0.3, 0.4);
  for (int i = 0; i < 2000 * c.segment_length; ++i) {
    const int a = agent.select_action(o, i, rng);
    agent.observe({o, a, a == 0 ? 1.0 : 0.0, o});
  }
  EXPECT_GT(agent.action_probabilities(o)[0], 0.9);
}

TEST(GradientCheck, Reinforce) { EXPECT_LE(testing::reinforce_gradient_error(20, 11), 1e-4); }

TEST(GradientCheck, Ppo) { EXPECT_LE(testing::ppo_gradient_error(20, 12), 1e-4); }

TEST(Ppo, ClipExamples) {
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, 1.0, 0.2), 1.2);
  EXPECT_DOUBLE_EQ(clipped_surrogate(1.5, -1.0, 0.2), -1.5);
  EXPECT_DOUBLE_EQ(clipped_surrogate(0.5, -1.0, 0.2), -0.8);
  for (double adv : {-2.0, -0.3, 0.0, 0.7}) EXPECT_DOUBLE_EQ(clipped_surrogate(1.0, adv, 0.2), adv);
}

TEST(Ppo, UnitRatioGivesVanillaPolicyGradient) {
  RandomStream rng(6);
  PpoNetwork net(3, 8, 15);
  for (auto& p : net.params) p = 0.5 * rng.normal();
  std::vector<PpoSample> batch;
  for (int i = 0; i < 10; ++i) {
    PpoSample s;
    s.observation = testing::random_observation(rng, 3).load_ratios;
    s.action = static_cast<int>(rng.index(15));
    s.old_prob = net.forward(s.observation).probs[s.action];
    s.advantage = rng.uniform(-1.0, 1.0);
    s.ret = rng.uniform(-1.0, 1.0);
    batch.push_back(s);
  }
  const auto g = ppo_gradient(net, batch, 0.2);
  auto vanilla = [&] {
    double l = 0.0;
    for (const auto& s : batch) l -= s.advantage * std::log(net.forward(s.observation).probs[s.action]);
    return l / batch.size();
  };
  const auto num = testing::numeric_gradient(vanilla, net.params);
  const std::size_t n = net.v();
  EXPECT_LE(testing::relative_error(std::span(g).first(n), std::span(num).first(n)), 1e-5);
}

TEST(Ppo, BatchSizeBounds) {
  AgentConfig c;
  c.batch_size = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c.batch_size = 9;
  EXPECT_THROW(c.validate(), ConfigError);
  c.batch_size = 4;
  const auto actions = action_table(3);
  PpoAgent agent(c, actions, 1);
  RandomStream rng(7);
  std::vector<Trajectory> batch(3);
  for (auto& traj : batch)
    traj.push_back({testing::random_observation(rng, 3), 0, 1.0, testing::random_observation(rng, 3)});
  EXPECT_THROW(agent.update(batch), UsageError);
  batch.resize(9, batch[0]);
  EXPECT_THROW(agent.update(batch), UsageError);
}

TEST(Softmax, ValidDistribution) {
  RandomStream rng(8);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> z(15);
    for (auto& x : z) x = rng.uniform(-700.0, 700.0);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      sum += x;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

class SnapshotFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ranslice_snap_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

std::unique_ptr<Agent> trained_agent(AgentKind kind, std::span<const AllocationAction> actions) {
  AgentConfig c;
  c.kind = kind;
  auto agent = make_agent(c, actions, 3);
  RandomStream rng(9);
  const int dim = static_cast<int>(actions.front().percent.size());
  for (int i = 0; i < 400; ++i) {
    const auto o = testing::random_observation(rng, dim);
    const int a = agent->select_action(o, i, rng);
    agent->observe({o, a, rng.uniform01() + (a == 6 ? 1.0 : 0.0), testing::random_observation(rng, dim)});
  }
  return agent;
}

TEST_F(SnapshotFiles, RoundTripPreservesGreedyActions) {
  const auto actions = action_table(3);
  for (auto kind : {AgentKind::kQLearn, AgentKind::kReinforce, AgentKind::kPpo}) {
    const auto agent = trained_agent(kind, actions);
    const auto p = path(to_string(kind) + ".json");
    save_policy(*agent, p);
    const SnapshotPolicy loaded(load_policy(p, actions), actions);
    RandomStream rng(10);
    for (int i = 0; i < 1000; ++i) {
      const auto o = testing::random_observation(rng, 3);
      ASSERT_EQ(loaded.greedy_index(o), agent->greedy_action(o)) << to_string(kind);
    }
    const auto j = to_json(loaded.snapshot());
    EXPECT_EQ(j["version"], 1);
    EXPECT_EQ(j["discretization"].is_null(), kind != AgentKind::kQLearn);
  }
}

TEST_F(SnapshotFiles, WrongSliceCountRejected) {
  const auto four = action_table(4);
  const auto agent = trained_agent(AgentKind::kPpo, four);
  save_policy(*agent, path("p4.json"));
  EXPECT_THROW(load_policy(path("p4.json"), action_table(3)), IncompatibleSnapshotError);
}

TEST_F(SnapshotFiles, VersionMismatchIsExplicit) {
  const auto actions = action_table(3);
  auto j = to_json(trained_agent(AgentKind::kReinforce, actions)->snapshot());
  j["version"] = 2;
  std::ofstream(path("v2.json")) << j.dump();
  EXPECT_THROW(load_policy(path("v2.json")), IncompatibleSnapshotError);
}

TEST_F(SnapshotFiles, MalformedFiles) {
  std::ofstream(path("bad.json")) << "{\"version\": 1, \"agent_kind\":";
  EXPECT_THROW(load_policy(path("bad.json")), SnapshotParseError);
  const auto actions = action_table(3);
  auto j = to_json(trained_agent(AgentKind::kReinforce, actions)->snapshot());
  j["parameters"].erase(0);
  std::ofstream(path("short.json")) << j.dump();
  EXPECT_THROW(load_policy(path("short.json")), SnapshotParseError);
  EXPECT_THROW(load_policy(path("missing.json")), IoError);
}

TEST(GreedyAction, UniformQRowPicksLowestIndex) {
  const auto actions = action_table(3);
  QLearningAgent agent(qconfig(0.0), actions);
  for (auto& v : agent.table().values()) v = 0.25;
  const auto o = obs(0.1, 0.2, 0.7);
  EXPECT_EQ(agent.greedy_action(o), 0);
  EXPECT_EQ(greedy_action(agent.snapshot(), o, actions).action_index, 0);
}

TEST(GreedyAction, OneHotLogits) {
  const auto actions = action_table(3);
  AgentConfig c;
  c.kind = AgentKind::kReinforce;
  ReinforceAgent agent(c, actions);
  agent.policy().theta[7 * 4 + 3] = 1.0;
  const auto o = obs(0.3, 0.3, 0.4);
  const auto snap = agent.snapshot();
  const auto g = greedy_action(snap, o, actions);
  EXPECT_EQ(g.action_index, 7);
  EXPECT_EQ(g.fractions, actions[7].fractions());
  EXPECT_EQ(greedy_action(snap, o, actions).action_index, 7);
}

}  // namespace
}  // namespace ranslice
