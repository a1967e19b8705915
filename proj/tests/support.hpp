#pragma once

// Oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ranslice/ranslice.hpp"

namespace ranslice::testing {

/// Central finite differences of f around params (params restored after).
inline std::vector<double> numeric_gradient(const std::function<double()>& f,
                                            std::vector<double>& params, double h = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = params[i];
    params[i] = x + h;
    const double up = f();
    params[i] = x - h;
    const double down = f();
    params[i] = x;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline Observation random_observation(RandomStream& rng, int dim) {
  std::vector<double> w(dim);
  for (auto& x : w) x = rng.uniform01() + 1e-3;
  return observation_from_loads(w);
}

/// Worst relative error of the REINFORCE gradient over random parameter
/// vectors and trajectories.
inline double reinforce_gradient_error(int points, std::uint64_t seed) {
  RandomStream rng(seed);
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    LinearSoftmaxPolicy pol(3, 15);
    for (auto& t : pol.theta) t = rng.normal();
    Trajectory traj;
    std::vector<double> returns;
    for (int t = 0; t < 10; ++t) {
      traj.push_back({random_observation(rng, 3), static_cast<int>(rng.index(15)),
                      rng.uniform01(), random_observation(rng, 3)});
      returns.push_back(rng.uniform(-1.0, 1.0));
    }
    const double b = rng.uniform(-0.5, 0.5);
    const auto analytic = reinforce_gradient(pol, traj, returns, b);
    const auto numeric = numeric_gradient(
        [&] { return reinforce_objective(pol, traj, returns, b); }, pol.theta);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

/// Same for the PPO loss (policy and value heads). Old probabilities are
/// perturbed around the current ones so both clip branches are exercised.
inline double ppo_gradient_error(int points, std::uint64_t seed) {
  RandomStream rng(seed);
  double worst = 0.0;
  const double clip = 0.2;
  for (int k = 0; k < points; ++k) {
    PpoNetwork net(3, 8, 15);
    for (auto& p : net.params) p = 0.5 * rng.normal();
    std::vector<PpoSample> batch;
    for (int t = 0; t < 12; ++t) {
      PpoSample s;
      s.observation = random_observation(rng, 3).load_ratios;
      s.action = static_cast<int>(rng.index(15));
      const double p = net.forward(s.observation).probs[s.action];
      // Keep ratios away from the clip kinks at 1 +- clip.
      double r;
      do {
        r = rng.uniform(0.5, 1.6);
      } while (std::abs(r - (1.0 - clip)) < 0.02 || std::abs(r - (1.0 + clip)) < 0.02);
      s.old_prob = p / r;
      s.ret = rng.uniform(-1.0, 1.0);
      s.advantage = rng.uniform(-1.0, 1.0);
      batch.push_back(s);
    }
    const auto analytic = ppo_gradient(net, batch, clip);
    const auto numeric =
        numeric_gradient([&] { return ppo_loss(net, batch, clip); }, net.params);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

struct InvariantReport {
  long budget_violations = 0;
  long conservation_violations = 0;
  long fifo_violations = 0;
  long windows = 0;
};

/// Drives the base station slot by slot under a random allocation per
/// window, checking that no slice exceeds its budget, bytes are conserved
/// (arrived = served + queued + dropped with churned users), and each user
/// queue is served in arrival order.
inline InvariantReport check_scheduler_invariants(const EnvConfig& resolved, int windows,
                                                  std::uint64_t seed) {
  InvariantReport rep;
  const std::size_t ns = resolved.slices.size();
  TrafficModel traffic(resolved.slices, seed);
  const auto users = resolved.users();
  BaseStation bs(resolved.capacity_per_slot, users, resolved.window_len, resolved.slot_duration);
  const auto actions = action_table(ns);
  RandomStream rng(derive_seed(seed, {0x51}));
  std::vector<double> arrived(ns, 0.0), served(ns, 0.0);
  // Arrival time of the last completed packet per user.
  std::vector<std::vector<double>> last_done(ns);
  for (std::size_t s = 0; s < ns; ++s) last_done[s].assign(users[s], -kInf);
  const double tol = 1e-6;

  for (int w = 0; w < windows; ++w) {
    const auto alloc = actions[rng.index(actions.size())].fractions();
    for (int k = 0; k < bs.window_len(); ++k) {
      const double t = bs.now();
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t u = 0; u < traffic.num_users(s); ++u)
          for (const auto& a : traffic.arrivals(s, u, t)) {
            bs.enqueue(s, u, a);
            arrived[s] += a.size;
          }
      const auto rep_slot = bs.run_slot(alloc);
      for (std::size_t s = 0; s < ns; ++s) {
        served[s] += rep_slot.served_bytes[s];
        if (rep_slot.served_bytes[s] > alloc[s] * bs.capacity_per_slot() + tol)
          ++rep.budget_violations;
      }
      for (const auto& c : rep_slot.completions) {
        auto& last = last_done[c.slice_id][c.user];
        if (c.packet.arrival_time < last) ++rep.fifo_violations;
        last = c.packet.arrival_time;
        if (traffic.record_delivery(c.slice_id, c.user, c.packet.latency(), bs.now())) {
          bs.discard_user_queue(c.slice_id, c.user);
          last = -kInf;
        }
      }
    }
    for (std::size_t s = 0; s < ns; ++s) {
      const double rhs = served[s] + bs.queued_bytes(s) + bs.discarded_bytes(s);
      if (std::abs(arrived[s] - rhs) > 1e-9 * std::max(1.0, arrived[s])) ++rep.conservation_violations;
      // Only a head-of-line packet may be partially served, and queues stay
      // in arrival order.
      for (const auto& q : bs.slice(s).queues)
        for (std::size_t i = 0; i < q.size(); ++i) {
          if (i > 0 && q[i].remaining != q[i].size) ++rep.fifo_violations;
          if (i > 0 && q[i].arrival_time < q[i - 1].arrival_time) ++rep.fifo_violations;
        }
    }
    ++rep.windows;
  }
  return rep;
}

}  // namespace ranslice::testing
