#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ranslice/errors.hpp"
#include "ranslice/harness/runner.hpp"
#include "ranslice/harness/stats.hpp"

namespace ranslice {

inline constexpr std::size_t kMinCompareSeeds = 5;

struct RunGroup {
  std::string label;
  std::vector<RunSummary> runs;
};

enum class Better { kHigher, kLower };

struct Metric {
  const char* name;
  Better better;
  double (*extract)(const RunSummary&);
};

// Non-converged runs count as converging at the last step.
inline double converged_at(const RunSummary& s) {
  return static_cast<double>(s.convergence_step < 0 ? s.total_steps : s.convergence_step);
}

inline const std::vector<Metric>& comparison_metrics() {
  static const std::vector<Metric> m = {
      {"first_steps_mean_reward", Better::kHigher,
       [](const RunSummary& s) { return s.first_steps_mean; }},
      {"convergence_step", Better::kLower, [](const RunSummary& s) { return converged_at(s); }},
      {"drop_count", Better::kLower,
       [](const RunSummary& s) { return static_cast<double>(s.drop_count); }},
      {"final_smoothed_reward", Better::kHigher,
       [](const RunSummary& s) { return s.final_smoothed_reward; }},
  };
  return m;
}

struct PairedOutcome {
  int wins = 0;    // seeds where A is strictly better than B
  int losses = 0;
  int ties = 0;
  double p_value = 1.0;  // one-sided sign test for "A better than B"
};

inline std::vector<RunSummary> sorted_by_seed(std::vector<RunSummary> runs) {
  std::sort(runs.begin(), runs.end(),
            [](const RunSummary& a, const RunSummary& b) { return a.seed < b.seed; });
  return runs;
}

inline PairedOutcome paired_compare(const RunGroup& a, const RunGroup& b, const Metric& m) {
  const auto ra = sorted_by_seed(a.runs);
  const auto rb = sorted_by_seed(b.runs);
  if (ra.size() != rb.size()) throw UsageError("paired comparison needs equal seed sets");
  PairedOutcome o;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].seed != rb[i].seed) throw UsageError("paired comparison needs equal seed sets");
    double d = m.extract(ra[i]) - m.extract(rb[i]);
    if (m.better == Better::kLower) d = -d;
    if (d > 0)
      ++o.wins;
    else if (d < 0)
      ++o.losses;
    else
      ++o.ties;
  }
  o.p_value = sign_test_p(o.wins, o.wins + o.losses);
  return o;
}

/// Per-group mean/std of the four run metrics and pairwise one-sided sign
/// tests over paired seeds.
inline nlohmann::json compare_runs(const std::vector<RunGroup>& groups) {
  if (groups.size() < 2) throw UsageError("compare needs at least two groups");
  std::set<std::uint64_t> seeds;
  for (const auto& s : groups.front().runs) seeds.insert(s.seed);
  for (const auto& g : groups) {
    if (g.runs.size() < kMinCompareSeeds)
      throw UsageError("group " + g.label + " has fewer than 5 seeds");
    std::set<std::uint64_t> gs;
    for (const auto& s : g.runs) gs.insert(s.seed);
    if (gs.size() != g.runs.size()) throw UsageError("group " + g.label + " repeats a seed");
    if (gs != seeds) throw UsageError("groups must share the same seed set");
  }

  nlohmann::json report;
  report["seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
  for (const auto& g : groups) {
    nlohmann::json gj;
    for (const auto& m : comparison_metrics()) {
      std::vector<double> v;
      for (const auto& s : g.runs) v.push_back(m.extract(s));
      gj[m.name] = {{"mean", mean(v)}, {"std", stddev(v)}};
    }
    report["groups"][g.label] = gj;
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& a : groups) {
    for (const auto& b : groups) {
      if (&a == &b) continue;
      nlohmann::json pj{{"a", a.label}, {"b", b.label}};
      for (const auto& m : comparison_metrics()) {
        const auto o = paired_compare(a, b, m);
        pj[m.name] = {{"wins", o.wins}, {"losses", o.losses}, {"ties", o.ties},
                      {"p_value", o.p_value}};
      }
      pairs.push_back(pj);
    }
  }
  report["pairwise"] = pairs;
  return report;
}

}  // namespace ranslice
