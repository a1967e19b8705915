// Command-line front end: run, oracle, compare, calibrate.

#include <glob.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ranslice/ranslice.hpp"

namespace fs = std::filesystem;
using namespace ranslice;

namespace {

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed: " + pattern);
  return out;
}

RunSummary read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return summary_from_json(j);
}

// A group spec is label=glob. Matches may be summary files or run
// directories holding summary_seed*.json.
RunGroup load_group(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("group must be <label>=<glob>: " + spec);
  RunGroup g;
  g.label = spec.substr(0, eq);
  for (const auto& p : expand_glob(spec.substr(eq + 1))) {
    if (fs::is_directory(p)) {
      for (const auto& f : expand_glob(p + "/summary_seed*.json")) g.runs.push_back(read_summary(f));
    } else {
      g.runs.push_back(read_summary(p));
    }
  }
  if (g.runs.empty()) throw UsageError("group " + g.label + " matched no run summaries");
  return g;
}

int cmd_run(const std::string& config, std::uint64_t seed, const std::string& out) {
  auto cfg = load_run_config(config);
  if (!out.empty()) cfg.output_dir = out;
  const auto res = run_experiment(cfg, seed);
  nlohmann::json j{{"csv", res.csv_path}, {"summary", res.summary_path}};
  if (!res.policy_path.empty()) j["policy"] = res.policy_path;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_oracle(const std::string& config, int horizon, std::optional<std::uint64_t> seed) {
  const auto cfg = load_run_config(config);
  const auto env = resolve_config(cfg.env);
  const auto o = brute_force_static_oracle(env, horizon, seed.value_or(cfg.seeds.front()));
  const auto actions = action_table(env.slices.size());
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t a = 0; a < actions.size(); ++a)
    table.push_back({{"action_index", a}, {"percent", actions[a].percent},
                     {"mean_reward", o.mean_reward[a]}});
  nlohmann::json j{{"best_action", o.best_action},
                   {"best_percent", actions[o.best_action].percent},
                   {"horizon", horizon},
                   {"table", table}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& groups, const std::string& out) {
  std::vector<RunGroup> gs;
  for (const auto& g : groups) gs.push_back(load_group(g));
  const auto report = compare_runs(gs);
  std::ofstream f(out);
  if (!f) throw IoError("cannot write " + out);
  f << report.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + out);
  return 0;
}

int cmd_calibrate(const std::string& config) {
  const auto cfg = load_run_config(config);
  const auto env = resolve_config(cfg.env);
  const auto cal = calibrate_sla(env);
  nlohmann::json slices = nlohmann::json::array();
  for (std::size_t s = 0; s < env.slices.size(); ++s) {
    const auto& p = env.slices[s];
    slices.push_back({{"name", p.name},
                      {"offered_load_bytes_per_ms", p.offered_load()},
                      {"hard_slicing_mean_latency_ms", cal.mean_latency_ms[s]},
                      {"sla_c1", p.sla_c1},
                      {"sla_c2", p.sla_c2},
                      {"deadline", p.deadline}});
  }
  nlohmann::json j{{"capacity_per_slot", env.capacity_per_slot},
                   {"target_utilization", env.target_utilization},
                   {"slices", slices}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAN slicing simulator and transfer-learning harness"};
  app.require_subcommand(1);

  std::string config, out;
  std::uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "train one seed and write CSV, summary and policy");
  run->add_option("--config", config, "config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run seed")->required();
  run->add_option("--out", out, "output directory (overrides config)");

  int horizon = 0;
  std::optional<std::uint64_t> oracle_seed;
  auto* oracle = app.add_subcommand("oracle", "best static allocation by brute force");
  oracle->add_option("--config", config, "config JSON")->required()->check(CLI::ExistingFile);
  oracle->add_option("--horizon", horizon, "windows per action")->required()->check(
      CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed, "simulation seed (default: first config seed)");

  std::vector<std::string> groups;
  auto* compare = app.add_subcommand("compare", "paired comparison of run groups");
  compare->add_option("--group", groups, "<label>=<glob>")->required();
  compare->add_option("--out", out, "report JSON path")->required();

  auto* calibrate = app.add_subcommand("calibrate", "print capacity and SLA thresholds");
  calibrate->add_option("--config", config, "config JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, seed, out);
    if (*oracle) return cmd_oracle(config, horizon, oracle_seed);
    if (*compare) return cmd_compare(groups, out);
    if (*calibrate) return cmd_calibrate(config);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
