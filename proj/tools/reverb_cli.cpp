// Copyright 2026 The REVERB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: train, run and bench.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reverb/experiments.hpp"

namespace fs = std::filesystem;
using namespace reverb;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scheme;
  std::optional<int> episodes;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base seed (overrides REVERB_SEED and the config)");
  cmd->add_option("--scheme", f.scheme, "AoL-REVERB | Perfect | CB-Greedy | EB-Greedy | Traditional");
  cmd->add_option("--episodes", f.episodes, "Episode count")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "Output directory");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? config_from_json(nlohmann::json::object()) : load_config(f.config);
  if (const char* env = std::getenv("REVERB_SEED")) {
    try {
      c.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("REVERB_SEED is not an unsigned integer: ") + env);
    }
  }
  if (f.seed) c.seed = *f.seed;
  if (!f.scheme.empty()) {
    try {
      c.scheme = parse_scheme(f.scheme);
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
  }
  if (!f.out.empty()) c.out_dir = f.out;
  c.train.seed = c.seed;
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw ConfigError("cannot write " + p.string());
  return os;
}

struct Sweep {
  std::string key;  // "C" or "aol"
  int lo = 0;
  int hi = 0;
};

Sweep parse_sweep(const std::string& s) {
  static const std::regex re(R"(^(C|aol):(\d+)\.\.(\d+)$)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw UsageError("--sweep expects C:a..b or aol:a..b, got '" + s + "'");
  Sweep sw{m[1], std::stoi(m[2]), std::stoi(m[3])};
  if (sw.lo < 1 || sw.hi < sw.lo) throw UsageError("--sweep range must satisfy 1 <= a <= b");
  return sw;
}

int cmd_train(const CommonFlags& f) {
  RunConfig c = resolve(f);
  if (f.episodes) c.train.episodes = *f.episodes;
  const auto dir = prepare_out(c);
  TrainConfig tc = training_config(c);
  CoSimEnvironment env(c);
  auto curve_os = open_out(dir / "learning_curve.csv");
  curve_os << "episode,shaped_return,length,reached_goal\n";
  auto result = train(env, tc, [&](const EpisodeStats& s) {
    char line[128];
    std::snprintf(line, sizeof line, "%d,%.17g,%d,%d\n", s.episode, s.shaped_return, s.length, s.reached_goal ? 1 : 0);
    curve_os << line;
    if ((s.episode + 1) % 50 == 0) std::cerr << "train: episode " << s.episode + 1 << " length " << s.length << '\n';
  });
  open_out(dir / "weights.json") << weights_to_json(result.agent).dump(2) << '\n';

  auto eval = evaluate(result.agent.policy, env, c.eval_episodes, c.seed + 1000000ULL, tc.kappa);
  auto eval_os = open_out(dir / "evaluation.csv");
  eval_os << "episode,shaped_return,length,reached_goal\n";
  int wins = 0;
  for (const auto& s : eval) {
    char line[128];
    std::snprintf(line, sizeof line, "%d,%.17g,%d,%d\n", s.episode, s.shaped_return, s.length, s.reached_goal ? 1 : 0);
    eval_os << line;
    wins += s.reached_goal ? 1 : 0;
  }
  std::cout << "trained " << tc.episodes << " episodes; evaluation success " << wins << "/" << eval.size() << '\n';
  return 0;
}

int cmd_run(const CommonFlags& f) {
  RunConfig c = resolve(f);
  const auto dir = prepare_out(c);
  const auto rec = run_episode(c, make_controller(c), c.seed);
  const auto path = dir / ("episode_" + to_string(c.scheme) + "_" + std::to_string(c.seed) + ".csv");
  auto os = open_out(path);
  write_episode_csv(os, rec);
  std::cout << to_string(c.scheme) << ": " << rec.qis() << " QIs, goal " << (rec.reached_goal ? "yes" : "no")
            << ", PRBs " << rec.total_prbs() << " -> " << path.string() << '\n';
  return 0;
}

int cmd_bench(const CommonFlags& f, const std::string& sweep_arg) {
  RunConfig c = resolve(f);
  if (f.episodes) c.episodes = *f.episodes;
  c.validate();
  const auto dir = prepare_out(c);
  const std::vector<SchemeId> schemes = f.scheme.empty() ? all_schemes() : std::vector<SchemeId>{c.scheme};
  std::optional<Sweep> sweep;
  if (!sweep_arg.empty()) sweep = parse_sweep(sweep_arg);

  auto csv = open_out(dir / "summary.csv");
  csv << summary_csv_header() << '\n';
  nlohmann::json all = nlohmann::json::array();
  const int lo = sweep ? sweep->lo : 0, hi = sweep ? sweep->hi : 0;
  for (SchemeId scheme : schemes) {
    for (int v = lo; v <= hi; ++v) {
      RunConfig rc = c;
      rc.scheme = scheme;
      std::string key = "none";
      if (sweep) {
        key = sweep->key;
        if (key == "C") {
          rc.max_connections = v;
        } else {
          rc.aol_thresholds.assign(rc.aol_thresholds.size(), v);
        }
      }
      rc.validate();
      const auto mc = monte_carlo(rc, rc.episodes, make_controller(rc));
      csv << summary_csv_row(mc.summary, key, v) << '\n';
      auto j = mc.summary.to_json();
      j["sweep"] = key;
      j["value"] = v;
      all.push_back(j);
      std::cerr << "bench: " << to_string(scheme) << ' ' << key << '=' << v << " prbs " << mc.summary.mean_total_prbs
                << " mrmse " << mc.summary.mrmse << " failure " << mc.summary.failure_probability << '\n';
    }
  }
  open_out(dir / "summary.json") << nlohmann::json{{"config", config_to_json(c)}, {"results", all}}.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin sensing, scheduling and control co-simulator"};
  app.require_subcommand(1);
  CommonFlags train_f, run_f, bench_f;
  std::string sweep;
  auto* train_cmd = app.add_subcommand("train", "Train the actor-critic agent and write weights.json");
  add_common(train_cmd, train_f);
  auto* run_cmd = app.add_subcommand("run", "Simulate one episode and write its per-QI CSV");
  add_common(run_cmd, run_f);
  auto* bench_cmd = app.add_subcommand("bench", "Monte-Carlo over schemes and sweeps; writes summary.csv/json");
  add_common(bench_cmd, bench_f);
  bench_cmd->add_option("--sweep", sweep, "C:a..b or aol:a..b");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(train_f);
    if (*run_cmd) return cmd_run(run_f);
    return cmd_bench(bench_f, sweep);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
