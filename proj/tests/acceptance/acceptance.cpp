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

// Acceptance checks A1-A10. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion ids as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../common/alg2_oracle.hpp"
#include "../common/bandwidth_oracle.hpp"
#include "reverb/channel.hpp"
#include "reverb/control.hpp"
#include "reverb/dynamics.hpp"
#include "reverb/estimator.hpp"
#include "reverb/experiments.hpp"
#include "reverb/scheduler.hpp"
#include "reverb/special_functions.hpp"

using namespace reverb;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ChannelParams table_channel() { return ChannelParams::from_noise_power(kDefaultNoiseDbm, kDefaultNoiseReferenceHz); }

Verdict a1_lemma() {
  const auto t0 = std::chrono::steady_clock::now();
  RandomSource rng(101);
  const double bits[] = {256.0, 1024.0, 4096.0};
  int accepted = 0, drawn = 0;
  double worst_identity = 0.0, worst_rel = 0.0;
  while (accepted < 100) {
    ChannelParams c = table_channel();
    c.rician_factor = rng.uniform(2.0, 50.0);
    c.outage = std::exp(rng.uniform(std::log(1e-6), std::log(1e-2)));
    c.packet_bits = bits[std::min(2, static_cast<int>(rng.uniform() * 3))];
    c.max_latency = rng.uniform(1e-3, 1e-2);
    const double d = rng.uniform(1.0, 20.0);
    const double p = rng.uniform(1e-3, 0.1);
    ++drawn;
    // Redraw outside the closed form's domain: weak line of sight or Θ <= 1.
    if (!(std::sqrt(2.0 * c.rician_factor) > gaussian_q_inv(c.outage))) continue;
    if (!(link_theta(c, p, d) > 1.0)) continue;
    const auto b = optimal_bandwidth(c, p, d);
    const double u = -c.packet_bits * std::numbers::ln2 / (c.max_latency * b.w_star);
    worst_identity = std::max(worst_identity, std::abs((1.0 - u * b.theta) * std::exp(u) - 1.0));
    const double ref = oracle::bisect_bandwidth(c, p, d);
    worst_rel = std::max(worst_rel, std::abs(b.w_star - ref) / ref);
    ++accepted;
  }
  const double elapsed = seconds_since(t0);
  return {worst_identity <= 1e-9 && worst_rel <= 1e-6 && elapsed < 5.0,
          fmt("%d draws (%d redrawn): identity err %.2e <= 1e-9, bisection rel err %.2e <= 1e-6, %.2f s < 5 s",
              accepted, drawn - accepted, worst_identity, worst_rel, elapsed)};
}

Verdict a2_outage() {
  const auto t0 = std::chrono::steady_clock::now();
  const ChannelParams c = table_channel();
  const FleetConfig fleet;
  const auto b = optimal_bandwidth(c, fleet.tx_power, fleet.max_distance);
  RandomSource rng(202);
  const long n = 1000000;
  long outages = 0;
  for (long i = 0; i < n; ++i) outages += uplink_outcome_at(c, b, b.w_star, rng).delivered ? 0 : 1;
  const double rate = static_cast<double>(outages) / static_cast<double>(n);
  const double elapsed = seconds_since(t0);
  const bool ok = rate >= 0.2 * c.outage && rate <= 5.0 * c.outage && elapsed < 30.0;
  return {ok, fmt("MC outage %.3g at W* = %.4g Hz (eps %.0e, band [%.0e, %.0e], ratio %.2f), %.1f s < 30 s", rate,
                  b.w_star, c.outage, 0.2 * c.outage, 5.0 * c.outage, rate / c.outage, elapsed)};
}

Verdict a3_estimator() {
  Matrix A(2, 2);
  A << 1.0, 0.1, 0.0, 0.98;
  const Vector B = (Vector(2) << 0.0, 0.05).finished();
  const Matrix Q = (Matrix(2, 2) << 1e-4, 0, 0, 2e-4).finished();
  const auto model = make_linear_model(A, B, Q);
  std::vector<SensingAgent> agents;
  for (int k = 0; k < 2; ++k) {
    Matrix h = Matrix::Zero(1, 2);
    h(0, k) = 1.0;
    agents.push_back({k, h, Matrix::Constant(1, 1, k == 0 ? 0.02 : 0.01), 1.0, 0.02});
  }
  const SensorFleet fleet(agents, 2);
  RandomSource sense(31), noise(32);

  Vector truth = (Vector(2) << 0.5, -0.1).finished();
  Belief belief{Vector::Zero(2), Matrix::Identity(2, 2), 0};
  Vector x = belief.mean;
  Matrix p = belief.cov;
  double worst_kf = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double u = std::sin(0.1 * t);
    truth = A * truth + B * u + model.sample_noise(noise);
    belief = predict(belief, u, model);
    x = A * x + B * u;
    p = A * p * A.transpose() + Q;
    std::vector<Observation> obs;
    for (int m = 0; m < 2; ++m) {
      if ((t + m) % 3 != 0) obs.push_back(observe(fleet.agent(m), truth, sense, t));
    }
    const auto batch = stack_observations(fleet, obs);
    belief = fuse(belief, batch);
    if (batch.rows() > 0) {
      const Matrix s = batch.H * p * batch.H.transpose() + batch.noise;
      const Matrix k = p * batch.H.transpose() * s.inverse();
      x = x + k * (batch.obs - batch.H * x);
      p = (Matrix::Identity(2, 2) - k * batch.H) * p;
      p = 0.5 * (p + p.transpose()).eval();
    }
    worst_kf = std::max({worst_kf, (belief.mean - x).cwiseAbs().maxCoeff(), (belief.cov - p).cwiseAbs().maxCoeff()});
  }

  const auto car = make_mountain_car();
  RandomSource pts(33);
  double worst_jac = 0.0;
  const double h = 1e-6;
  for (int i = 0; i < 200; ++i) {
    const Vector s = (Vector(2) << pts.uniform(-1.1, 0.5), pts.uniform(-0.06, 0.06)).finished();
    Matrix fd(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vector up = s, dn = s;
      up(j) += h;
      dn(j) -= h;
      fd.col(j) = (car.interior(up, 0.0) - car.interior(dn, 0.0)) / (2 * h);
    }
    worst_jac = std::max(worst_jac, (jacobian_at(car, s) - fd).cwiseAbs().maxCoeff());
  }
  return {worst_kf <= 1e-9 && worst_jac <= 1e-5,
          fmt("KF max deviation %.2e <= 1e-9 over 100 steps; Jacobian vs FD %.2e <= 1e-5", worst_kf, worst_jac)};
}

Verdict a4_scheduler() {
  RandomSource rng(404);
  const ChannelParams ch = table_channel();
  const int instances = 200;
  int mismatches = 0, cap_violations = 0, nonempty = 0;
  for (int trial = 0; trial < instances; ++trial) {
    const int m = 2 + std::min(4, static_cast<int>(rng.uniform() * 5));
    const int cap = 1 + std::min(2, static_cast<int>(rng.uniform() * 3));
    std::vector<SensingAgent> agents;
    std::vector<oracle::Sensor> sensors;
    for (int i = 0; i < m; ++i) {
      const int k = rng.uniform() < 0.5 ? 0 : 1;
      const double var = rng.uniform(1e-4, 2e-2);
      const double dist = rng.uniform(1.0, 20.0);
      Matrix h = Matrix::Zero(1, 2);
      h(0, k) = 1.0;
      agents.push_back({i, h, Matrix::Constant(1, 1, var), dist, 0.02});
      sensors.push_back({k, var, dist});
    }
    const auto d = Deployment::make(SensorFleet(agents, 2), ch);
    for (int i = 0; i < m; ++i) sensors[static_cast<std::size_t>(i)].reachable = d.reachable(i);
    const Matrix a = (Matrix(2, 2) << rng.normal(), rng.normal(), rng.normal(), rng.normal()).finished() * 0.1;
    const Matrix p = a * a.transpose() + 1e-4 * Matrix::Identity(2, 2);
    const Vector targets = (Vector(2) << rng.uniform(1e-4, 0.01), rng.uniform(1e-4, 0.005)).finished();
    auto aol = AolTracker::make({1 + std::min(2, static_cast<int>(rng.uniform() * 3)),
                                 1 + std::min(2, static_cast<int>(rng.uniform() * 3))});
    aol.ages = {1 + static_cast<int>(rng.uniform() * 5), 1 + static_cast<int>(rng.uniform() * 5)};

    const auto r = plan_schedule(Belief{Vector::Zero(2), p, 0}, UncertaintyTargets{targets}, aol, d, cap);
    const auto expect = oracle::run(p, targets, aol.ages, aol.thresholds, sensors, cap);
    bool same = r.trace.size() == expect.size();
    for (std::size_t i = 0; same && i < expect.size(); ++i) {
      same = r.trace[i].agent == expect[i].agent && r.trace[i].feature == expect[i].feature &&
             (r.trace[i].reason == PickReason::kAol) == expect[i].aol;
    }
    mismatches += same ? 0 : 1;
    const bool within = static_cast<int>(r.selected.size()) <= cap && static_cast<int>(r.trace.size()) <= cap &&
                        r.value_iterations <= cap;
    cap_violations += within ? 0 : 1;
    nonempty += r.selected.empty() ? 0 : 1;
  }
  return {mismatches == 0 && cap_violations == 0,
          fmt("%d instances (%d non-empty): %d trace mismatches, %d |Q|/loop-length > C", instances, nonempty,
              mismatches, cap_violations)};
}

Verdict a5_control() {
  const MountainCarParams params;
  const auto car = make_mountain_car(params, Matrix::Zero(2, 2));
  Vector s = (Vector(2) << -0.5, 0.0).finished();
  int qis = 0;
  while (!reached_goal(params, s) && qis < 999) {
    s = car.update(s, scripted_controller(s, Vector::Zero(2)).force);
    ++qis;
  }
  const bool scripted_ok = reached_goal(params, s) && qis < 200;

  const auto t0 = std::chrono::steady_clock::now();
  RunConfig rc;
  const TrainConfig tc = training_config(rc);
  CoSimEnvironment env(rc);
  const auto result = train(env, tc);
  const auto eval = evaluate(result.agent.policy, env, rc.eval_episodes, rc.seed + 1000000ULL, tc.kappa);
  const double elapsed = seconds_since(t0);
  long wins = std::count_if(eval.begin(), eval.end(), [](const EpisodeStats& e) { return e.reached_goal; });
  const double rate = static_cast<double>(wins) / static_cast<double>(eval.size());
  return {scripted_ok && rate >= 0.8 && elapsed < 900.0,
          fmt("scripted reaches goal in %d QIs (< 200); %d-episode training: %ld/%zu evaluation episodes reach the "
              "goal (>= 80%%), %.0f s (< 900 s)",
              qis, tc.episodes, wins, eval.size(), elapsed)};
}

Verdict a6_schemes() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig rc;
  rc.max_connections = 10;
  std::map<SchemeId, MetricsSummary> m;
  for (auto scheme : all_schemes()) {
    rc.scheme = scheme;
    m[scheme] = monte_carlo(rc, 200, make_controller(rc)).summary;
  }
  const double reverb = m[SchemeId::kAolReverb].mean_total_prbs;
  const double cb = m[SchemeId::kCbGreedy].mean_total_prbs;
  const double eb = m[SchemeId::kEbGreedy].mean_total_prbs;
  const double ratio = m[SchemeId::kTraditional].mrmse / m[SchemeId::kAolReverb].mrmse;
  const double elapsed = seconds_since(t0);
  return {reverb < cb && cb < eb && ratio >= 5.0 && elapsed < 600.0,
          fmt("N=200, C=10: PRBs AoL-REVERB %.0f < CB-Greedy %.0f < EB-Greedy %.0f; MRMSE Traditional/AoL-REVERB "
              "%.2f >= 5; %.1f s",
              reverb, cb, eb, ratio, elapsed)};
}

Verdict a7_failure_sweep() {
  RunConfig rc;
  std::vector<double> f;
  std::string trend;
  for (int c = 1; c <= 30; ++c) {
    rc.max_connections = c;
    f.push_back(monte_carlo(rc, 200, make_controller(rc)).summary.failure_probability);
    trend += fmt("%s%.3f", c == 1 ? "" : " ", f.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < f.size(); ++i) monotone = monotone && f[i] <= f[i - 1] + 0.02;
  const bool ratio_ok = f[0] >= 3.0 * f[9];
  return {monotone && ratio_ok,
          fmt("failure probability C=1..30: [%s]; C=1 %.3f %s 3x C=10 %.3f; monotone within +0.02: %s",
              trend.c_str(), f[0], ratio_ok ? ">=" : "<", f[9], monotone ? "yes" : "no")};
}

Verdict a8_aol_threshold() {
  RunConfig rc;
  rc.aol_thresholds = {1, 1};
  const double tight = monte_carlo(rc, 200, make_controller(rc)).summary.mean_selected;
  rc.aol_thresholds = {10, 10};
  const double loose = monte_carlo(rc, 200, make_controller(rc)).summary.mean_selected;
  return {tight >= 1.2 * loose,
          fmt("mean |Q| at threshold 1: %.3f, at 10: %.3f, ratio %.3f >= 1.2", tight, loose, tight / loose)};
}

Verdict a9_aol_contract() {
  int worst_excess = -1000, episodes_run = 0, skipped = 0;
  for (int c : {2, 10}) {
    RunConfig rc;
    rc.max_connections = c;
    const auto controller = make_controller(rc);
    CoSimEnvironment env(rc);
    int done = 0;
    for (std::uint64_t seed = 9000; done < 50; ++seed) {
      Vector obs = env.reset(seed);
      std::vector<bool> measurable(2, false);
      for (const auto& a : env.deployment().fleet.agents()) {
        for (int k = 0; k < 2; ++k) measurable[static_cast<std::size_t>(k)] = measurable[static_cast<std::size_t>(k)] ||
                                                                             (a.H(0, k) != 0.0 && env.deployment().reachable(a.id));
      }
      if (!measurable[0] || !measurable[1]) {
        ++skipped;
        continue;
      }
      for (;;) {
        const auto step = env.step(controller(obs));
        for (int k = 0; k < 2; ++k) {
          const auto i = static_cast<std::size_t>(k);
          worst_excess = std::max(worst_excess, env.aol().ages[i] - env.aol().thresholds[i]);
        }
        obs = step.observation;
        if (step.terminal || step.truncated) break;
      }
      ++done;
      ++episodes_run;
    }
  }
  return {worst_excess <= 1, fmt("%d episodes at C in {2, 10} (%d fleets redrawn): max age - threshold = %d <= 1",
                                 episodes_run, skipped, worst_excess)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict a10_determinism(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / ("reverb_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "config.json") << R"({"max_steps": 300, "train": {"episodes": 3, "batch_steps": 256, "eval_episodes": 2}})";
  }
  int failures = 0;
  auto sh = [&](const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
    failures += std::system(cmd.c_str()) == 0 ? 0 : 1;
  };
  const std::string cfg = "--config \"" + (root / "config.json").string() + "\" --seed 7";
  for (const char* rep : {"a", "b"}) {
    const fs::path out = root / rep;
    sh("train " + cfg + " --out \"" + (out / "train").string() + "\"");
    sh("run " + cfg + " --out \"" + (out / "run").string() + "\"");
    sh("bench " + cfg + " --episodes 4 --sweep C:1..3 --out \"" + (out / "bench").string() + "\"");
    std::ofstream(root / (std::string("policy_") + rep + ".json"))
        << R"({"max_steps": 300, "controller": {"kind": "policy", "weights": ")"
        << (root / "a" / "train" / "weights.json").string() << R"("}})";
    sh("run --config \"" + (root / (std::string("policy_") + rep + ".json")).string() + "\" --seed 7 --out \"" +
       (out / "policy").string() + "\"");
  }
  int files = 0, csvs = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "a");
    // summary.json echoes the config, including its own output directory.
    if (rel.filename() == "summary.json") continue;
    ++files;
    csvs += rel.extension() == ".csv" ? 1 : 0;
    if (!fs::exists(root / "b" / rel) || slurp(e.path()) != slurp(root / "b" / rel)) ++differ;
  }
  fs::remove_all(root);
  return {failures == 0 && differ == 0 && csvs >= 5,
          fmt("train/run/bench twice with seed 7: %d command failures, %d of %d outputs differ (%d CSVs)", failures,
              differ, files, csvs)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = REVERB_CLI_PATH;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> checks{
      {"A1", a1_lemma},          {"A2", a2_outage},         {"A3", a3_estimator},
      {"A4", a4_scheduler},      {"A5", a5_control},        {"A6", a6_schemes},
      {"A7", a7_failure_sweep},  {"A8", a8_aol_threshold},  {"A9", a9_aol_contract},
      {"A10", [&] { return a10_determinism(cli); }},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, check] : checks) {
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::cout << id << (id.size() < 3 ? "  " : " ") << (v.pass ? "PASS " : "FAIL ") << v.detail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
