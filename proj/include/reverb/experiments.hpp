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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reverb/aol.hpp"
#include "reverb/channel.hpp"
#include "reverb/control.hpp"
#include "reverb/dynamics.hpp"
#include "reverb/estimator.hpp"
#include "reverb/scheduler.hpp"
#include "reverb/sensing.hpp"

namespace reverb {

enum class SchemeId { kAolReverb, kPerfect, kCbGreedy, kEbGreedy, kTraditional };

std::string to_string(SchemeId s);
/// Accepts the display names (e.g. "AoL-REVERB", "CB-Greedy"); throws InputError otherwise.
SchemeId parse_scheme(const std::string& name);
const std::vector<SchemeId>& all_schemes();

enum class ControllerKind { kScripted, kPolicy };
enum class EbRanking { kNormalized, kRaw };

struct RunConfig {
  SchemeId scheme = SchemeId::kAolReverb;
  int episodes = 200;
  std::uint64_t seed = 1;
  int max_connections = 10;
  int max_steps = 999;
  std::vector<int> aol_thresholds{5, 5};
  Vector xi_sq = (Vector(2) << 0.01, 0.002).finished();
  double init_variance = 1e-2;
  double alpha = 0.5;            // objective weight; recorded, not used by the heuristic
  double carrier_hz = 2.4e9;     // recorded only

  MountainCarParams plant;
  Vector process_noise = Vector::Constant(2, 1e-6);

  double noise_dbm = kDefaultNoiseDbm;
  double noise_reference_hz = kDefaultNoiseReferenceHz;
  ChannelParams channel = ChannelParams::from_noise_power(kDefaultNoiseDbm, kDefaultNoiseReferenceHz);
  FleetConfig fleet;

  ControllerKind controller = ControllerKind::kScripted;
  Vector scripted_eta = (Vector(2) << 3500.0, 1e4).finished();
  std::string weights_path;

  int traditional_sensors = 2;
  EbRanking eb_ranking = EbRanking::kNormalized;

  TrainConfig train;
  int eval_episodes = 100;
  std::string out_dir = "out";

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Strict loader: unknown keys anywhere raise ConfigError; missing keys keep defaults.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::string& path);

/// One query interval as logged.
struct QiRow {
  int qi = 0;
  Vector true_state;
  Vector est_mean;
  Vector cov_diag;
  Vector target;
  std::vector<int> selected;
  std::vector<int> delivered;
  int prbs = 0;
  std::vector<int> aol;
  double force = 0.0;
  Vector eta;
  double reward = 0.0;
  bool failure = false;
};

struct EpisodeRecord {
  SchemeId scheme = SchemeId::kAolReverb;
  std::uint64_t seed = 0;
  std::vector<QiRow> rows;
  bool reached_goal = false;

  int qis() const { return static_cast<int>(rows.size()); }
  long total_prbs() const;
  int failures() const;
};

/// Frozen column layout for per-QI CSV files.
std::vector<std::string> csv_header(int state_dim);
void write_episode_csv(std::ostream& os, const EpisodeRecord& record);
/// Inverse of write_episode_csv; the scheme/seed come from the rows.
EpisodeRecord read_episode_csv(std::istream& is);

/// The co-simulation loop for one scheme. Observations handed to the agent
/// are the DT's belief mean after scheduling and fusion.
class CoSimEnvironment : public Environment {
 public:
  explicit CoSimEnvironment(RunConfig config);

  int state_dim() const override { return 2; }
  Vector reset(std::uint64_t episode_seed) override;
  StepResult step(const ActionVector& action) override;

  const QiRow& last_row() const { return last_; }
  const Belief& belief() const { return belief_; }
  const Vector& true_state() const { return state_; }
  const AolTracker& aol() const { return aol_; }
  const Deployment& deployment() const { return *deployment_; }
  const RunConfig& config() const { return config_; }
  const DynamicsModel& model() const { return model_; }

 private:
  struct Update {
    std::vector<int> selected;
    std::vector<int> delivered;
    std::vector<LinkBudget> budgets;
  };

  Update run_scheme(const UncertaintyTargets& targets);
  Update fuse_selection(std::vector<int> ids);
  Update traditional_update();

  RunConfig config_;
  DynamicsModel model_;
  std::optional<Deployment> deployment_;
  Vector state_;
  Belief belief_;
  AolTracker aol_;
  Vector last_eta_;
  int qi_ = 0;
  QiRow last_;
  std::vector<int> traditional_ids_;
  Vector traditional_var_;
  RandomSource process_rng_, sensor_rng_, fading_rng_;
};

/// Training settings with the policy input normalized to the plant's box.
TrainConfig training_config(const RunConfig& config);

using Controller = std::function<ActionVector(const Vector& belief_mean)>;

/// Scripted or (deterministic) trained controller as configured.
Controller make_controller(const RunConfig& config);

EpisodeRecord run_episode(const RunConfig& config, const Controller& controller, std::uint64_t episode_seed);

struct Cdf {
  std::vector<double> values;
  std::vector<double> probabilities;
};

Cdf empirical_cdf(std::vector<double> samples);

struct MetricsSummary {
  SchemeId scheme = SchemeId::kAolReverb;
  int episodes = 0;
  double goal_rate = 0.0;
  double mean_qis = 0.0;
  double mean_qis_to_goal = 0.0;  // over successful episodes; NaN when none
  double mean_total_prbs = 0.0;
  double mean_prbs_per_qi = 0.0;
  double mrmse = 0.0;
  double mrmse_ci95 = 0.0;
  double failure_probability = 0.0;
  double mean_selected = 0.0;
  std::vector<std::map<int, long>> aol_histograms;
  Cdf prb_cdf;       // per-episode total PRBs
  Cdf selected_cdf;  // per-QI |Q_t|

  nlohmann::json to_json() const;
};

MetricsSummary compute_metrics(const std::vector<EpisodeRecord>& records);

struct MonteCarloResult {
  MetricsSummary summary;
  std::vector<EpisodeRecord> records;
};

/// N episodes with seeds base + i.
MonteCarloResult monte_carlo(const RunConfig& config, int episodes, const Controller& controller,
                             bool keep_records = false);

/// CSV header and row for a summary (used by `bench`).
std::string summary_csv_header();
std::string summary_csv_row(const MetricsSummary& m, const std::string& sweep_key, double sweep_value);

}  // namespace reverb
