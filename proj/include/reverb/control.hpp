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
#include <span>
#include <vector>

#include <json.hpp>

#include "reverb/core.hpp"
#include "reverb/nn.hpp"
#include "reverb/random.hpp"

namespace reverb {

/// Control force plus per-feature accuracy requests η.
struct ActionVector {
  double force = 0.0;
  Vector eta;
  Vector raw;             // pre-squash Gaussian sample, (1 + K)
  double log_prob = 0.0;  // log density of `raw`
};

struct PolicyConfig {
  std::vector<int> hidden{64, 64};
  double eta_max = 1e4;
  // A floor on the exploration noise keeps the sparse goal reachable while
  // the action penalty pulls the force toward zero.
  double init_log_std = 1.0;
  double log_std_min = 0.5;
  double log_std_max = 2.0;
  /// Fixed affine input normalization (s - offset) / scale; empty = identity.
  Vector obs_offset;
  Vector obs_scale;
};

/// Input normalization shared by actor and critic.
struct Normalizer {
  Vector offset;
  Vector scale;

  static Normalizer make(Eigen::Index dim, const Vector& offset, const Vector& scale);
  Matrix apply(const Matrix& states) const;
};

/// Diagonal Gaussian over the raw action; force = tanh(raw_0) and
/// η_k = η_max · sigmoid(raw_{1+k}). Log-std is state independent.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, const PolicyConfig& config, RandomSource& rng);

  int state_dim() const { return net_.input_dim(); }
  int action_dim() const { return net_.output_dim(); }
  double eta_max() const { return eta_max_; }
  const Mlp& net() const { return net_; }
  const Vector& log_std() const { return log_std_; }
  const Normalizer& normalizer() const { return norm_; }

  Vector mean(const Vector& state) const;
  double log_prob(const Vector& state, const Vector& raw) const;
  ActionVector squash(const Vector& raw, double log_prob) const;

  /// Network parameters followed by log-std.
  Vector parameters() const;
  void set_parameters(const Vector& flat);
  Eigen::Index parameter_count() const { return net_.parameter_count() + log_std_.size(); }

  nlohmann::json to_json() const;
  static GaussianPolicy from_json(const nlohmann::json& j);

  /// Per-sample log densities of `raw` (columns) under the policy at `states`,
  /// and optionally the gradient of Σ_i w_i log π(raw_i | s_i).
  Vector batch_log_prob(const Matrix& states, const Matrix& raw, const Vector* weights = nullptr,
                        Vector* grad = nullptr) const;

 private:
  Mlp net_;
  Vector log_std_;
  double eta_max_ = 1e4;
  double log_std_min_ = -5.0;
  double log_std_max_ = 2.0;
  Normalizer norm_;
};

class Critic {
 public:
  Critic() = default;
  Critic(int state_dim, const std::vector<int>& hidden, const Normalizer& norm, RandomSource& rng);
  Critic(Mlp net, Normalizer norm) : net_(std::move(net)), norm_(std::move(norm)) {}

  double value(const Vector& state) const;
  Vector values(const Matrix& states) const;
  /// Values and the gradient of Σ_i g_i V(s_i).
  Vector values_and_gradient(const Matrix& states, const Vector& g, Vector& grad) const;

  const Mlp& net() const { return net_; }
  Vector parameters() const { return net_.parameters(); }
  void set_parameters(const Vector& flat) { net_.set_parameters(flat); }
  const Normalizer& normalizer() const { return norm_; }

 private:
  Mlp net_;
  Normalizer norm_;
};

ActionVector act(const GaussianPolicy& policy, const Vector& state, RandomSource& rng);
/// Deterministic action at the Gaussian mean.
ActionVector act_mean(const GaussianPolicy& policy, const Vector& state);

enum class ShapingMode {
  kBonus,  // r + κ·mean(η)
  kCost,   // r - κ·mean(η)
};

double shaped_reward(double r_env, const Vector& eta, double kappa, ShapingMode mode = ShapingMode::kBonus);

/// Per-QI environment reward: -0.1·a² plus the termination bonus on success.
double environment_reward(double force, bool reached_goal, double goal_bonus = 100.0);

struct Transition {
  Vector state;
  Vector raw_action;
  double log_prob = 0.0;
  double reward = 0.0;  // shaped
  Vector next_state;
  bool terminal = false;  // goal reached; truncation is not terminal
};

/// r + γ·V(s') - V(s), with no bootstrap on terminal transitions.
double td_error(const Critic& critic, const Transition& t, double gamma);

struct PpoSettings {
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  double clip = 0.2;
  double gamma = 0.99;
  int epochs = 10;
  int minibatch = 256;
  double entropy_coef = 0.0;
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;  // <= 0 disables clipping

  void validate() const;
};

struct ActorCritic {
  GaussianPolicy policy;
  Critic critic;
  Adam actor_opt;
  Adam critic_opt;

  ActorCritic() = default;
  ActorCritic(int state_dim, const PolicyConfig& config, const PpoSettings& ppo, RandomSource& rng);
};

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_advantage = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// One PPO round on a batch: advantages are one-step TD errors under the
/// pre-update critic; the critic regresses onto fixed one-step targets.
/// Throws TrainingError on non-finite gradients.
UpdateStats update(ActorCritic& agent, std::span<const Transition> batch, const PpoSettings& settings,
                   RandomSource& shuffle_rng);

/// The closed loop the agent acts in. Observations are the DT belief mean.
class Environment {
 public:
  struct StepResult {
    Vector observation;
    double env_reward = 0.0;  // before η shaping
    bool terminal = false;
    bool truncated = false;
  };

  virtual ~Environment() = default;
  virtual int state_dim() const = 0;
  virtual Vector reset(std::uint64_t episode_seed) = 0;
  virtual StepResult step(const ActionVector& action) = 0;
};

struct TrainConfig {
  int episodes = 500;
  int batch_steps = 4096;  // transitions collected between updates
  double kappa = 5e-6;
  ShapingMode shaping = ShapingMode::kBonus;
  PolicyConfig policy;
  PpoSettings ppo;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpisodeStats {
  int episode = 0;
  double shaped_return = 0.0;
  int length = 0;
  bool reached_goal = false;
};

struct TrainResult {
  ActorCritic agent;
  std::vector<EpisodeStats> curve;
  std::vector<UpdateStats> updates;
};

using TrainProgress = std::function<void(const EpisodeStats&)>;

TrainResult train(Environment& env, const TrainConfig& config, const TrainProgress& progress = {});

/// Runs `episodes` deterministic (mean-action) episodes; returns per-episode stats.
std::vector<EpisodeStats> evaluate(const GaussianPolicy& policy, Environment& env, int episodes,
                                   std::uint64_t first_seed, double kappa = 0.0);

/// Energy-pumping baseline: force = sign(v) (+1 at v = 0), η constant.
ActionVector scripted_controller(const Vector& state, const Vector& eta);

/// Versioned weight file (actor + critic).
nlohmann::json weights_to_json(const ActorCritic& agent);
ActorCritic weights_from_json(const nlohmann::json& j, const PpoSettings& ppo);

inline constexpr int kWeightsVersion = 1;

}  // namespace reverb
