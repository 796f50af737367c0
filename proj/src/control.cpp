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

#include "reverb/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace reverb {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix stack_columns(std::span<const Transition> batch, std::span<const std::size_t> idx,
                     Vector Transition::*field) {
  const auto rows = (batch[idx[0]].*field).size();
  Matrix out(rows, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = batch[idx[i]].*field;
  return out;
}

void clip_norm(Vector& g, double max_norm) {
  if (max_norm <= 0) return;
  const double n = g.norm();
  if (n > max_norm) g *= max_norm / n;
}

void require_finite(const Vector& g, const char* what) {
  if (!all_finite(g)) {
    throw TrainingError(std::string("update: non-finite ") + what + " gradient (norm " +
                        std::to_string(g.norm()) + ")");
  }
}

}  // namespace

Normalizer Normalizer::make(Eigen::Index dim, const Vector& offset, const Vector& scale) {
  Normalizer n;
  n.offset = offset.size() ? offset : Vector::Zero(dim);
  n.scale = scale.size() ? scale : Vector::Ones(dim);
  if (n.offset.size() != dim || n.scale.size() != dim) throw InputError("normalizer: dimension mismatch");
  if ((n.scale.array() <= 0.0).any()) throw InputError("normalizer: scales must be > 0");
  return n;
}

Matrix Normalizer::apply(const Matrix& states) const {
  return (states.colwise() - offset).array().colwise() / scale.array();
}

GaussianPolicy::GaussianPolicy(int state_dim, const PolicyConfig& config, RandomSource& rng)
    : eta_max_(config.eta_max), log_std_min_(config.log_std_min), log_std_max_(config.log_std_max) {
  if (!(config.eta_max > 0)) throw InputError("policy: eta_max must be > 0");
  if (!(config.log_std_min < config.log_std_max)) throw InputError("policy: empty log-std range");
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1 + state_dim);
  net_ = Mlp(sizes, rng, 0.01);
  log_std_ = Vector::Constant(1 + state_dim,
                              std::clamp(config.init_log_std, log_std_min_, log_std_max_));
  norm_ = Normalizer::make(state_dim, config.obs_offset, config.obs_scale);
}

Vector GaussianPolicy::mean(const Vector& state) const {
  if (!all_finite(state)) throw InputError("policy: state must be finite");
  return net_.forward(norm_.apply(state)).col(0);
}

Vector GaussianPolicy::batch_log_prob(const Matrix& states, const Matrix& raw, const Vector* weights,
                                      Vector* grad) const {
  Mlp::Tape tape;
  const Matrix mu = net_.forward(norm_.apply(states), grad ? &tape : nullptr);
  const Vector inv_std = (-log_std_).array().exp();
  const Matrix z = (raw - mu).array().colwise() * inv_std.array();
  Vector lp = -0.5 * z.colwise().squaredNorm().transpose();
  lp.array() -= log_std_.sum() + kHalfLog2Pi * static_cast<double>(log_std_.size());
  if (grad) {
    const Vector w = weights ? *weights : Vector::Ones(raw.cols());
    const Matrix dmu = (z.array().colwise() * inv_std.array()).rowwise() * w.transpose().array();
    grad->resize(parameter_count());
    grad->head(net_.parameter_count()) = net_.backward(tape, dmu);
    grad->tail(log_std_.size()) =
        ((z.array().square() - 1.0).rowwise() * w.transpose().array()).rowwise().sum();
  }
  return lp;
}

double GaussianPolicy::log_prob(const Vector& state, const Vector& raw) const {
  return batch_log_prob(state, raw)(0);
}

ActionVector GaussianPolicy::squash(const Vector& raw, double log_prob) const {
  ActionVector a;
  a.raw = raw;
  a.log_prob = log_prob;
  a.force = std::tanh(raw(0));
  a.eta = eta_max_ / (1.0 + (-raw.tail(raw.size() - 1)).array().exp());
  return a;
}

Vector GaussianPolicy::parameters() const {
  Vector p(parameter_count());
  p << net_.parameters(), log_std_;
  return p;
}

void GaussianPolicy::set_parameters(const Vector& flat) {
  if (flat.size() != parameter_count()) throw InputError("policy: parameter vector has the wrong length");
  net_.set_parameters(flat.head(net_.parameter_count()));
  log_std_ = flat.tail(log_std_.size()).cwiseMax(log_std_min_).cwiseMin(log_std_max_);
}

nlohmann::json GaussianPolicy::to_json() const {
  return {{"net", net_.to_json()},
          {"log_std", to_std(log_std_)},
          {"eta_max", eta_max_},
          {"log_std_range", {log_std_min_, log_std_max_}},
          {"obs_offset", to_std(norm_.offset)},
          {"obs_scale", to_std(norm_.scale)}};
}

GaussianPolicy GaussianPolicy::from_json(const nlohmann::json& j) {
  GaussianPolicy p;
  p.net_ = Mlp::from_json(j.at("net"));
  p.log_std_ = from_std(j.at("log_std").get<std::vector<double>>());
  p.eta_max_ = j.at("eta_max").get<double>();
  const auto range = j.at("log_std_range").get<std::vector<double>>();
  if (range.size() != 2) throw InputError("policy: log_std_range must have two entries");
  p.log_std_min_ = range[0];
  p.log_std_max_ = range[1];
  p.norm_ = Normalizer::make(p.net_.input_dim(), from_std(j.at("obs_offset").get<std::vector<double>>()),
                             from_std(j.at("obs_scale").get<std::vector<double>>()));
  if (p.log_std_.size() != p.net_.output_dim()) throw InputError("policy: log_std length mismatch");
  return p;
}

Critic::Critic(int state_dim, const std::vector<int>& hidden, const Normalizer& norm, RandomSource& rng)
    : norm_(norm) {
  std::vector<int> sizes{state_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = Mlp(sizes, rng);
}

double Critic::value(const Vector& state) const { return values(state)(0); }

Vector Critic::values(const Matrix& states) const {
  return net_.forward(norm_.apply(states)).row(0).transpose();
}

Vector Critic::values_and_gradient(const Matrix& states, const Vector& g, Vector& grad) const {
  Mlp::Tape tape;
  const Vector v = net_.forward(norm_.apply(states), &tape).row(0).transpose();
  grad = net_.backward(tape, g.transpose());
  return v;
}

ActionVector act(const GaussianPolicy& policy, const Vector& state, RandomSource& rng) {
  const Vector mu = policy.mean(state);
  const Vector raw = mu + (policy.log_std().array().exp() * rng.normal_vector(mu.size()).array()).matrix();
  return policy.squash(raw, policy.log_prob(state, raw));
}

ActionVector act_mean(const GaussianPolicy& policy, const Vector& state) {
  const Vector mu = policy.mean(state);
  return policy.squash(mu, policy.log_prob(state, mu));
}

double shaped_reward(double r_env, const Vector& eta, double kappa, ShapingMode mode) {
  if (!(kappa >= 0)) throw InputError("shaped_reward: kappa must be >= 0");
  if (kappa == 0.0 || eta.size() == 0) return r_env;
  const double term = kappa * eta.mean();
  return mode == ShapingMode::kBonus ? r_env + term : r_env - term;
}

double environment_reward(double force, bool reached_goal, double goal_bonus) {
  return -0.1 * force * force + (reached_goal ? goal_bonus : 0.0);
}

double td_error(const Critic& critic, const Transition& t, double gamma) {
  const double next = t.terminal ? 0.0 : critic.value(t.next_state);
  return t.reward + gamma * next - critic.value(t.state);
}

void PpoSettings::validate() const {
  if (!(lr_actor > 0) || !(lr_critic > 0)) throw ConfigError("ppo: learning rates must be > 0");
  if (!(clip > 0)) throw ConfigError("ppo: clip must be > 0");
  if (!(gamma > 0) || !(gamma < 1)) throw ConfigError("ppo: gamma must lie in (0, 1)");
  if (epochs < 1 || minibatch < 1) throw ConfigError("ppo: epochs and minibatch must be >= 1");
  if (!(entropy_coef >= 0)) throw ConfigError("ppo: entropy_coef must be >= 0");
}

ActorCritic::ActorCritic(int state_dim, const PolicyConfig& config, const PpoSettings& ppo,
                         RandomSource& rng)
    : policy(state_dim, config, rng),
      critic(state_dim, config.hidden, policy.normalizer(), rng),
      actor_opt(policy.parameter_count(), ppo.lr_actor),
      critic_opt(critic.net().parameter_count(), ppo.lr_critic) {}

UpdateStats update(ActorCritic& agent, std::span<const Transition> batch, const PpoSettings& settings,
                   RandomSource& shuffle_rng) {
  if (batch.empty()) throw InputError("update: empty batch");
  settings.validate();
  const std::size_t n = batch.size();
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});

  const Matrix states = stack_columns(batch, all, &Transition::state);
  const Matrix next_states = stack_columns(batch, all, &Transition::next_state);
  const Vector v_now = agent.critic.values(states);
  const Vector v_next = agent.critic.values(next_states);
  Vector targets(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    targets(e) = batch[i].reward + (batch[i].terminal ? 0.0 : settings.gamma * v_next(e));
  }
  Vector adv = targets - v_now;
  UpdateStats stats;
  stats.mean_advantage = adv.mean();
  if (settings.normalize_advantages && n > 1) {
    const double sd = std::sqrt((adv.array() - adv.mean()).square().mean());
    adv = (adv.array() - adv.mean()) / (sd + 1e-8);
  }
  if (!all_finite(adv)) throw TrainingError("update: non-finite advantages");

  const auto mb = std::min<std::size_t>(n, static_cast<std::size_t>(settings.minibatch));
  long rounds = 0;
  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    std::shuffle(all.begin(), all.end(), shuffle_rng.engine());
    for (std::size_t start = 0; start < n; start += mb) {
      std::span<const std::size_t> idx(all.data() + start, std::min(mb, n - start));
      const auto b = static_cast<Eigen::Index>(idx.size());
      const Matrix s = stack_columns(batch, idx, &Transition::state);
      const Matrix raw = stack_columns(batch, idx, &Transition::raw_action);
      Vector old_lp(b), a(b), y(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto k = idx[static_cast<std::size_t>(i)];
        old_lp(i) = batch[k].log_prob;
        a(i) = adv(static_cast<Eigen::Index>(k));
        y(i) = targets(static_cast<Eigen::Index>(k));
      }

      // Actor: maximize mean min(ρA, clip(ρ)A).
      const Vector lp = agent.policy.batch_log_prob(s, raw);
      const Vector ratio = (lp - old_lp).array().exp();
      Vector w(b);
      double surrogate = 0.0;
      int clipped = 0;
      for (Eigen::Index i = 0; i < b; ++i) {
        const double r = ratio(i);
        const double rc = std::clamp(r, 1.0 - settings.clip, 1.0 + settings.clip);
        surrogate += std::min(r * a(i), rc * a(i));
        const bool inactive = (a(i) > 0 && r > 1.0 + settings.clip) || (a(i) < 0 && r < 1.0 - settings.clip);
        clipped += inactive ? 1 : 0;
        w(i) = inactive ? 0.0 : -r * a(i) / static_cast<double>(b);
      }
      Vector g_actor;
      agent.policy.batch_log_prob(s, raw, &w, &g_actor);
      if (settings.entropy_coef > 0) {
        g_actor.tail(agent.policy.log_std().size()).array() -= settings.entropy_coef;
      }
      require_finite(g_actor, "actor");
      clip_norm(g_actor, settings.max_grad_norm);
      Vector theta = agent.policy.parameters();
      agent.actor_opt.step(theta, g_actor);
      agent.policy.set_parameters(theta);

      // Critic: mean squared one-step TD error against fixed targets.
      Vector g_critic;
      const Vector v = agent.critic.values(s);
      const Vector resid = v - y;
      agent.critic.values_and_gradient(s, 2.0 * resid / static_cast<double>(b), g_critic);
      require_finite(g_critic, "critic");
      clip_norm(g_critic, settings.max_grad_norm);
      Vector omega = agent.critic.parameters();
      agent.critic_opt.step(omega, g_critic);
      agent.critic.set_parameters(omega);

      stats.actor_loss += -surrogate / static_cast<double>(b);
      stats.critic_loss += resid.squaredNorm() / static_cast<double>(b);
      stats.clip_fraction += static_cast<double>(clipped) / static_cast<double>(b);
      stats.approx_kl += (old_lp - lp).mean();
      ++rounds;
    }
  }
  stats.actor_loss /= static_cast<double>(rounds);
  stats.critic_loss /= static_cast<double>(rounds);
  stats.clip_fraction /= static_cast<double>(rounds);
  stats.approx_kl /= static_cast<double>(rounds);
  return stats;
}

void TrainConfig::validate() const {
  if (episodes < 0) throw ConfigError("train: episodes must be >= 0");
  if (batch_steps < 1) throw ConfigError("train: batch_steps must be >= 1");
  if (!(kappa >= 0)) throw ConfigError("train: kappa must be >= 0");
  ppo.validate();
}

TrainResult train(Environment& env, const TrainConfig& config, const TrainProgress& progress) {
  config.validate();
  auto init_rng = make_stream(config.seed, Stream::kPolicy);
  TrainResult result;
  result.agent = ActorCritic(env.state_dim(), config.policy, config.ppo, init_rng);
  auto action_rng = RandomSource(config.seed, 0x1000 + static_cast<std::uint64_t>(Stream::kPolicy));
  auto shuffle_rng = RandomSource(config.seed, 0x2000 + static_cast<std::uint64_t>(Stream::kPolicy));

  std::vector<Transition> buffer;
  buffer.reserve(static_cast<std::size_t>(config.batch_steps));
  for (int ep = 0; ep < config.episodes; ++ep) {
    Vector obs = env.reset(config.seed * 1000003ULL + static_cast<std::uint64_t>(ep));
    EpisodeStats stats;
    stats.episode = ep;
    for (;;) {
      const ActionVector a = act(result.agent.policy, obs, action_rng);
      const auto step = env.step(a);
      Transition t;
      t.state = obs;
      t.raw_action = a.raw;
      t.log_prob = a.log_prob;
      t.reward = shaped_reward(step.env_reward, a.eta, config.kappa, config.shaping);
      t.next_state = step.observation;
      t.terminal = step.terminal;
      stats.shaped_return += t.reward;
      ++stats.length;
      buffer.push_back(std::move(t));
      if (static_cast<int>(buffer.size()) >= config.batch_steps) {
        result.updates.push_back(update(result.agent, buffer, config.ppo, shuffle_rng));
        buffer.clear();
      }
      obs = step.observation;
      if (step.terminal || step.truncated) {
        stats.reached_goal = step.terminal;
        break;
      }
    }
    if (!std::isfinite(stats.shaped_return)) throw TrainingError("train: non-finite episode return");
    result.curve.push_back(stats);
    if (progress) progress(stats);
  }
  return result;
}

std::vector<EpisodeStats> evaluate(const GaussianPolicy& policy, Environment& env, int episodes,
                                   std::uint64_t first_seed, double kappa) {
  std::vector<EpisodeStats> out;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector obs = env.reset(first_seed + static_cast<std::uint64_t>(ep));
    EpisodeStats stats;
    stats.episode = ep;
    for (;;) {
      const ActionVector a = act_mean(policy, obs);
      const auto step = env.step(a);
      stats.shaped_return += shaped_reward(step.env_reward, a.eta, kappa);
      ++stats.length;
      obs = step.observation;
      if (step.terminal || step.truncated) {
        stats.reached_goal = step.terminal;
        break;
      }
    }
    out.push_back(stats);
  }
  return out;
}

ActionVector scripted_controller(const Vector& state, const Vector& eta) {
  if (state.size() < 2 || !all_finite(state)) throw InputError("scripted_controller: need a finite (x, v) state");
  if ((eta.array() < 0.0).any()) throw InputError("scripted_controller: eta must be >= 0");
  ActionVector a;
  a.force = state(1) >= 0.0 ? 1.0 : -1.0;
  a.eta = eta;
  return a;
}

nlohmann::json weights_to_json(const ActorCritic& agent) {
  return {{"version", kWeightsVersion},
          {"policy", agent.policy.to_json()},
          {"critic", agent.critic.net().to_json()}};
}

ActorCritic weights_from_json(const nlohmann::json& j, const PpoSettings& ppo) {
  if (j.at("version").get<int>() != kWeightsVersion) {
    throw ConfigError("weights: unsupported version " + j.at("version").dump());
  }
  ActorCritic agent;
  agent.policy = GaussianPolicy::from_json(j.at("policy"));
  agent.critic = Critic(Mlp::from_json(j.at("critic")), agent.policy.normalizer());
  agent.actor_opt = Adam(agent.policy.parameter_count(), ppo.lr_actor);
  agent.critic_opt = Adam(agent.critic.net().parameter_count(), ppo.lr_critic);
  return agent;
}

}  // namespace reverb
