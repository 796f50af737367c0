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

#include <fstream>
#include <set>

#include "reverb/experiments.hpp"

namespace reverb {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_vector(const json& j, const char* key, Vector& out, const std::string& where) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v, where);
  out = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void RunConfig::validate() const {
  if (episodes < 1) throw ConfigError("config: episodes must be >= 1");
  if (max_connections < 1) throw ConfigError("config: max_connections must be >= 1");
  if (max_steps < 1) throw ConfigError("config: max_steps must be >= 1");
  if (fleet.state_dim != 2) throw ConfigError("config: the mountain-car plant has two features");
  if (aol_thresholds.size() != 2) throw ConfigError("config: aol_threshold needs one entry per feature");
  for (int t : aol_thresholds) {
    if (t < 1) throw ConfigError("config: aol thresholds must be >= 1");
  }
  if (xi_sq.size() != 2 || (xi_sq.array() <= 0.0).any()) throw ConfigError("config: xi_sq must be two positive values");
  if (!(init_variance > 0)) throw ConfigError("config: init_variance must be > 0");
  if (process_noise.size() != 2 || (process_noise.array() < 0.0).any()) {
    throw ConfigError("config: process_noise must be two nonnegative variances");
  }
  if (scripted_eta.size() != 2 || (scripted_eta.array() < 0.0).any()) {
    throw ConfigError("config: scripted eta must be two nonnegative values");
  }
  if (traditional_sensors != 1 && traditional_sensors != 2) throw ConfigError("config: traditional.sensors must be 1 or 2");
  if (eval_episodes < 0) throw ConfigError("config: eval_episodes must be >= 0");
  try {
    plant.validate();
    channel.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  train.validate();
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  check_keys(j, {"scheme", "episodes", "seed", "max_connections", "max_steps", "aol_threshold", "xi_sq",
                 "init_variance", "alpha", "plant", "channel", "fleet", "controller", "traditional",
                 "eb_greedy", "train", "out_dir"},
             "config");
  if (j.contains("scheme")) {
    try {
      c.scheme = parse_scheme(j.at("scheme").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config.scheme: ") + e.what());
    }
  }
  read(j, "episodes", c.episodes, "config");
  read(j, "seed", c.seed, "config");
  read(j, "max_connections", c.max_connections, "config");
  read(j, "max_steps", c.max_steps, "config");
  read(j, "aol_threshold", c.aol_thresholds, "config");
  read_vector(j, "xi_sq", c.xi_sq, "config");
  read(j, "init_variance", c.init_variance, "config");
  read(j, "alpha", c.alpha, "config");
  read(j, "out_dir", c.out_dir, "config");

  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    check_keys(p, {"process_noise", "goal_position"}, "config.plant");
    read_vector(p, "process_noise", c.process_noise, "config.plant");
    read(p, "goal_position", c.plant.goal_position, "config.plant");
  }

  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    check_keys(ch, {"system_gain", "path_loss_exponent", "noise_dbm", "noise_reference_hz", "rician_factor_db",
                    "packet_bits", "max_latency", "outage", "prb_hz", "carrier_hz"},
               "config.channel");
    read(ch, "noise_dbm", c.noise_dbm, "config.channel");
    read(ch, "noise_reference_hz", c.noise_reference_hz, "config.channel");
    const ChannelParams base = c.channel;
    try {
      c.channel = ChannelParams::from_noise_power(c.noise_dbm, c.noise_reference_hz);
    } catch (const InputError& e) {
      throw ConfigError(std::string("config.channel: ") + e.what());
    }
    c.channel.system_gain = base.system_gain;
    c.channel.path_loss_exponent = base.path_loss_exponent;
    c.channel.rician_factor = base.rician_factor;
    c.channel.packet_bits = base.packet_bits;
    c.channel.max_latency = base.max_latency;
    c.channel.outage = base.outage;
    c.channel.prb_hz = base.prb_hz;
    read(ch, "system_gain", c.channel.system_gain, "config.channel");
    read(ch, "path_loss_exponent", c.channel.path_loss_exponent, "config.channel");
    if (ch.contains("rician_factor_db")) {
      double db = 10.0;
      read(ch, "rician_factor_db", db, "config.channel");
      c.channel.rician_factor = std::pow(10.0, db / 10.0);
    }
    read(ch, "packet_bits", c.channel.packet_bits, "config.channel");
    read(ch, "max_latency", c.channel.max_latency, "config.channel");
    read(ch, "outage", c.channel.outage, "config.channel");
    read(ch, "prb_hz", c.channel.prb_hz, "config.channel");
    read(ch, "carrier_hz", c.carrier_hz, "config.channel");
  }

  if (j.contains("fleet")) {
    const auto& f = j.at("fleet");
    check_keys(f, {"agents", "max_distance", "tx_power", "noise_variance"}, "config.fleet");
    read(f, "agents", c.fleet.agents, "config.fleet");
    read(f, "max_distance", c.fleet.max_distance, "config.fleet");
    read(f, "tx_power", c.fleet.tx_power, "config.fleet");
    if (f.contains("noise_variance")) {
      std::vector<std::vector<double>> ranges;
      read(f, "noise_variance", ranges, "config.fleet");
      c.fleet.noise_variance.clear();
      for (const auto& r : ranges) {
        if (r.size() != 2) throw ConfigError("config.fleet.noise_variance: each range needs [lo, hi]");
        c.fleet.noise_variance.push_back({r[0], r[1]});
      }
    }
  }

  if (j.contains("controller")) {
    const auto& ctl = j.at("controller");
    check_keys(ctl, {"kind", "eta", "weights"}, "config.controller");
    std::string kind = "scripted";
    read(ctl, "kind", kind, "config.controller");
    if (kind == "scripted") {
      c.controller = ControllerKind::kScripted;
    } else if (kind == "policy") {
      c.controller = ControllerKind::kPolicy;
    } else {
      throw ConfigError("config.controller.kind: expected 'scripted' or 'policy'");
    }
    read_vector(ctl, "eta", c.scripted_eta, "config.controller");
    read(ctl, "weights", c.weights_path, "config.controller");
  }

  if (j.contains("traditional")) {
    const auto& t = j.at("traditional");
    check_keys(t, {"sensors"}, "config.traditional");
    read(t, "sensors", c.traditional_sensors, "config.traditional");
  }

  if (j.contains("eb_greedy")) {
    const auto& e = j.at("eb_greedy");
    check_keys(e, {"ranking"}, "config.eb_greedy");
    std::string ranking = "normalized";
    read(e, "ranking", ranking, "config.eb_greedy");
    if (ranking == "normalized") {
      c.eb_ranking = EbRanking::kNormalized;
    } else if (ranking == "raw") {
      c.eb_ranking = EbRanking::kRaw;
    } else {
      throw ConfigError("config.eb_greedy.ranking: expected 'normalized' or 'raw'");
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"episodes", "batch_steps", "kappa", "shaping", "eval_episodes", "hidden", "eta_max",
                   "init_log_std", "log_std_min", "log_std_max", "lr_actor", "lr_critic", "clip", "gamma", "epochs", "minibatch",
                   "entropy_coef", "normalize_advantages", "max_grad_norm"},
               "config.train");
    auto& tr = c.train;
    read(t, "episodes", tr.episodes, "config.train");
    read(t, "batch_steps", tr.batch_steps, "config.train");
    read(t, "kappa", tr.kappa, "config.train");
    std::string shaping = "bonus";
    read(t, "shaping", shaping, "config.train");
    if (shaping == "bonus") {
      tr.shaping = ShapingMode::kBonus;
    } else if (shaping == "cost") {
      tr.shaping = ShapingMode::kCost;
    } else {
      throw ConfigError("config.train.shaping: expected 'bonus' or 'cost'");
    }
    read(t, "eval_episodes", c.eval_episodes, "config.train");
    read(t, "hidden", tr.policy.hidden, "config.train");
    read(t, "eta_max", tr.policy.eta_max, "config.train");
    read(t, "init_log_std", tr.policy.init_log_std, "config.train");
    read(t, "log_std_min", tr.policy.log_std_min, "config.train");
    read(t, "log_std_max", tr.policy.log_std_max, "config.train");
    read(t, "lr_actor", tr.ppo.lr_actor, "config.train");
    read(t, "lr_critic", tr.ppo.lr_critic, "config.train");
    read(t, "clip", tr.ppo.clip, "config.train");
    read(t, "gamma", tr.ppo.gamma, "config.train");
    read(t, "epochs", tr.ppo.epochs, "config.train");
    read(t, "minibatch", tr.ppo.minibatch, "config.train");
    read(t, "entropy_coef", tr.ppo.entropy_coef, "config.train");
    read(t, "normalize_advantages", tr.ppo.normalize_advantages, "config.train");
    read(t, "max_grad_norm", tr.ppo.max_grad_norm, "config.train");
  }
  c.train.seed = c.seed;
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  std::vector<std::vector<double>> ranges;
  for (const auto& r : c.fleet.noise_variance) ranges.push_back({r.lo, r.hi});
  const auto& tr = c.train;
  return {
      {"scheme", to_string(c.scheme)},
      {"episodes", c.episodes},
      {"seed", c.seed},
      {"max_connections", c.max_connections},
      {"max_steps", c.max_steps},
      {"aol_threshold", c.aol_thresholds},
      {"xi_sq", to_std(c.xi_sq)},
      {"init_variance", c.init_variance},
      {"alpha", c.alpha},
      {"out_dir", c.out_dir},
      {"plant", {{"process_noise", to_std(c.process_noise)}, {"goal_position", c.plant.goal_position}}},
      {"channel",
       {{"system_gain", c.channel.system_gain},
        {"path_loss_exponent", c.channel.path_loss_exponent},
        {"noise_dbm", c.noise_dbm},
        {"noise_reference_hz", c.noise_reference_hz},
        {"rician_factor_db", 10.0 * std::log10(c.channel.rician_factor)},
        {"packet_bits", c.channel.packet_bits},
        {"max_latency", c.channel.max_latency},
        {"outage", c.channel.outage},
        {"prb_hz", c.channel.prb_hz},
        {"carrier_hz", c.carrier_hz}}},
      {"fleet",
       {{"agents", c.fleet.agents},
        {"max_distance", c.fleet.max_distance},
        {"tx_power", c.fleet.tx_power},
        {"noise_variance", ranges}}},
      {"controller",
       {{"kind", c.controller == ControllerKind::kScripted ? "scripted" : "policy"},
        {"eta", to_std(c.scripted_eta)},
        {"weights", c.weights_path}}},
      {"traditional", {{"sensors", c.traditional_sensors}}},
      {"eb_greedy", {{"ranking", c.eb_ranking == EbRanking::kRaw ? "raw" : "normalized"}}},
      {"train",
       {{"episodes", tr.episodes},
        {"batch_steps", tr.batch_steps},
        {"kappa", tr.kappa},
        {"shaping", tr.shaping == ShapingMode::kBonus ? "bonus" : "cost"},
        {"eval_episodes", c.eval_episodes},
        {"hidden", tr.policy.hidden},
        {"eta_max", tr.policy.eta_max},
        {"init_log_std", tr.policy.init_log_std},
        {"log_std_min", tr.policy.log_std_min},
        {"log_std_max", tr.policy.log_std_max},
        {"lr_actor", tr.ppo.lr_actor},
        {"lr_critic", tr.ppo.lr_critic},
        {"clip", tr.ppo.clip},
        {"gamma", tr.ppo.gamma},
        {"epochs", tr.ppo.epochs},
        {"minibatch", tr.ppo.minibatch},
        {"entropy_coef", tr.ppo.entropy_coef},
        {"normalize_advantages", tr.ppo.normalize_advantages},
        {"max_grad_norm", tr.ppo.max_grad_norm}}},
  };
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace reverb
