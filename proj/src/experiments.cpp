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

#include "reverb/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace reverb {

namespace {

const std::vector<std::pair<SchemeId, std::string>>& scheme_names() {
  static const std::vector<std::pair<SchemeId, std::string>> names{
      {SchemeId::kAolReverb, "AoL-REVERB"},
      {SchemeId::kPerfect, "Perfect"},
      {SchemeId::kCbGreedy, "CB-Greedy"},
      {SchemeId::kEbGreedy, "EB-Greedy"},
      {SchemeId::kTraditional, "Traditional"},
  };
  return names;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join_ids(const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(ids[i]);
  }
  return out;
}

std::vector<int> split_ids(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ';')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw InputError("csv: malformed number '" + s + "'");
  return v;
}

int feature_of(const SensingAgent& agent) {
  auto k = agent.selected_feature();
  if (!k) throw ConfigError("experiments: sensors must observe a single feature");
  return *k;
}

}  // namespace

std::string to_string(SchemeId s) {
  for (const auto& [id, name] : scheme_names()) {
    if (id == s) return name;
  }
  throw InputError("unknown scheme id");
}

SchemeId parse_scheme(const std::string& name) {
  for (const auto& [id, n] : scheme_names()) {
    if (n == name) return id;
  }
  throw InputError("unknown scheme '" + name + "' (expected AoL-REVERB, Perfect, CB-Greedy, EB-Greedy or Traditional)");
}

const std::vector<SchemeId>& all_schemes() {
  static const std::vector<SchemeId> ids{SchemeId::kAolReverb, SchemeId::kPerfect, SchemeId::kCbGreedy,
                                         SchemeId::kEbGreedy, SchemeId::kTraditional};
  return ids;
}

long EpisodeRecord::total_prbs() const {
  return std::accumulate(rows.begin(), rows.end(), 0L, [](long acc, const QiRow& r) { return acc + r.prbs; });
}

int EpisodeRecord::failures() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const QiRow& r) { return r.failure; }));
}

// ---------------------------------------------------------------------------
// Co-simulation

CoSimEnvironment::CoSimEnvironment(RunConfig config)
    : config_(std::move(config)),
      model_(make_mountain_car(config_.plant, config_.process_noise.asDiagonal())) {
  config_.validate();
}

Vector CoSimEnvironment::reset(std::uint64_t episode_seed) {
  auto fleet_rng = make_stream(episode_seed, Stream::kFleet);
  deployment_ = Deployment::make(generate_fleet(config_.fleet, fleet_rng), config_.channel);

  auto init_rng = make_stream(episode_seed, Stream::kInitialState);
  state_ = Vector::Zero(2);
  state_(0) = init_rng.uniform(config_.plant.start_position.lo, config_.plant.start_position.hi);

  auto belief_rng = make_stream(episode_seed, Stream::kBeliefInit);
  if (config_.scheme == SchemeId::kPerfect) {
    belief_ = Belief{state_, Matrix::Zero(2, 2), 0};
  } else {
    belief_ = initial_belief(state_, config_.init_variance, belief_rng);
  }
  aol_ = AolTracker::make(config_.aol_thresholds);
  last_eta_ = Vector::Zero(2);
  qi_ = 0;
  last_ = QiRow{};

  process_rng_ = make_stream(episode_seed, Stream::kProcessNoise);
  sensor_rng_ = make_stream(episode_seed, Stream::kSensorNoise);
  fading_rng_ = make_stream(episode_seed, Stream::kFading);

  traditional_ids_.clear();
  traditional_var_ = Vector::Constant(2, config_.init_variance);
  if (config_.scheme == SchemeId::kTraditional) {
    for (int k = 0; k < 2; ++k) {
      for (int id : deployment_->fleet.measuring(k)) {
        if (deployment_->reachable(id)) {
          traditional_ids_.push_back(id);
          break;
        }
      }
    }
  }
  return belief_.mean;
}

CoSimEnvironment::Update CoSimEnvironment::fuse_selection(std::vector<int> ids) {
  ScheduleResult plan;
  plan.selected = std::move(ids);
  plan.budgets = budgets_for(*deployment_, plan.selected);
  auto ex = execute_schedule(plan, belief_, state_, *deployment_, aol_, sensor_rng_, fading_rng_);
  belief_ = std::move(ex.posterior);
  aol_ = std::move(ex.aol);
  Update u;
  for (std::size_t i = 0; i < plan.selected.size(); ++i) {
    if (ex.delivered[i]) u.delivered.push_back(plan.selected[i]);
  }
  u.selected = std::move(plan.selected);
  u.budgets = std::move(plan.budgets);
  return u;
}

CoSimEnvironment::Update CoSimEnvironment::traditional_update() {
  std::vector<int> ids = traditional_ids_;
  if (config_.traditional_sensors == 1 && ids.size() == 2) {
    ids = {ids[static_cast<std::size_t>(qi_ % 2)]};
  }
  Update u;
  u.selected = ids;
  u.budgets = budgets_for(*deployment_, ids);
  std::vector<int> closed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& agent = deployment_->fleet.agent(ids[i]);
    const auto obs = observe(agent, state_, sensor_rng_, qi_);
    if (!uplink_outcome(config_.channel, u.budgets[i], fading_rng_).delivered) continue;
    const int k = feature_of(agent);
    belief_.mean(k) = obs.value(0);
    traditional_var_(k) = agent.noise_variance();
    u.delivered.push_back(ids[i]);
    closed.push_back(k);
  }
  belief_.cov = traditional_var_.asDiagonal();
  aol_ = close_loop(std::move(aol_), closed);
  return u;
}

CoSimEnvironment::Update CoSimEnvironment::run_scheme(const UncertaintyTargets& targets) {
  const auto cap = static_cast<std::size_t>(config_.max_connections);
  AvailableSet available(*deployment_);
  std::vector<int> pool = available.ids();
  switch (config_.scheme) {
    case SchemeId::kAolReverb: {
      auto out = schedule(belief_, targets, aol_, *deployment_, config_.max_connections, state_, sensor_rng_,
                          fading_rng_);
      belief_ = std::move(out.execution.posterior);
      aol_ = std::move(out.execution.aol);
      Update u;
      for (std::size_t i = 0; i < out.result.selected.size(); ++i) {
        if (out.execution.delivered[i]) u.delivered.push_back(out.result.selected[i]);
      }
      u.selected = std::move(out.result.selected);
      u.budgets = std::move(out.result.budgets);
      return u;
    }
    case SchemeId::kCbGreedy: {
      const auto& fleet = deployment_->fleet;
      std::stable_sort(pool.begin(), pool.end(),
                       [&](int a, int b) { return fleet.agent(a).distance < fleet.agent(b).distance; });
      pool.resize(std::min(cap, pool.size()));
      return fuse_selection(std::move(pool));
    }
    case SchemeId::kEbGreedy: {
      const auto& fleet = deployment_->fleet;
      auto score = [&](int id) {
        const auto& a = fleet.agent(id);
        const double v = a.noise_variance();
        return config_.eb_ranking == EbRanking::kRaw ? v : v / config_.xi_sq(feature_of(a));
      };
      std::stable_sort(pool.begin(), pool.end(), [&](int a, int b) { return score(a) < score(b); });
      pool.resize(std::min(cap, pool.size()));
      return fuse_selection(std::move(pool));
    }
    case SchemeId::kTraditional:
      return traditional_update();
    case SchemeId::kPerfect:
      break;
  }
  return {};
}

Environment::StepResult CoSimEnvironment::step(const ActionVector& action) {
  if (!deployment_) throw InputError("cosim: step() before reset()");
  if (action.eta.size() != 2) throw InputError("cosim: eta must have one entry per feature");
  const double force = action.force;
  state_ = reverb::step(model_, state_, force, process_rng_);
  ++qi_;

  const UncertaintyTargets targets = compute_targets(config_.xi_sq, last_eta_);
  Update u;
  if (config_.scheme == SchemeId::kPerfect) {
    belief_ = Belief{state_, Matrix::Zero(2, 2), qi_};
    aol_ = close_loop(tick(std::move(aol_)), std::vector<int>{0, 1});
  } else {
    if (config_.scheme != SchemeId::kTraditional) {
      belief_ = predict(belief_, force, model_);
    } else {
      belief_.qi = qi_;
    }
    aol_ = tick(std::move(aol_));
    u = run_scheme(targets);
  }
  last_eta_ = action.eta;

  const bool goal = reached_goal(config_.plant, state_);
  QiRow row;
  row.qi = qi_;
  row.true_state = state_;
  row.est_mean = belief_.mean;
  row.cov_diag = belief_.cov.diagonal();
  row.target = targets.variance;
  row.selected = std::move(u.selected);
  row.delivered = std::move(u.delivered);
  for (const auto& b : u.budgets) row.prbs += b.prbs;
  row.aol = aol_.ages;
  row.force = force;
  row.eta = action.eta;
  row.reward = environment_reward(force, goal);
  row.failure = !meets_targets(belief_.cov, targets).ok;
  last_ = std::move(row);

  StepResult r;
  r.observation = belief_.mean;
  r.env_reward = last_.reward;
  r.terminal = goal;
  r.truncated = !goal && qi_ >= config_.max_steps;
  return r;
}

TrainConfig training_config(const RunConfig& config) {
  TrainConfig t = config.train;
  const auto& p = config.plant;
  t.policy.obs_offset = Vector(2);
  t.policy.obs_offset << 0.5 * (p.position.lo + p.position.hi), 0.5 * (p.velocity.lo + p.velocity.hi);
  t.policy.obs_scale = Vector(2);
  t.policy.obs_scale << 0.5 * (p.position.hi - p.position.lo), 0.5 * (p.velocity.hi - p.velocity.lo);
  t.seed = config.seed;
  return t;
}

Controller make_controller(const RunConfig& config) {
  if (config.controller == ControllerKind::kScripted) {
    const Vector eta = config.scripted_eta;
    return [eta](const Vector& s) { return scripted_controller(s, eta); };
  }
  if (config.weights_path.empty()) throw ConfigError("controller: policy controller needs a weights path");
  std::ifstream in(config.weights_path);
  if (!in) throw ConfigError("controller: cannot open weights file " + config.weights_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("controller: malformed weights file: ") + e.what());
  }
  auto policy = std::make_shared<GaussianPolicy>(weights_from_json(j, config.train.ppo).policy);
  return [policy](const Vector& s) { return act_mean(*policy, s); };
}

EpisodeRecord run_episode(const RunConfig& config, const Controller& controller, std::uint64_t episode_seed) {
  CoSimEnvironment env(config);
  EpisodeRecord rec;
  rec.scheme = config.scheme;
  rec.seed = episode_seed;
  Vector obs = env.reset(episode_seed);
  for (;;) {
    const auto step = env.step(controller(obs));
    rec.rows.push_back(env.last_row());
    obs = step.observation;
    if (step.terminal || step.truncated) {
      rec.reached_goal = step.terminal;
      break;
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> csv_header(int state_dim) {
  std::vector<std::string> h{"scheme", "seed", "qi"};
  for (const char* group : {"true", "est", "var", "target", "aol", "eta"}) {
    for (int k = 0; k < state_dim; ++k) h.push_back(std::string(group) + "_" + std::to_string(k));
  }
  for (const char* c : {"force", "reward", "prbs", "n_selected", "selected", "delivered", "failure", "goal"}) {
    h.emplace_back(c);
  }
  return h;
}

void write_episode_csv(std::ostream& os, const EpisodeRecord& record) {
  const int k = record.rows.empty() ? 2 : static_cast<int>(record.rows.front().true_state.size());
  const auto header = csv_header(k);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (std::size_t r = 0; r < record.rows.size(); ++r) {
    const auto& row = record.rows[r];
    const bool last = r + 1 == record.rows.size();
    os << to_string(record.scheme) << ',' << record.seed << ',' << row.qi;
    for (const Vector* v : {&row.true_state, &row.est_mean, &row.cov_diag, &row.target}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) os << ',' << fmt((*v)(i));
    }
    for (int a : row.aol) os << ',' << a;
    for (Eigen::Index i = 0; i < row.eta.size(); ++i) os << ',' << fmt(row.eta(i));
    os << ',' << fmt(row.force) << ',' << fmt(row.reward) << ',' << row.prbs << ',' << row.selected.size() << ','
       << join_ids(row.selected) << ',' << join_ids(row.delivered) << ',' << (row.failure ? 1 : 0) << ','
       << ((last && record.reached_goal) ? 1 : 0) << '\n';
  }
}

EpisodeRecord read_episode_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("csv: missing header");
  const auto header = split_csv(line);
  const auto fixed = csv_header(0).size();
  if (header.size() < fixed || (header.size() - fixed) % 6 != 0) throw InputError("csv: unexpected header");
  const int k = static_cast<int>((header.size() - fixed) / 6);
  if (header != csv_header(k)) throw InputError("csv: header does not match the frozen layout");

  EpisodeRecord rec;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw InputError("csv: row has " + std::to_string(f.size()) + " fields");
    std::size_t c = 0;
    const auto scheme = parse_scheme(f[c++]);
    const auto seed = std::stoull(f[c++]);
    if (first) {
      rec.scheme = scheme;
      rec.seed = seed;
      first = false;
    }
    QiRow row;
    row.qi = std::stoi(f[c++]);
    for (Vector* v : {&row.true_state, &row.est_mean, &row.cov_diag, &row.target}) {
      v->resize(k);
      for (int i = 0; i < k; ++i) (*v)(i) = parse_double(f[c++]);
    }
    for (int i = 0; i < k; ++i) row.aol.push_back(std::stoi(f[c++]));
    row.eta.resize(k);
    for (int i = 0; i < k; ++i) row.eta(i) = parse_double(f[c++]);
    row.force = parse_double(f[c++]);
    row.reward = parse_double(f[c++]);
    row.prbs = std::stoi(f[c++]);
    const auto n_selected = static_cast<std::size_t>(std::stoul(f[c++]));
    row.selected = split_ids(f[c++]);
    row.delivered = split_ids(f[c++]);
    if (row.selected.size() != n_selected) throw InputError("csv: n_selected does not match selected ids");
    row.failure = f[c++] == "1";
    rec.reached_goal = f[c++] == "1";
    rec.rows.push_back(std::move(row));
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Metrics

Cdf empirical_cdf(std::vector<double> samples) {
  Cdf cdf;
  if (samples.empty()) return cdf;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i + 1 < samples.size() && samples[i + 1] == samples[i]) continue;
    cdf.values.push_back(samples[i]);
    cdf.probabilities.push_back(static_cast<double>(i + 1) / n);
  }
  return cdf;
}

MetricsSummary compute_metrics(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw InputError("compute_metrics: no records");
  MetricsSummary m;
  m.scheme = records.front().scheme;
  m.episodes = static_cast<int>(records.size());
  const double n = static_cast<double>(records.size());

  std::vector<double> ep_rmse, ep_prbs, per_qi_selected;
  long qis = 0, failures = 0, goal_qis = 0, goals = 0, prbs = 0;
  for (const auto& rec : records) {
    if (rec.rows.empty()) throw InputError("compute_metrics: empty episode");
    double err = 0.0;
    for (const auto& row : rec.rows) {
      err += (row.true_state - row.est_mean).norm();
      per_qi_selected.push_back(static_cast<double>(row.selected.size()));
      if (m.aol_histograms.size() < row.aol.size()) m.aol_histograms.resize(row.aol.size());
      for (std::size_t k = 0; k < row.aol.size(); ++k) ++m.aol_histograms[k][row.aol[k]];
    }
    ep_rmse.push_back(err / rec.qis());
    ep_prbs.push_back(static_cast<double>(rec.total_prbs()));
    qis += rec.qis();
    failures += rec.failures();
    prbs += rec.total_prbs();
    if (rec.reached_goal) {
      ++goals;
      goal_qis += rec.qis();
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  m.goal_rate = static_cast<double>(goals) / n;
  m.mean_qis = static_cast<double>(qis) / n;
  m.mean_qis_to_goal = goals ? static_cast<double>(goal_qis) / static_cast<double>(goals)
                             : std::numeric_limits<double>::quiet_NaN();
  m.mean_total_prbs = mean(ep_prbs);
  m.mean_prbs_per_qi = static_cast<double>(prbs) / static_cast<double>(qis);
  m.mrmse = mean(ep_rmse);
  if (ep_rmse.size() > 1) {
    double ss = 0.0;
    for (double e : ep_rmse) ss += (e - m.mrmse) * (e - m.mrmse);
    m.mrmse_ci95 = 1.96 * std::sqrt(ss / (n - 1.0) / n);
  }
  m.failure_probability = static_cast<double>(failures) / static_cast<double>(qis);
  m.mean_selected = mean(per_qi_selected);
  m.prb_cdf = empirical_cdf(ep_prbs);
  m.selected_cdf = empirical_cdf(per_qi_selected);
  return m;
}

nlohmann::json MetricsSummary::to_json() const {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : aol_histograms) {
    nlohmann::json o = nlohmann::json::object();
    for (const auto& [age, count] : h) o[std::to_string(age)] = count;
    hist.push_back(o);
  }
  auto cdf_json = [](const Cdf& c) { return nlohmann::json{{"values", c.values}, {"probabilities", c.probabilities}}; };
  nlohmann::json j{{"scheme", to_string(scheme)},
                   {"episodes", episodes},
                   {"goal_rate", goal_rate},
                   {"mean_qis", mean_qis},
                   {"mean_total_prbs", mean_total_prbs},
                   {"mean_prbs_per_qi", mean_prbs_per_qi},
                   {"mrmse", mrmse},
                   {"mrmse_ci95", mrmse_ci95},
                   {"failure_probability", failure_probability},
                   {"mean_selected", mean_selected},
                   {"aol_histograms", hist},
                   {"prb_cdf", cdf_json(prb_cdf)},
                   {"selected_cdf", cdf_json(selected_cdf)}};
  j["mean_qis_to_goal"] = std::isnan(mean_qis_to_goal) ? nlohmann::json(nullptr) : nlohmann::json(mean_qis_to_goal);
  return j;
}

MonteCarloResult monte_carlo(const RunConfig& config, int episodes, const Controller& controller,
                             bool keep_records) {
  if (episodes < 1) throw InputError("monte_carlo: need at least one episode");
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(episodes));
  for (int i = 0; i < episodes; ++i) {
    records.push_back(run_episode(config, controller, config.seed + static_cast<std::uint64_t>(i)));
  }
  MonteCarloResult out;
  out.summary = compute_metrics(records);
  if (keep_records) out.records = std::move(records);
  return out;
}

std::string summary_csv_header() {
  return "scheme,sweep,value,episodes,goal_rate,mean_qis,mean_qis_to_goal,mean_total_prbs,mean_prbs_per_qi,"
         "mrmse,mrmse_ci95,failure_probability,mean_selected";
}

std::string summary_csv_row(const MetricsSummary& m, const std::string& sweep_key, double sweep_value) {
  std::ostringstream os;
  os << to_string(m.scheme) << ',' << sweep_key << ',' << fmt(sweep_value) << ',' << m.episodes << ','
     << fmt(m.goal_rate) << ',' << fmt(m.mean_qis) << ',' << fmt(m.mean_qis_to_goal) << ','
     << fmt(m.mean_total_prbs) << ',' << fmt(m.mean_prbs_per_qi) << ',' << fmt(m.mrmse) << ','
     << fmt(m.mrmse_ci95) << ',' << fmt(m.failure_probability) << ',' << fmt(m.mean_selected);
  return os.str();
}

}  // namespace reverb
