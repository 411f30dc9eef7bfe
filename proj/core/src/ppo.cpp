#include "lanedef/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lanedef/errors.hpp"

namespace lanedef {

void Hyperparams::validate() const {
  if (!(learning_rate > 0) || batch_size < 1 || !(clip_epsilon > 0) || clip_epsilon >= 1 || entropy_beta < 0 ||
      !(gamma > 0) || gamma > 1 || gae_lambda < 0 || gae_lambda > 1 || epochs_per_update < 1 || horizon < 1 ||
      value_coef < 0)
    throw ConfigError("hyperparameters out of range");
}

// ---------------------------------------------------------------------------
// GAE

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double lambda,
                      std::span<const double> bootstrap) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || (!bootstrap.empty() && bootstrap.size() != n))
    throw UsageError("compute_gae: sequence lengths differ");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const bool boundary = dones[k] != 0 || k + 1 == n;
    const double next_value = boundary ? (bootstrap.empty() ? 0.0 : bootstrap[k]) : values[k + 1];
    if (boundary) next_adv = 0.0;
    const double delta = rewards[k] + gamma * next_value - values[k];
    next_adv = delta + gamma * lambda * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
  }
  return r;
}

void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= n;
  const double sd = std::sqrt(var);
  for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : a - mean;
}

// ---------------------------------------------------------------------------
// RolloutBuffer

void RolloutBuffer::push(const Transition& t) {
  if (static_cast<int>(t.obs.size()) != obs_dim_ || static_cast<int>(t.action.size()) != action_dim_)
    throw UsageError("RolloutBuffer::push: shape mismatch");
  obs_data.insert(obs_data.end(), t.obs.begin(), t.obs.end());
  action_data.insert(action_data.end(), t.action.begin(), t.action.end());
  log_probs.push_back(t.log_prob);
  rewards.push_back(t.reward);
  values.push_back(t.value);
  dones.push_back(t.done ? 1 : 0);
  bootstrap.push_back(t.bootstrap_value);
  agents.push_back(t.agent);
}

std::span<const double> RolloutBuffer::obs(std::size_t i) const {
  return std::span<const double>(obs_data).subspan(i * static_cast<std::size_t>(obs_dim_),
                                                   static_cast<std::size_t>(obs_dim_));
}

std::span<const int> RolloutBuffer::action(std::size_t i) const {
  return std::span<const int>(action_data).subspan(i * static_cast<std::size_t>(action_dim_),
                                                   static_cast<std::size_t>(action_dim_));
}

void RolloutBuffer::cut(int agent, double value) {
  for (std::size_t k = size(); k-- > 0;) {
    if (agents[k] != agent) continue;
    if (!dones[k]) {
      dones[k] = 1;
      bootstrap[k] = value;
    }
    return;
  }
}

void RolloutBuffer::compute_advantages(double gamma, double lambda) {
  advantages.assign(size(), 0.0);
  returns.assign(size(), 0.0);
  std::vector<int> tags = agents;
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());

  std::vector<std::size_t> idx;
  std::vector<double> r, v, b;
  std::vector<std::uint8_t> d;
  for (int tag : tags) {
    idx.clear();
    for (std::size_t k = 0; k < size(); ++k)
      if (agents[k] == tag) idx.push_back(k);
    r.resize(idx.size());
    v.resize(idx.size());
    b.resize(idx.size());
    d.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      r[j] = rewards[idx[j]];
      v[j] = values[idx[j]];
      b[j] = bootstrap[idx[j]];
      d[j] = dones[idx[j]];
    }
    const auto g = compute_gae(r, v, d, gamma, lambda, b);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      advantages[idx[j]] = g.advantages[j];
      returns[idx[j]] = g.returns[j];
    }
  }
}

// ---------------------------------------------------------------------------
// Agents

ActorCritic::ActorCritic(const NetSpec& policy_spec, const NetSpec& value_spec, Rng& rng)
    : policy(policy_spec, rng, 0.01),
      critic(value_spec, rng, 1.0),
      policy_opt(policy.params()),
      critic_opt(critic.params()) {}

ActorCritic ActorCritic::defender(Rng& rng) { return ActorCritic(defender_policy_spec(), defender_value_spec(), rng); }
ActorCritic ActorCritic::attacker(Rng& rng) { return ActorCritic(attacker_policy_spec(), attacker_value_spec(), rng); }

AttackerAction decode_attacker_action(std::span<const int> ix) {
  if (ix.size() != 13) throw UsageError("attacker action needs 13 head indices");
  AttackerAction a;
  a.spawn = ix[0] == 1;
  UnitSpec& u = a.spec;
  u.lane = ix[1];
  u.health = ix[2] + 1;
  u.damage = ix[3] + 1;
  u.speed = ix[4] + 1;
  u.range = ix[5] + 1;
  u.regen = ix[6];
  u.leech = ix[7];
  u.phys_def = ix[8];
  u.magic_def = ix[9];
  u.phys_pen = ix[10];
  u.magic_pen = ix[11];
  u.dtype = ix[12] == 1 ? DamageType::Magic : DamageType::Physical;
  return a;
}

std::vector<int> encode_attacker_action(const AttackerAction& a) {
  const UnitSpec& u = a.spec;
  return {a.spawn ? 1 : 0, u.lane,     u.health - 1, u.damage - 1, u.speed - 1, u.range - 1, u.regen,
          u.leech,         u.phys_def, u.magic_def,  u.phys_pen,   u.magic_pen, u.dtype == DamageType::Magic ? 1 : 0};
}

// ---------------------------------------------------------------------------
// RolloutCollector

RolloutCollector::RolloutCollector(GridConfig grid, Rules rules, RewardConfig rewards, std::uint64_t master_seed)
    : grid_(grid), rules_(rules), rewards_(rewards), master_seed_(master_seed) {
  grid_.validate();
  rules_.validate();
}

void RolloutCollector::begin_episode() {
  const std::int64_t episode = next_episode_++;
  const std::uint64_t seed = mix_seed(master_seed_, static_cast<std::uint64_t>(episode));
  state_ = new_game(grid_, seed, rules_);
  sampler_ = Rng(mix_seed(seed, 0x5A3B1E));
  current_ = EpisodeTrace{};
  current_.config = grid_;
  current_.seed = seed;
  current_.episode = episode;
  active_ = true;
}

namespace {

double critic_value(const Mlp& critic, const Eigen::MatrixXd& obs, Eigen::Index col) {
  return critic.forward(obs.col(col))(0, 0);
}

}  // namespace

void RolloutCollector::tick(const Controllers& c, Rollout* rollout) {
  if (!active_) begin_episode();
  const bool def_learn = rollout != nullptr && c.defender_policy && c.defender_critic;
  const bool att_learn = rollout != nullptr && c.attacker_policy && c.attacker_critic;

  // Defender decisions.
  DefenderActions def_actions{};
  Eigen::MatrixXd def_obs;
  Eigen::MatrixXd def_values;
  std::array<SampledAction, kDefenderCount> def_samples;
  if (c.defender_policy) {
    def_obs.resize(kDefenderObsSize, kDefenderCount);
    for (int i = 0; i < kDefenderCount; ++i)
      encode_defender_obs(state_, i, std::span<double>(def_obs.col(i).data(), kDefenderObsSize));
    const Eigen::MatrixXd logits = c.defender_policy->forward(def_obs);
    const ActionLayout layout = defender_action_layout();
    for (int i = 0; i < kDefenderCount; ++i) {
      def_samples[i] = sample_action(layout, std::span<const double>(logits.col(i).data(), logits.rows()), sampler_);
      def_actions[i] = static_cast<DefenderAction>(def_samples[i].indices[0]);
    }
    if (def_learn) def_values = c.defender_critic->forward(def_obs);
  } else {
    if (!c.defender_script) throw UsageError("Controllers: defender has neither policy nor script");
    for (int i = 0; i < kDefenderCount; ++i) def_actions[i] = c.defender_script(state_, i, sampler_);
  }

  // Attacker decision.
  AttackerAction att_action;
  Eigen::MatrixXd att_obs;
  SampledAction att_sample;
  double att_value = 0.0;
  if (c.attacker_policy) {
    att_obs.resize(kAttackerObsSize, 1);
    encode_attacker_obs(state_, std::span<double>(att_obs.data(), kAttackerObsSize));
    const Eigen::MatrixXd logits = c.attacker_policy->forward(att_obs);
    att_sample = sample_action(attacker_action_layout(), std::span<const double>(logits.data(), logits.rows()),
                               sampler_);
    att_action = decode_attacker_action(att_sample.indices);
    if (att_learn) att_value = critic_value(*c.attacker_critic, att_obs, 0);
  } else {
    if (!c.attacker_script) throw UsageError("Controllers: attacker has neither policy nor script");
    att_action = c.attacker_script(state_, sampler_);
  }

  const GameState prev = def_learn || att_learn ? state_ : GameState{};
  const StepOutcome out = step(state_, def_actions, att_action);
  const RewardSample reward = compute_rewards(out, prev, state_, rewards_);
  current_.ticks.push_back(make_tick_record(state_, out, att_action));

  const bool ended = is_episode_end(out.terminal);
  const bool truncated = out.terminal == Terminal::Truncated;

  if (def_learn) {
    Eigen::MatrixXd next_values;
    if (truncated) {
      Eigen::MatrixXd next_obs(kDefenderObsSize, kDefenderCount);
      for (int i = 0; i < kDefenderCount; ++i)
        encode_defender_obs(state_, i, std::span<double>(next_obs.col(i).data(), kDefenderObsSize));
      next_values = c.defender_critic->forward(next_obs);
    }
    for (int i = 0; i < kDefenderCount; ++i) {
      const int act = def_samples[i].indices[0];
      Transition t;
      t.obs = std::span<const double>(def_obs.col(i).data(), kDefenderObsSize);
      t.action = std::span<const int>(&act, 1);
      t.log_prob = def_samples[i].log_prob;
      t.reward = reward.defender[i];
      t.value = def_values(0, i);
      t.done = ended;
      t.bootstrap_value = truncated ? next_values(0, i) : 0.0;
      t.agent = i;
      rollout->defender.push(t);
    }
  }
  if (att_learn) {
    double next_value = 0.0;
    if (truncated) {
      Eigen::MatrixXd next_obs(kAttackerObsSize, 1);
      encode_attacker_obs(state_, std::span<double>(next_obs.data(), kAttackerObsSize));
      next_value = critic_value(*c.attacker_critic, next_obs, 0);
    }
    Transition t;
    t.obs = std::span<const double>(att_obs.data(), kAttackerObsSize);
    t.action = att_sample.indices;
    t.log_prob = att_sample.log_prob;
    t.reward = reward.attacker;
    t.value = att_value;
    t.done = ended;
    t.bootstrap_value = next_value;
    t.agent = kAttackerAgentTag;
    rollout->attacker.push(t);
  }

  if (ended) {
    current_.outcome = out.terminal;
    finished_.push_back(std::move(current_));
    current_ = EpisodeTrace{};
    active_ = false;
  }
}

Rollout RolloutCollector::collect(const Controllers& c, int horizon) {
  if (horizon < 1) throw UsageError("collect: horizon must be positive");
  Rollout rollout;
  for (int t = 0; t < horizon; ++t) tick(c, &rollout);
  rollout.ticks = horizon;

  // Cut unfinished streams at the buffer edge, bootstrapping from the critic.
  if (active_) {
    if (c.defender_policy && c.defender_critic && !rollout.defender.empty()) {
      Eigen::MatrixXd obs(kDefenderObsSize, kDefenderCount);
      for (int i = 0; i < kDefenderCount; ++i)
        encode_defender_obs(state_, i, std::span<double>(obs.col(i).data(), kDefenderObsSize));
      const Eigen::MatrixXd v = c.defender_critic->forward(obs);
      for (int i = 0; i < kDefenderCount; ++i) rollout.defender.cut(i, v(0, i));
    }
    if (c.attacker_policy && c.attacker_critic && !rollout.attacker.empty()) {
      Eigen::MatrixXd obs(kAttackerObsSize, 1);
      encode_attacker_obs(state_, std::span<double>(obs.data(), kAttackerObsSize));
      rollout.attacker.cut(kAttackerAgentTag, critic_value(*c.attacker_critic, obs, 0));
    }
  }
  rollout.episodes = std::move(finished_);
  finished_.clear();
  return rollout;
}

EpisodeTrace RolloutCollector::play_episode(const Controllers& c) {
  active_ = false;
  finished_.clear();
  begin_episode();
  while (active_) tick(c, nullptr);
  EpisodeTrace t = std::move(finished_.back());
  finished_.clear();
  return t;
}

// ---------------------------------------------------------------------------
// Losses and update

PolicyLoss clipped_policy_loss(const ActionLayout& layout, const Eigen::MatrixXd& logits,
                               std::span<const int> actions, std::span<const double> old_log_probs,
                               std::span<const double> advantages, double clip_epsilon, double entropy_beta,
                               Eigen::MatrixXd* grad_logits) {
  const auto batch = static_cast<std::size_t>(logits.cols());
  const auto heads = layout.heads.size();
  if (logits.rows() != layout.total() || actions.size() != batch * heads || old_log_probs.size() != batch ||
      advantages.size() != batch)
    throw UsageError("clipped_policy_loss: shape mismatch");
  if (grad_logits) grad_logits->setZero(logits.rows(), logits.cols());

  PolicyLoss out;
  const double inv_b = 1.0 / static_cast<double>(batch);
  int clipped = 0;
  for (std::size_t j = 0; j < batch; ++j) {
    const auto col = std::span<const double>(logits.col(static_cast<Eigen::Index>(j)).data(), logits.rows());
    const auto act = actions.subspan(j * heads, heads);
    const LogProbEntropy le = log_prob_and_entropy(layout, col, act);
    const double log_ratio = le.log_prob - old_log_probs[j];
    const double ratio = std::exp(log_ratio);
    const double adv = advantages[j];
    const double unclipped = ratio * adv;
    const double clipped_ratio = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
    const double surr = std::min(unclipped, clipped_ratio * adv);
    out.surrogate += -surr * inv_b;
    out.entropy += le.entropy * inv_b;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;
    if (std::abs(ratio - 1.0) > clip_epsilon) ++clipped;
    if (grad_logits) {
      // The min picks the unclipped branch exactly when it is not larger.
      const double d_logp = unclipped <= clipped_ratio * adv ? -adv * ratio * inv_b : 0.0;
      auto g = std::span<double>(grad_logits->col(static_cast<Eigen::Index>(j)).data(), logits.rows());
      accumulate_log_prob_entropy_grad(layout, col, act, d_logp, -entropy_beta * inv_b, g);
    }
  }
  out.loss = out.surrogate - entropy_beta * out.entropy;
  out.clip_fraction = static_cast<double>(clipped) * inv_b;
  return out;
}

UpdateStats ppo_update(RolloutBuffer& buffer, const ActionLayout& layout, ActorCritic& agent, const Hyperparams& hp,
                       Rng& rng) {
  hp.validate();
  if (buffer.empty()) throw UsageError("ppo_update: empty buffer");
  if (buffer.action_dim() != static_cast<int>(layout.heads.size()))
    throw UsageError("ppo_update: buffer action width does not match layout");
  buffer.compute_advantages(hp.gamma, hp.gae_lambda);
  std::vector<double> adv = buffer.advantages;
  normalize_advantages(adv);

  const std::size_t n = buffer.size();
  const int obs_dim = buffer.obs_dim();
  const int act_dim = buffer.action_dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  UpdateStats stats;
  stats.samples = n;
  ForwardCache pcache;
  ForwardCache vcache;
  PolicyParams pgrad = PolicyParams::zeros_like(agent.policy.params());
  PolicyParams vgrad = PolicyParams::zeros_like(agent.critic.params());
  Eigen::MatrixXd obs;
  std::vector<int> acts;
  std::vector<double> old_lp;
  std::vector<double> mb_adv;
  Eigen::MatrixXd grad_logits;

  for (int epoch = 0; epoch < hp.epochs_per_update; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i - 1)))]);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(hp.batch_size));
      const auto b = static_cast<Eigen::Index>(end - start);
      obs.resize(obs_dim, b);
      acts.resize(static_cast<std::size_t>(b) * static_cast<std::size_t>(act_dim));
      old_lp.resize(static_cast<std::size_t>(b));
      mb_adv.resize(static_cast<std::size_t>(b));
      Eigen::RowVectorXd targets(b);
      for (Eigen::Index j = 0; j < b; ++j) {
        const std::size_t k = order[start + static_cast<std::size_t>(j)];
        const auto o = buffer.obs(k);
        std::copy(o.begin(), o.end(), obs.col(j).data());
        const auto a = buffer.action(k);
        std::copy(a.begin(), a.end(), acts.begin() + j * act_dim);
        old_lp[static_cast<std::size_t>(j)] = buffer.log_probs[k];
        mb_adv[static_cast<std::size_t>(j)] = adv[k];
        targets(j) = buffer.returns[k];
      }

      const Eigen::MatrixXd logits = agent.policy.forward(obs, pcache);
      const PolicyLoss pl =
          clipped_policy_loss(layout, logits, acts, old_lp, mb_adv, hp.clip_epsilon, hp.entropy_beta, &grad_logits);

      const Eigen::MatrixXd v = agent.critic.forward(obs, vcache);
      const Eigen::RowVectorXd err = v.row(0) - targets;
      const double vloss = hp.value_coef * err.squaredNorm() / static_cast<double>(b);
      if (!std::isfinite(pl.loss) || !std::isfinite(vloss)) {
        std::ostringstream msg;
        msg << "ppo_update: non-finite loss (policy " << pl.loss << ", value " << vloss << ") at epoch " << epoch
            << ", minibatch starting " << start;
        throw TrainingError(msg.str());
      }
      const Eigen::MatrixXd vgrad_out = (2.0 * hp.value_coef / static_cast<double>(b)) * err;

      agent.policy.backward(pcache, grad_logits, pgrad);
      agent.critic.backward(vcache, vgrad_out, vgrad);
      grad_step(agent.policy.params(), pgrad, agent.policy_opt, hp.learning_rate);
      grad_step(agent.critic.params(), vgrad, agent.critic_opt, hp.learning_rate);

      stats.policy_loss += pl.loss;
      stats.value_loss += vloss;
      stats.entropy += pl.entropy;
      stats.clip_fraction += pl.clip_fraction;
      stats.approx_kl += pl.approx_kl;
      ++stats.minibatches;
    }
  }
  const double m = std::max(1, stats.minibatches);
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.clip_fraction /= m;
  stats.approx_kl /= m;
  return stats;
}

}  // namespace lanedef
