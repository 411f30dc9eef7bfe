#pragma once

// On-policy co-training: rollout collection over the game, generalized
// advantage estimation, and clipped-surrogate PPO updates.
//
// The four defenders share one actor and one critic; each contributes one
// transition per tick. The attacker has its own actor and critic. Both
// buffers are filled from the same simulated ticks.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lanedef/engine.hpp"
#include "lanedef/metrics.hpp"
#include "lanedef/obs_reward.hpp"
#include "lanedef/policy_net.hpp"
#include "lanedef/rng.hpp"

namespace lanedef {

struct Hyperparams {
  double learning_rate = 3.0e-4;
  int batch_size = 128;
  double clip_epsilon = 0.2;
  double entropy_beta = 5.0e-4;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs_per_update = 3;
  int horizon = 2048;  // ticks per rollout
  double value_coef = 0.5;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Advantage estimation

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma * next_t - V_t and A_t = delta_t + gamma * lambda * A_{t+1},
/// where next_t = V_{t+1} inside a segment. At a boundary (done_t set, or the
/// last element) next_t is bootstrap[t], or 0 when `bootstrap` is empty, and
/// the advantage recursion restarts. Use a zero bootstrap for terminal states
/// and the critic's value for truncations and buffer cuts.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double gamma, double lambda,
                      std::span<const double> bootstrap = {});

/// Rescales to zero mean and unit (population) variance in place.
void normalize_advantages(std::span<double> advantages);

// ---------------------------------------------------------------------------
// Rollout storage

struct Transition {
  std::span<const double> obs;
  std::span<const int> action;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  double bootstrap_value = 0.0;
  int agent = 0;  // defender index 0..3, or 4 for the attacker
};

inline constexpr int kAttackerAgentTag = kDefenderCount;

/// Struct-of-arrays transition store.
class RolloutBuffer {
 public:
  RolloutBuffer() = default;
  RolloutBuffer(int obs_dim, int action_dim) : obs_dim_(obs_dim), action_dim_(action_dim) {}

  void push(const Transition& t);
  std::size_t size() const { return rewards.size(); }
  bool empty() const { return rewards.empty(); }
  int obs_dim() const { return obs_dim_; }
  int action_dim() const { return action_dim_; }

  std::span<const double> obs(std::size_t i) const;
  std::span<const int> action(std::size_t i) const;

  /// Marks the most recent transition of `agent` as a boundary with `bootstrap`.
  void cut(int agent, double bootstrap);

  /// Fills `advantages` and `returns` running GAE separately per agent stream.
  void compute_advantages(double gamma, double lambda);

  std::vector<double> obs_data;
  std::vector<int> action_data;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> bootstrap;
  std::vector<int> agents;
  std::vector<double> advantages;
  std::vector<double> returns;

 private:
  int obs_dim_ = 0;
  int action_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Agents

/// Actor, critic and their optimiser state.
struct ActorCritic {
  Mlp policy;
  Mlp critic;
  AdamOptimizer policy_opt;
  AdamOptimizer critic_opt;

  ActorCritic() = default;
  ActorCritic(const NetSpec& policy_spec, const NetSpec& value_spec, Rng& rng);
  static ActorCritic defender(Rng& rng);
  static ActorCritic attacker(Rng& rng);
};

/// Maps per-head indices of the attacker policy to a game action. Index 0 of
/// the spawn head is "do nothing".
AttackerAction decode_attacker_action(std::span<const int> indices);
std::vector<int> encode_attacker_action(const AttackerAction& action);

using DefenderScript = std::function<DefenderAction(const GameState&, int idx, Rng&)>;
using AttackerScript = std::function<AttackerAction(const GameState&, Rng&)>;

/// Who acts for each side. A side with a policy samples from it; otherwise its
/// script is used. Transitions are stored only for a side with both a policy
/// and a critic.
struct Controllers {
  const Mlp* defender_policy = nullptr;
  const Mlp* defender_critic = nullptr;
  const Mlp* attacker_policy = nullptr;
  const Mlp* attacker_critic = nullptr;
  DefenderScript defender_script;
  AttackerScript attacker_script;
};

struct Rollout {
  RolloutBuffer defender{kDefenderObsSize, 1};
  RolloutBuffer attacker{kAttackerObsSize, 13};
  std::vector<EpisodeTrace> episodes;  // finished during this rollout
  int ticks = 0;
};

/// Plays episodes back to back, carrying an unfinished episode over to the
/// next call. Episode k uses game seed mix_seed(master_seed, k) and a
/// sampling stream derived from that seed, so every episode is reproducible
/// on its own.
class RolloutCollector {
 public:
  RolloutCollector(GridConfig grid, Rules rules, RewardConfig rewards, std::uint64_t master_seed);

  /// Simulates exactly `horizon` ticks.
  Rollout collect(const Controllers& controllers, int horizon);

  /// Plays one complete episode from a fresh game without storing transitions.
  EpisodeTrace play_episode(const Controllers& controllers);

  std::int64_t episodes_started() const { return next_episode_; }
  const GameState& state() const { return state_; }

 private:
  void begin_episode();
  void tick(const Controllers& controllers, Rollout* rollout);

  GridConfig grid_;
  Rules rules_;
  RewardConfig rewards_;
  std::uint64_t master_seed_;
  std::int64_t next_episode_ = 0;
  GameState state_;
  Rng sampler_;
  EpisodeTrace current_;
  bool active_ = false;
  std::vector<EpisodeTrace> finished_;
};

// ---------------------------------------------------------------------------
// Updates

struct PolicyLoss {
  double loss = 0.0;  // clipped surrogate minus entropy bonus, batch mean
  double surrogate = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

/// Clipped surrogate over a batch of logits (action_total x B). When
/// `grad_logits` is non-null it receives dLoss/dLogits.
PolicyLoss clipped_policy_loss(const ActionLayout& layout, const Eigen::MatrixXd& logits,
                               std::span<const int> actions, std::span<const double> old_log_probs,
                               std::span<const double> advantages, double clip_epsilon, double entropy_beta,
                               Eigen::MatrixXd* grad_logits);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int minibatches = 0;
  std::size_t samples = 0;
};

/// Runs epochs_per_update passes of shuffled minibatches over `buffer`
/// (advantages are computed and normalised here). Throws TrainingError on a
/// non-finite loss before touching the parameters of that minibatch.
UpdateStats ppo_update(RolloutBuffer& buffer, const ActionLayout& layout, ActorCritic& agent,
                       const Hyperparams& hyper, Rng& rng);

}  // namespace lanedef
