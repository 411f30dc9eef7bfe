#include <gtest/gtest.h>

#include <cmath>

#include "lanedef/harness.hpp"
#include "lanedef/obs_reward.hpp"

using namespace lanedef;

namespace {

GameState with_units(int count, std::uint64_t seed) {
  GameState s = new_game(GridConfig{}, seed);
  Rng rng(seed);
  for (int k = 0; k < count; ++k) {
    UnitInstance u;
    u.spec = random_attacker_policy(rng, 1.0).spec;
    u.y = rng.uniform_int(0, 29);
    u.health = rng.uniform_int(1, u.spec.health);
    u.id = s.next_unit_id++;
    s.units.push_back(u);
  }
  return s;
}

}  // namespace

TEST(DefenderObs, FreshStateOwnBlock) {
  const auto v = encode_defender_obs(new_game(GridConfig{}, 42), 0);
  ASSERT_EQ(v.size(), 128u);
  const std::vector<double> own{1.0 / 9, 0, 1, 1, 1, 0, 0, 0};
  for (std::size_t i = 0; i < own.size(); ++i) EXPECT_DOUBLE_EQ(v[i], own[i]);
  // Other defenders in index order, skipping self.
  EXPECT_DOUBLE_EQ(v[8], 3.0 / 9);
  EXPECT_DOUBLE_EQ(v[9], 1.0 / 3);
  EXPECT_DOUBLE_EQ(v[8 + 5], 1.0);  // healer one-hot
  for (std::size_t i = 32; i < v.size(); ++i) EXPECT_EQ(v[i], 0.0);
}

TEST(DefenderObs, SlotCapKeepsLowestY) {
  const GameState s = with_units(20, 3);
  const auto v = encode_defender_obs(s, 2);
  std::vector<int> ys;
  for (const auto& u : s.units) ys.push_back(u.y);
  std::sort(ys.begin(), ys.end());
  for (int k = 0; k < kUnitSlots; ++k) {
    EXPECT_EQ(v[32 + k * 6], 1.0);
    EXPECT_NEAR(v[32 + k * 6 + 2] * 29, ys[k], 1e-9);
  }
}

TEST(DefenderObs, BlindToAttackerEnergy) {
  GameState a = with_units(5, 8);
  GameState b = a;
  b.attacker.energy = 3;
  b.attacker.max_energy = 999;
  for (int i = 0; i < 4; ++i) EXPECT_EQ(encode_defender_obs(a, i), encode_defender_obs(b, i));
}

TEST(AttackerObs, FreshStateHeader) {
  const auto v = encode_attacker_obs(new_game(GridConfig{}, 42));
  ASSERT_EQ(v.size(), 258u);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.2);
}

TEST(AttackerObs, OneSpawnOnePresentFlag) {
  GameState s = new_game(GridConfig{}, 42);
  AttackerAction a;
  a.spawn = true;
  step(s, {DefenderAction::Noop, DefenderAction::Noop, DefenderAction::Noop, DefenderAction::Noop}, a);
  const auto v = encode_attacker_obs(s);
  int present = 0;
  for (int k = 0; k < kUnitSlots; ++k) present += v[34 + k * 14] == 1.0 ? 1 : 0;
  EXPECT_EQ(present, 1);
}

TEST(Observations, NormalisedAndPure) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const GameState s = with_units(static_cast<int>(seed), seed);
    for (int i = 0; i < 4; ++i) {
      const auto v = encode_defender_obs(s, i);
      EXPECT_EQ(v, encode_defender_obs(s, i));
      for (double x : v) ASSERT_TRUE(std::isfinite(x) && x >= 0.0 && x <= 1.0);
    }
    const auto w = encode_attacker_obs(s);
    EXPECT_EQ(w.size(), 258u);
    for (double x : w) ASSERT_TRUE(std::isfinite(x) && x >= 0.0 && x <= 1.0);
  }
}

TEST(Rewards, QuietTick) {
  const GameState s = new_game(GridConfig{}, 1);
  const RewardSample r = compute_rewards(StepOutcome{}, s, s, RewardConfig{});
  for (double d : r.defender) EXPECT_DOUBLE_EQ(d, 0.001);
  EXPECT_DOUBLE_EQ(r.attacker, -0.001);
}

TEST(Rewards, AttackerWinWithKill) {
  const GameState s = new_game(GridConfig{}, 1);
  StepOutcome out;
  out.terminal = Terminal::AttackerWinBreach;
  out.kills = 1;
  const RewardSample r = compute_rewards(out, s, s, RewardConfig{});
  for (double d : r.defender) EXPECT_DOUBLE_EQ(d, -1.0 + 0.001 + 0.05);
  EXPECT_DOUBLE_EQ(r.attacker, 1.0 - 0.001);
}

TEST(Rewards, FailedSpawn) {
  const GameState s = new_game(GridConfig{}, 1);
  StepOutcome out;
  out.spawn_failed = true;
  EXPECT_DOUBLE_EQ(compute_rewards(out, s, s, RewardConfig{}).attacker, -0.031);
}

TEST(Rewards, TruncationHasNoTerminalReward) {
  const GameState s = new_game(GridConfig{}, 1);
  StepOutcome out;
  out.terminal = Terminal::Truncated;
  const RewardSample r = compute_rewards(out, s, s, RewardConfig{});
  EXPECT_DOUBLE_EQ(r.defender[0], 0.001);
  EXPECT_DOUBLE_EQ(r.attacker, -0.001);
}

TEST(Rewards, TerminalComponentsCancel) {
  const GameState s = new_game(GridConfig{}, 1);
  RewardConfig no_shaping;
  no_shaping.defender_tick = no_shaping.attacker_tick = 0;
  no_shaping.defender_kill = no_shaping.attacker_spawn_fail = 0;
  for (Terminal t : {Terminal::AttackerWinBreach, Terminal::AttackerWinDefenderDown}) {
    StepOutcome out;
    out.terminal = t;
    const RewardSample r = compute_rewards(out, s, s, no_shaping);
    EXPECT_DOUBLE_EQ(r.defender[0] + r.attacker, 0.0);
  }
}

TEST(Rewards, KillRewardsAccountForEveryKill) {
  Rng rng(11);
  GameState s = new_game(GridConfig{}, 11);
  double kill_reward = 0;
  int kills = 0;
  RewardConfig only_kills;
  only_kills.defender_tick = 0;
  only_kills.defender_loss = 0;
  while (s.terminal == Terminal::None) {
    DefenderActions a;
    for (auto& x : a) x = rng.uniform() < 0.7 ? DefenderAction::Shoot : random_defender_policy(rng);
    AttackerAction att;
    att.spawn = rng.uniform() < 0.3;
    att.spec.lane = rng.uniform_int(0, 9);
    const GameState prev = s;
    const StepOutcome out = step(s, a, att);
    kills += out.kills;
    kill_reward += compute_rewards(out, prev, s, only_kills).defender[0];
  }
  EXPECT_GT(kills, 0);
  EXPECT_NEAR(kill_reward / 0.05, kills, 1e-9);
}
