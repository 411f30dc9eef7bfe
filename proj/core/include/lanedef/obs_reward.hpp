#pragma once

// Observation encoders and per-tick rewards.
//
// Defender observation (128):
//   [0, 8)     own block: x/(lanes-1), y/3, health/max, energy/max, role one-hot(4)
//   [8, 32)    the other three defenders in index order, same 8-wide block
//   [32, 128)  16 unit slots x 6: present, x, y/(depth-1), health/15, damage/5, dtype
//
// Attacker observation (258):
//   [0, 2)     energy/max_energy, min(1, max_energy/1000)
//   [2, 34)    four defender blocks in index order
//   [34, 258)  16 unit slots x 14: present, x, y, health/15, damage, speed, range,
//              regen, leech, phys_def, magic_def, phys_pen, magic_pen, dtype
//
// Unit slots hold the units closest to the defenders' baseline (ascending y,
// then id). Empty slots are zero. Defenders never see attacker energy.

#include <array>
#include <span>
#include <vector>

#include "lanedef/engine.hpp"

namespace lanedef {

inline constexpr int kUnitSlots = 16;
inline constexpr int kDefenderBlock = 8;
inline constexpr int kDefenderUnitWidth = 6;
inline constexpr int kAttackerUnitWidth = 14;
inline constexpr int kDefenderObsSize = kDefenderBlock * kDefenderCount + kUnitSlots * kDefenderUnitWidth;
inline constexpr int kAttackerObsSize = 2 + kDefenderBlock * kDefenderCount + kUnitSlots * kAttackerUnitWidth;

static_assert(kDefenderObsSize == 128);
static_assert(kAttackerObsSize == 258);

using ObsVector = std::vector<double>;

/// Writes defender `idx`'s observation into `out` (size kDefenderObsSize).
void encode_defender_obs(const GameState& state, int idx, std::span<double> out);
ObsVector encode_defender_obs(const GameState& state, int idx);

/// Writes the attacker's observation into `out` (size kAttackerObsSize).
void encode_attacker_obs(const GameState& state, std::span<double> out);
ObsVector encode_attacker_obs(const GameState& state);

struct RewardConfig {
  double defender_loss = -1.0;
  double defender_tick = 0.001;
  double defender_kill = 0.05;
  double attacker_win = 1.0;
  double attacker_tick = -0.001;
  double attacker_spawn_fail = -0.03;
};

struct RewardSample {
  std::array<double, kDefenderCount> defender{};
  double attacker = 0.0;
};

RewardSample compute_rewards(const StepOutcome& outcome, const GameState& prev_state,
                             const GameState& next_state, const RewardConfig& config = {});

}  // namespace lanedef
