#include "lanedef/obs_reward.hpp"

#include <algorithm>
#include <numeric>

#include "lanedef/errors.hpp"

namespace lanedef {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void write_defender_block(const GameState& s, int idx, std::span<double> out) {
  const auto& d = s.defenders[idx];
  out[0] = safe_ratio(d.x, s.grid.lanes - 1);
  out[1] = safe_ratio(d.y, s.grid.defender_rows - 1);
  out[2] = safe_ratio(d.health, s.rules.defender_max_health);
  out[3] = safe_ratio(d.energy, s.rules.defender_max_energy);
  for (int r = 0; r < kDefenderCount; ++r) out[4 + r] = static_cast<int>(d.role) == r ? 1.0 : 0.0;
}

// Up to kUnitSlots units ordered by closeness to the baseline.
std::vector<const UnitInstance*> nearest_units(const GameState& s) {
  std::vector<const UnitInstance*> order;
  order.reserve(s.units.size());
  for (const auto& u : s.units) order.push_back(&u);
  const auto n = std::min<std::size_t>(order.size(), kUnitSlots);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [](const UnitInstance* a, const UnitInstance* b) {
                      return a->y != b->y ? a->y < b->y : a->id < b->id;
                    });
  order.resize(n);
  return order;
}

void check_size(std::span<double> out, int expected) {
  if (static_cast<int>(out.size()) != expected) throw UsageError("observation buffer has wrong size");
}

}  // namespace

void encode_defender_obs(const GameState& s, int idx, std::span<double> out) {
  check_size(out, kDefenderObsSize);
  if (idx < 0 || idx >= kDefenderCount) throw UsageError("defender index out of range");
  std::fill(out.begin(), out.end(), 0.0);

  write_defender_block(s, idx, out.subspan(0, kDefenderBlock));
  int block = 1;
  for (int j = 0; j < kDefenderCount; ++j) {
    if (j == idx) continue;
    write_defender_block(s, j, out.subspan(block * kDefenderBlock, kDefenderBlock));
    ++block;
  }

  auto slots = out.subspan(kDefenderBlock * kDefenderCount);
  const auto units = nearest_units(s);
  for (std::size_t k = 0; k < units.size(); ++k) {
    const UnitInstance& u = *units[k];
    auto slot = slots.subspan(k * kDefenderUnitWidth, kDefenderUnitWidth);
    slot[0] = 1.0;
    slot[1] = safe_ratio(u.spec.lane, s.grid.lanes - 1);
    slot[2] = safe_ratio(u.y, s.grid.depth - 1);
    slot[3] = static_cast<double>(u.health) / UnitLimits::health_max;
    slot[4] = static_cast<double>(u.spec.damage) / UnitLimits::damage_max;
    slot[5] = u.spec.dtype == DamageType::Magic ? 1.0 : 0.0;
  }
}

ObsVector encode_defender_obs(const GameState& s, int idx) {
  ObsVector v(kDefenderObsSize);
  encode_defender_obs(s, idx, v);
  return v;
}

void encode_attacker_obs(const GameState& s, std::span<double> out) {
  check_size(out, kAttackerObsSize);
  std::fill(out.begin(), out.end(), 0.0);

  out[0] = safe_ratio(s.attacker.energy, s.attacker.max_energy);
  out[1] = std::min(1.0, s.attacker.max_energy / 1000.0);
  for (int j = 0; j < kDefenderCount; ++j)
    write_defender_block(s, j, out.subspan(2 + j * kDefenderBlock, kDefenderBlock));

  using L = UnitLimits;
  auto slots = out.subspan(2 + kDefenderBlock * kDefenderCount);
  const auto units = nearest_units(s);
  for (std::size_t k = 0; k < units.size(); ++k) {
    const UnitInstance& u = *units[k];
    auto slot = slots.subspan(k * kAttackerUnitWidth, kAttackerUnitWidth);
    slot[0] = 1.0;
    slot[1] = safe_ratio(u.spec.lane, s.grid.lanes - 1);
    slot[2] = safe_ratio(u.y, s.grid.depth - 1);
    slot[3] = static_cast<double>(u.health) / L::health_max;
    slot[4] = static_cast<double>(u.spec.damage) / L::damage_max;
    slot[5] = static_cast<double>(u.spec.speed) / L::speed_max;
    slot[6] = static_cast<double>(u.spec.range) / L::range_max;
    slot[7] = static_cast<double>(u.spec.regen) / L::regen_max;
    slot[8] = static_cast<double>(u.spec.leech) / L::leech_max;
    slot[9] = static_cast<double>(u.spec.phys_def) / L::def_max;
    slot[10] = static_cast<double>(u.spec.magic_def) / L::def_max;
    slot[11] = static_cast<double>(u.spec.phys_pen) / L::pen_max;
    slot[12] = static_cast<double>(u.spec.magic_pen) / L::pen_max;
    slot[13] = u.spec.dtype == DamageType::Magic ? 1.0 : 0.0;
  }
}

ObsVector encode_attacker_obs(const GameState& s) {
  ObsVector v(kAttackerObsSize);
  encode_attacker_obs(s, v);
  return v;
}

RewardSample compute_rewards(const StepOutcome& outcome, const GameState& /*prev_state*/,
                             const GameState& /*next_state*/, const RewardConfig& c) {
  RewardSample r;
  const bool lost = is_attacker_win(outcome.terminal);
  const double per_defender = c.defender_tick + c.defender_kill * outcome.kills + (lost ? c.defender_loss : 0.0);
  r.defender.fill(per_defender);
  r.attacker = c.attacker_tick + (lost ? c.attacker_win : 0.0) +
               (outcome.spawn_failed ? c.attacker_spawn_fail : 0.0);
  return r;
}

}  // namespace lanedef
