#include "lanedef/engine.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "lanedef/errors.hpp"

namespace lanedef {

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::Mage: return "mage";
    case Role::Healer: return "healer";
    case Role::Tank: return "tank";
    case Role::Sharpshooter: return "sharpshooter";
  }
  return "?";
}

std::string_view to_string(DefenderAction a) noexcept {
  switch (a) {
    case DefenderAction::MoveLeft: return "left";
    case DefenderAction::MoveRight: return "right";
    case DefenderAction::Shoot: return "shoot";
    case DefenderAction::Heal: return "heal";
    case DefenderAction::Special: return "special";
    case DefenderAction::Noop: return "noop";
  }
  return "?";
}

std::string_view to_string(Terminal t) noexcept {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::AttackerWinBreach: return "breach";
    case Terminal::AttackerWinDefenderDown: return "defender_down";
    case Terminal::Truncated: return "truncated";
  }
  return "?";
}

std::string_view to_string(DamageType d) noexcept {
  return d == DamageType::Physical ? "physical" : "magic";
}

void GridConfig::validate() const {
  if (lanes < 1) throw ConfigError("grid: lanes must be >= 1, got " + std::to_string(lanes));
  if (defender_rows != kDefenderCount)
    throw ConfigError("grid: defender_rows must equal the defender count (4), got " +
                      std::to_string(defender_rows));
  if (depth <= defender_rows)
    throw ConfigError("grid: depth must exceed defender_rows, got " + std::to_string(depth));
  if (max_ticks < 1) throw ConfigError("grid: max_ticks must be >= 1");
}

void Rules::validate() const {
  for (const auto& r : roles) {
    if (r.damage < 0 || r.phys_def < 0 || r.magic_def < 0 || r.phys_pen < 0 || r.magic_pen < 0)
      throw ConfigError("rules: role statistics must be non-negative");
  }
  const int non_negative[] = {defender_regen, move_cost, shoot_cost, heal_cost, special_cost,
                              heal_amount, party_heal_amount, cannon_damage, cannon_pen,
                              clear_lane_damage, clear_lane_pen, attacker_start_energy,
                              attacker_cap_growth, attacker_regen};
  for (int v : non_negative)
    if (v < 0) throw ConfigError("rules: costs and amounts must be non-negative");
  if (defender_max_health < 1 || defender_max_energy < 0)
    throw ConfigError("rules: defender maxima must be positive");
  if (cannon_width < 1) throw ConfigError("rules: cannon_width must be >= 1");
  if (attacker_start_cap < attacker_start_energy)
    throw ConfigError("rules: attacker_start_cap must be >= attacker_start_energy");
  const int pcts[] = {cost.health_pct, cost.damage_pct, cost.speed_pct, cost.range_pct,
                      cost.regen_pct, cost.leech_pct, cost.phys_def_pct, cost.magic_def_pct,
                      cost.phys_pen_pct, cost.magic_pen_pct};
  if (cost.base < 1) throw ConfigError("rules: cost base must be >= 1");
  for (int p : pcts)
    if (p <= 0) throw ConfigError("rules: cost coefficients must be positive");
}

bool is_valid(const UnitSpec& s, int lanes) noexcept {
  using L = UnitLimits;
  auto in = [](int v, int lo, int hi) { return v >= lo && v <= hi; };
  return in(s.lane, 0, lanes - 1) && in(s.health, L::health_min, L::health_max) &&
         in(s.damage, L::damage_min, L::damage_max) && in(s.speed, L::speed_min, L::speed_max) &&
         in(s.range, L::range_min, L::range_max) && in(s.regen, 0, L::regen_max) &&
         in(s.leech, 0, L::leech_max) && in(s.phys_def, 0, L::def_max) &&
         in(s.magic_def, 0, L::def_max) && in(s.phys_pen, 0, L::pen_max) &&
         in(s.magic_pen, 0, L::pen_max) &&
         (s.dtype == DamageType::Physical || s.dtype == DamageType::Magic);
}

GameState new_game(const GridConfig& config, std::uint64_t seed, const Rules& rules) {
  config.validate();
  rules.validate();

  GameState s;
  s.grid = config;
  s.rules = rules;
  s.rng = Rng(seed);
  for (int i = 0; i < kDefenderCount; ++i) {
    auto& d = s.defenders[i];
    d.role = static_cast<Role>(i);
    d.x = std::min(2 * i + 1, config.lanes - 1);
    d.y = i;
    d.health = rules.defender_max_health;
    d.energy = rules.defender_max_energy;
  }
  s.attacker.energy = rules.attacker_start_energy;
  s.attacker.max_energy = rules.attacker_start_cap;
  return s;
}

std::int64_t spawn_cost(const UnitSpec& s, const CostModel& m) {
  using u128 = unsigned __int128;
  const int factors[] = {
      100 + m.health_pct * (s.health - 1), 100 + m.damage_pct * (s.damage - 1),
      100 + m.speed_pct * (s.speed - 1),   100 + m.range_pct * s.range,
      100 + m.regen_pct * s.regen,         100 + m.leech_pct * s.leech,
      100 + m.phys_def_pct * s.phys_def,   100 + m.magic_def_pct * s.magic_def,
      100 + m.phys_pen_pct * s.phys_pen,   100 + m.magic_pen_pct * s.magic_pen,
  };
  u128 numerator = static_cast<u128>(m.base);
  u128 denominator = 1;
  for (int f : factors) {
    numerator *= static_cast<u128>(f);
    denominator *= 100;
  }
  return static_cast<std::int64_t>((numerator + denominator - 1) / denominator);
}

int compute_damage(int attack_damage, DamageType dtype, int pen, int target_phys_def,
                   int target_magic_def) noexcept {
  const int defence = dtype == DamageType::Physical ? target_phys_def : target_magic_def;
  const int mitigated = std::max(0, defence - pen);
  return std::max(1, attack_damage - mitigated);
}

int action_cost(DefenderAction action, const Rules& rules) noexcept {
  switch (action) {
    case DefenderAction::MoveLeft:
    case DefenderAction::MoveRight: return rules.move_cost;
    case DefenderAction::Shoot: return rules.shoot_cost;
    case DefenderAction::Heal: return rules.heal_cost;
    case DefenderAction::Special: return rules.special_cost;
    case DefenderAction::Noop: return 0;
  }
  return 0;
}

Terminal check_termination(const GameState& state) noexcept {
  if (state.breached) return Terminal::AttackerWinBreach;
  for (const auto& d : state.defenders)
    if (d.health <= 0) return Terminal::AttackerWinDefenderDown;
  if (state.tick >= state.grid.max_ticks) return Terminal::Truncated;
  return Terminal::None;
}

namespace {

int pen_for(const RoleSheet& r) {
  return r.damage_type == DamageType::Physical ? r.phys_pen : r.magic_pen;
}

void hit_unit(UnitInstance& u, int damage, DamageType dtype, int pen) {
  u.health -= compute_damage(damage, dtype, pen, u.spec.phys_def, u.spec.magic_def);
}

// Nearest live unit in `lane` (lowest y, then lowest id).
UnitInstance* nearest_in_lane(std::vector<UnitInstance>& units, int lane) {
  UnitInstance* best = nullptr;
  for (auto& u : units) {
    if (u.health <= 0 || u.spec.lane != lane) continue;
    if (best == nullptr || u.y < best->y) best = &u;
  }
  return best;
}

void apply_special(GameState& s, int idx) {
  const Rules& r = s.rules;
  const DefenderState& self = s.defenders[idx];
  switch (self.role) {
    case Role::Mage:
      for (auto& u : s.units) {
        if (u.health <= 0) continue;
        u.spec.phys_def = 0;
        u.spec.magic_def = 0;
      }
      break;
    case Role::Healer:
      for (auto& d : s.defenders) d.health = std::min(r.defender_max_health, d.health + r.party_heal_amount);
      break;
    case Role::Tank: {
      const int width = std::min(r.cannon_width, s.grid.lanes);
      std::vector<int> per_lane(s.grid.lanes, 0);
      for (const auto& u : s.units)
        if (u.health > 0) ++per_lane[u.spec.lane];
      int best_left = 0;
      int best_count = -1;
      for (int left = 0; left + width <= s.grid.lanes; ++left) {
        int count = 0;
        for (int l = left; l < left + width; ++l) count += per_lane[l];
        if (count > best_count) {
          best_count = count;
          best_left = left;
        }
      }
      for (auto& u : s.units) {
        if (u.health <= 0) continue;
        if (u.spec.lane >= best_left && u.spec.lane < best_left + width)
          hit_unit(u, r.cannon_damage, DamageType::Physical, r.cannon_pen);
      }
      break;
    }
    case Role::Sharpshooter:
      for (auto& u : s.units) {
        if (u.health <= 0 || u.spec.lane != self.x) continue;
        hit_unit(u, r.clear_lane_damage, DamageType::Physical, r.clear_lane_pen);
      }
      break;
  }
}

// Index of the defender a unit engages, or -1. Qualifying defenders share the
// lane and satisfy (unit.y - defender.y) <= range; the nearest by |dy| wins,
// ties to the lowest index.
int engagement_target(const GameState& s, const UnitInstance& u) {
  int target = -1;
  int best_dist = 0;
  for (int i = 0; i < kDefenderCount; ++i) {
    const auto& d = s.defenders[i];
    if (d.x != u.spec.lane) continue;
    const int dy = u.y - d.y;
    if (dy > u.spec.range) continue;
    const int dist = std::abs(dy);
    if (target < 0 || dist < best_dist) {
      target = i;
      best_dist = dist;
    }
  }
  return target;
}

}  // namespace

StepOutcome step(GameState& s, const DefenderActions& defender_actions,
                 const AttackerAction& attacker_action) {
  if (s.terminal != Terminal::None) throw UsageError("step: game already finished");
  if (attacker_action.spawn && !is_valid(attacker_action.spec, s.grid.lanes))
    throw UsageError("step: attacker spawn spec out of range");

  const Rules& r = s.rules;
  StepOutcome out;

  // 1. Regeneration.
  for (auto& d : s.defenders) d.energy = std::min(r.defender_max_energy, d.energy + r.defender_regen);
  s.attacker.energy = std::min(s.attacker.max_energy, s.attacker.energy + r.attacker_regen);
  s.attacker.max_energy += r.attacker_cap_growth;
  for (auto& u : s.units) u.health = std::min(u.spec.health, u.health + u.spec.regen);

  // 2. Defender actions in index order.
  for (int i = 0; i < kDefenderCount; ++i) {
    auto& d = s.defenders[i];
    DefenderAction a = defender_actions[i];
    const int cost = action_cost(a, r);
    if (d.energy < cost) a = DefenderAction::Noop;
    out.executed[i] = a;
    if (a == DefenderAction::Noop) continue;
    d.energy -= cost;
    switch (a) {
      case DefenderAction::MoveLeft: d.x = std::max(0, d.x - 1); break;
      case DefenderAction::MoveRight: d.x = std::min(s.grid.lanes - 1, d.x + 1); break;
      case DefenderAction::Shoot: {
        const RoleSheet& sheet = r.roles[static_cast<int>(d.role)];
        if (UnitInstance* u = nearest_in_lane(s.units, d.x))
          hit_unit(*u, sheet.damage, sheet.damage_type, pen_for(sheet));
        break;
      }
      case DefenderAction::Heal: d.health = std::min(r.defender_max_health, d.health + r.heal_amount); break;
      case DefenderAction::Special: apply_special(s, i); break;
      case DefenderAction::Noop: break;
    }
  }

  // 3. Attacker spawn.
  if (attacker_action.spawn) {
    const std::int64_t cost = spawn_cost(attacker_action.spec, r.cost);
    if (s.attacker.energy >= cost) {
      s.attacker.energy -= static_cast<int>(cost);
      UnitInstance u;
      u.spec = attacker_action.spec;
      u.y = s.grid.depth - 1;
      u.health = u.spec.health;
      u.spawn_tick = s.tick;
      u.id = s.next_unit_id++;
      s.units.push_back(u);
      out.spawned = true;
    } else {
      out.spawn_failed = true;
    }
  }

  // 4. Units, ascending id. A unit stops for the tick as soon as it engages.
  out.unit_events.reserve(s.units.size());
  for (auto& u : s.units) {
    if (u.health <= 0) continue;
    UnitTickEvent ev{u.id, 0, false, false};
    while (ev.advanced < u.spec.speed) {
      const int target = engagement_target(s, u);
      if (target >= 0) {
        auto& d = s.defenders[target];
        const RoleSheet& sheet = r.roles[static_cast<int>(d.role)];
        const int pen = u.spec.dtype == DamageType::Physical ? u.spec.phys_pen : u.spec.magic_pen;
        d.health = std::max(0, d.health - compute_damage(u.spec.damage, u.spec.dtype, pen,
                                                         sheet.phys_def, sheet.magic_def));
        u.health = std::min(u.spec.health, u.health + u.spec.leech);
        ev.attacked = true;
        break;
      }
      if (u.y - 1 < 0) {
        ev.breached = true;
        s.breached = true;
        break;
      }
      --u.y;
      ++ev.advanced;
    }
    out.unit_events.push_back(ev);
    if (s.breached) break;
  }

  // 5. Cleanup.
  const auto dead = std::remove_if(s.units.begin(), s.units.end(),
                                   [](const UnitInstance& u) { return u.health <= 0; });
  out.kills = static_cast<int>(std::distance(dead, s.units.end()));
  s.units.erase(dead, s.units.end());

  // 6. Termination.
  ++s.tick;
  s.terminal = check_termination(s);
  out.terminal = s.terminal;
  return out;
}

}  // namespace lanedef
