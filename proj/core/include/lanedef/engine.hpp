#pragma once

// Deterministic tick-based lane-defense game.
//
// Four defenders hold fixed rows at the bottom of a lanes x depth grid and
// move only horizontally. The attacker spends energy to spawn units at the
// far row; units walk down their lane and stop to fight any defender that
// comes within range. All state is integral, so a seed plus an action
// sequence reproduces a trajectory bit for bit.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lanedef/rng.hpp"

namespace lanedef {

inline constexpr int kDefenderCount = 4;
inline constexpr int kDefenderActionCount = 6;

enum class Role : std::uint8_t { Mage, Healer, Tank, Sharpshooter };
enum class DamageType : std::uint8_t { Physical, Magic };
enum class DefenderAction : std::uint8_t { MoveLeft, MoveRight, Shoot, Heal, Special, Noop };

enum class Terminal : std::uint8_t {
  None,
  AttackerWinBreach,
  AttackerWinDefenderDown,
  Truncated,
};

constexpr bool is_attacker_win(Terminal t) noexcept {
  return t == Terminal::AttackerWinBreach || t == Terminal::AttackerWinDefenderDown;
}
constexpr bool is_episode_end(Terminal t) noexcept { return t != Terminal::None; }

std::string_view to_string(Role r) noexcept;
std::string_view to_string(DefenderAction a) noexcept;
std::string_view to_string(Terminal t) noexcept;
std::string_view to_string(DamageType d) noexcept;

struct GridConfig {
  int lanes = 10;
  int depth = 30;
  int defender_rows = 4;
  int max_ticks = 1000;

  /// Throws ConfigError on impossible dimensions.
  void validate() const;
  bool operator==(const GridConfig&) const = default;
};

struct RoleSheet {
  int damage = 0;
  DamageType damage_type = DamageType::Physical;
  int phys_def = 0;
  int magic_def = 0;
  int phys_pen = 0;
  int magic_pen = 0;
  bool operator==(const RoleSheet&) const = default;
};

/// Multiplicative spawn-cost model. Each factor is (100 + pct * (v - offset)) / 100
/// and the cost is ceil(base * product). Evaluated in exact integer arithmetic.
struct CostModel {
  int base = 10;
  int health_pct = 15;
  int damage_pct = 50;
  int speed_pct = 40;
  int range_pct = 5;
  int regen_pct = 60;
  int leech_pct = 30;
  int phys_def_pct = 30;
  int magic_def_pct = 30;
  int phys_pen_pct = 25;
  int magic_pen_pct = 25;
  bool operator==(const CostModel&) const = default;
};

/// Every tunable constant of the game. Defaults are the reference rules.
struct Rules {
  std::array<RoleSheet, kDefenderCount> roles = {{
      {6, DamageType::Magic, 0, 4, 0, 2},     // Mage
      {3, DamageType::Magic, 1, 1, 0, 0},     // Healer
      {5, DamageType::Physical, 4, 0, 0, 0},  // Tank
      {8, DamageType::Physical, 0, 0, 5, 0},  // Sharpshooter
  }};

  int defender_max_health = 100;
  int defender_max_energy = 1000;
  int defender_regen = 1;

  int move_cost = 5;
  int shoot_cost = 10;
  int heal_cost = 50;
  int special_cost = 200;
  int heal_amount = 20;

  int party_heal_amount = 50;
  int cannon_damage = 12;
  int cannon_pen = 10;
  int cannon_width = 3;
  int clear_lane_damage = 25;
  int clear_lane_pen = 10;

  int attacker_start_energy = 100;
  int attacker_start_cap = 200;
  int attacker_cap_growth = 1;
  int attacker_regen = 2;

  CostModel cost;

  void validate() const;
  bool operator==(const Rules&) const = default;
};

/// Generative parameters of one attacker unit.
struct UnitSpec {
  int lane = 0;
  int health = 1;     // 1..15
  int damage = 1;     // 1..5
  int speed = 1;      // 1..5
  int range = 1;      // 1..25
  int regen = 0;      // 0..3
  int leech = 0;      // 0..5
  int phys_def = 0;   // 0..5
  int magic_def = 0;  // 0..5
  int phys_pen = 0;   // 0..5
  int magic_pen = 0;  // 0..5
  DamageType dtype = DamageType::Physical;

  bool operator==(const UnitSpec&) const = default;
};

struct UnitLimits {
  static constexpr int health_min = 1, health_max = 15;
  static constexpr int damage_min = 1, damage_max = 5;
  static constexpr int speed_min = 1, speed_max = 5;
  static constexpr int range_min = 1, range_max = 25;
  static constexpr int regen_max = 3;
  static constexpr int leech_max = 5;
  static constexpr int def_max = 5;
  static constexpr int pen_max = 5;
};

/// True when every field is inside its documented range and lane < lanes.
bool is_valid(const UnitSpec& spec, int lanes = 10) noexcept;

struct DefenderState {
  Role role = Role::Mage;
  int x = 0;
  int y = 0;
  int health = 0;
  int energy = 0;
  bool operator==(const DefenderState&) const = default;
};

struct AttackerState {
  int energy = 0;
  int max_energy = 0;
  bool operator==(const AttackerState&) const = default;
};

struct UnitInstance {
  UnitSpec spec;  // defences may be zeroed by the Mage debuff
  int y = 0;
  int health = 0;
  int spawn_tick = 0;
  std::uint64_t id = 0;
  bool operator==(const UnitInstance&) const = default;
};

struct AttackerAction {
  bool spawn = false;
  UnitSpec spec;
  bool operator==(const AttackerAction&) const = default;
};

using DefenderActions = std::array<DefenderAction, kDefenderCount>;

struct GameState {
  GridConfig grid;
  Rules rules;
  int tick = 0;
  std::array<DefenderState, kDefenderCount> defenders{};
  AttackerState attacker;
  std::vector<UnitInstance> units;  // ascending id
  std::uint64_t next_unit_id = 0;
  bool breached = false;
  Terminal terminal = Terminal::None;
  Rng rng;

  bool operator==(const GameState&) const = default;
};

/// Per-unit bookkeeping for one tick; used by traces and invariant checks.
struct UnitTickEvent {
  std::uint64_t id = 0;
  int advanced = 0;
  bool attacked = false;
  bool breached = false;
};

struct StepOutcome {
  Terminal terminal = Terminal::None;
  int kills = 0;
  bool spawn_failed = false;
  bool spawned = false;
  DefenderActions executed{};  // after insufficient-energy degradation
  std::vector<UnitTickEvent> unit_events;
};

GameState new_game(const GridConfig& config, std::uint64_t seed, const Rules& rules = {});

/// Energy price of spawning `spec` under `model`.
std::int64_t spawn_cost(const UnitSpec& spec, const CostModel& model = {});

/// Flat mitigation: the matching defence is reduced by penetration, then
/// subtracted from the attack. Never below 1.
int compute_damage(int attack_damage, DamageType dtype, int pen, int target_phys_def,
                   int target_magic_def) noexcept;

/// Advances the game by one tick in place. Throws UsageError on a finished game
/// or an invalid spawn spec.
StepOutcome step(GameState& state, const DefenderActions& defender_actions,
                 const AttackerAction& attacker_action);

/// Terminal status implied by `state` alone.
Terminal check_termination(const GameState& state) noexcept;

/// Energy cost of a defender action under `rules`.
int action_cost(DefenderAction action, const Rules& rules) noexcept;

}  // namespace lanedef
