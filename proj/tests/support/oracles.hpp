#pragma once

// Independent re-implementations used to cross-check the library. Nothing in
// here calls the code it is checking.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lanedef/engine.hpp"
#include "lanedef/metrics.hpp"
#include "lanedef/rng.hpp"

namespace oracle {

using lanedef::EpisodeTrace;
using lanedef::LaneSnapshot;
using lanedef::SpawnEvent;

// ---------------------------------------------------------------------------
// Unit cost as an exact fraction: every factor (1 + p*k) is written as
// (den + num*k) / den with small integers, then one ceiling division.

inline std::int64_t unit_cost(const lanedef::UnitSpec& u) {
  struct F {
    __int128 n, d;
  };
  const F f[] = {
      {20 + 3 * (u.health - 1), 20},    // 1 + 0.15 (h - 1)
      {2 + (u.damage - 1), 2},          // 1 + 0.5 (d - 1)
      {5 + 2 * (u.speed - 1), 5},       // 1 + 0.4 (s - 1)
      {20 + u.range, 20},               // 1 + 0.05 r
      {5 + 3 * u.regen, 5},             // 1 + 0.6 regen
      {10 + 3 * u.leech, 10},           // 1 + 0.3 leech
      {10 + 3 * u.phys_def, 10},        // 1 + 0.3 pd
      {10 + 3 * u.magic_def, 10},       // 1 + 0.3 md
      {4 + u.phys_pen, 4},              // 1 + 0.25 pp
      {4 + u.magic_pen, 4},             // 1 + 0.25 mp
  };
  __int128 num = 10, den = 1;
  for (const F& x : f) {
    num *= x.n;
    den *= x.d;
  }
  return static_cast<std::int64_t>((num + den - 1) / den);
}

// ---------------------------------------------------------------------------
// Detectors, brute force.

inline bool pairwise_distinct(const LaneSnapshot& l) {
  std::set<int> s(l.begin(), l.end());
  return s.size() == l.size();
}

inline bool crowded(const LaneSnapshot& l) {
  std::map<int, int> n;
  for (int x : l) ++n[x];
  for (const auto& [lane, c] : n)
    if (c >= 3) return true;
  return false;
}

// Enumerates maximal runs [a, b] explicitly and keeps those of length >= min_len.
template <typename Pred>
int maximal_runs(const std::vector<LaneSnapshot>& lanes, int min_len, Pred pred) {
  const int n = static_cast<int>(lanes.size());
  int count = 0;
  for (int a = 0; a < n; ++a) {
    if (!pred(lanes[a]) || (a > 0 && pred(lanes[a - 1]))) continue;
    int b = a;
    while (b + 1 < n && pred(lanes[b + 1])) ++b;
    if (b - a + 1 >= min_len) ++count;
  }
  return count;
}

inline std::vector<LaneSnapshot> lanes_of(const EpisodeTrace& t) {
  std::vector<LaneSnapshot> v;
  for (const auto& r : t.ticks) v.push_back(r.lanes);
  return v;
}

inline std::vector<SpawnEvent> spawns_of(const EpisodeTrace& t) {
  std::vector<SpawnEvent> v;
  for (const auto& r : t.ticks)
    if (r.spawn && !r.spawn_failed) v.push_back({r.tick, r.spawn->lane});
  return v;
}

inline int spreading(const EpisodeTrace& t) { return maximal_runs(lanes_of(t), 5, pairwise_distinct); }
inline int focusing(const EpisodeTrace& t) { return maximal_runs(lanes_of(t), 2, crowded); }

inline int flanking(const std::vector<SpawnEvent>& spawns) {
  std::vector<std::pair<int, int>> left;   // (tick, order)
  std::vector<std::pair<int, int>> right;
  for (int i = 0; i < static_cast<int>(spawns.size()); ++i) {
    if (spawns[i].lane <= 1) left.push_back({spawns[i].tick, i});
    if (spawns[i].lane >= 8) right.push_back({spawns[i].tick, i});
  }
  std::sort(left.begin(), left.end());
  std::vector<bool> taken(right.size(), false);
  int pairs = 0;
  for (const auto& l : left) {
    int best = -1;
    for (int j = 0; j < static_cast<int>(right.size()); ++j) {
      if (taken[j] || std::abs(right[j].first - l.first) > 1) continue;
      if (best < 0 || right[j] < right[best]) best = j;
    }
    if (best >= 0) {
      taken[best] = true;
      ++pairs;
    }
  }
  return pairs;
}

inline int tandem(const std::vector<SpawnEvent>& spawns) {
  std::set<std::pair<int, int>> seen;  // (lane, tick)
  for (const auto& s : spawns) seen.insert({s.lane, s.tick});
  int n = 0;
  for (const auto& s : spawns) n += seen.count({s.lane, s.tick - 1}) ? 1 : 0;
  return n;
}

inline int flanking(const EpisodeTrace& t) { return flanking(spawns_of(t)); }
inline int tandem(const EpisodeTrace& t) { return tandem(spawns_of(t)); }

/// Random trace with lanes biased towards collisions and clustered spawns so
/// that every detector fires on a good share of inputs.
inline EpisodeTrace random_trace(lanedef::Rng& rng, int length) {
  EpisodeTrace t;
  t.seed = rng.next_u64();
  const int lane_span = rng.uniform_int(3, 10);
  const double spawn_p = rng.uniform() * 0.9;
  LaneSnapshot cur{rng.uniform_int(0, 9), rng.uniform_int(0, 9), rng.uniform_int(0, 9), rng.uniform_int(0, 9)};
  for (int k = 0; k < length; ++k) {
    lanedef::TickRecord r;
    r.tick = k;
    for (int& x : cur)
      if (rng.uniform() < 0.3) x = rng.uniform_int(0, lane_span - 1);
    r.lanes = cur;
    if (rng.uniform() < spawn_p) {
      lanedef::UnitSpec u;
      const int pick = rng.uniform_int(0, 4);
      u.lane = pick == 0 ? rng.uniform_int(0, 1) : pick == 1 ? rng.uniform_int(8, 9) : rng.uniform_int(0, 9);
      r.spawn = u;
    } else if (rng.uniform() < 0.2) {
      r.spawn_failed = true;
    }
    t.ticks.push_back(r);
  }
  t.outcome = lanedef::Terminal::AttackerWinBreach;
  if (!t.ticks.empty()) t.ticks.back().terminal = t.outcome;
  return t;
}

// ---------------------------------------------------------------------------
// Engine invariants checked across one step.

struct StepCheck {
  std::vector<std::string> violations;
  void fail(const std::string& what) { violations.push_back(what); }
};

inline int cost_of(lanedef::DefenderAction a, const lanedef::Rules& r) {
  using A = lanedef::DefenderAction;
  switch (a) {
    case A::MoveLeft:
    case A::MoveRight: return r.move_cost;
    case A::Shoot: return r.shoot_cost;
    case A::Heal: return r.heal_cost;
    case A::Special: return r.special_cost;
    case A::Noop: return 0;
  }
  return -1;
}

inline void check_step(const lanedef::GameState& before, const lanedef::DefenderActions& requested,
                       const lanedef::AttackerAction& att, const lanedef::GameState& after,
                       const lanedef::StepOutcome& out, StepCheck& c) {
  const auto& r = before.rules;
  const auto& g = before.grid;
  for (int i = 0; i < lanedef::kDefenderCount; ++i) {
    const auto& d0 = before.defenders[i];
    const auto& d1 = after.defenders[i];
    const int avail = std::min(r.defender_max_energy, d0.energy + r.defender_regen);
    const auto executed = out.executed[i];
    if (executed != requested[i] && executed != lanedef::DefenderAction::Noop)
      c.fail("defender " + std::to_string(i) + " executed an action it did not choose");
    if (executed != requested[i] && avail >= cost_of(requested[i], r))
      c.fail("defender " + std::to_string(i) + " action degraded despite enough energy");
    if (d1.energy != avail - cost_of(executed, r)) c.fail("defender energy not conserved");
    if (d1.y != d0.y) c.fail("defender row changed");
    if (d1.x < 0 || d1.x >= g.lanes) c.fail("defender off grid");
    if (d1.health < 0 || d1.health > r.defender_max_health) c.fail("defender health out of range");
    if (d1.energy < 0 || d1.energy > r.defender_max_energy) c.fail("defender energy out of range");
  }
  const int att_avail = std::min(before.attacker.max_energy, before.attacker.energy + r.attacker_regen);
  const std::int64_t spent = out.spawned ? unit_cost(att.spec) : 0;
  if (after.attacker.energy != att_avail - spent) c.fail("attacker energy not conserved");
  if (after.attacker.energy < 0 || after.attacker.energy > after.attacker.max_energy)
    c.fail("attacker energy out of range");
  if (after.attacker.max_energy < before.attacker.max_energy) c.fail("attacker cap decreased");
  if (out.spawned != (att.spawn && att_avail >= unit_cost(att.spec))) c.fail("spawn decision wrong");
  if (out.spawn_failed != (att.spawn && att_avail < unit_cost(att.spec))) c.fail("spawn_failed flag wrong");

  std::map<std::uint64_t, const lanedef::UnitInstance*> prev;
  for (const auto& u : before.units) prev[u.id] = &u;
  std::map<std::uint64_t, const lanedef::UnitTickEvent*> events;
  for (const auto& e : out.unit_events) events[e.id] = &e;
  for (const auto& u : after.units) {
    if (u.health <= 0 || u.health > u.spec.health) c.fail("live unit health out of range");
    if (u.y < 0 || u.y >= g.depth) c.fail("unit off grid");
    if (u.spec.lane < 0 || u.spec.lane >= g.lanes) c.fail("unit lane off grid");
    const auto ev = events.find(u.id);
    if (auto p = prev.find(u.id); p != prev.end()) {
      if (u.y > p->second->y) c.fail("unit moved backwards");
      if (ev != events.end() && p->second->y - u.y != ev->second->advanced) c.fail("unit advance miscounted");
    } else if (ev != events.end() && g.depth - 1 - u.y != ev->second->advanced) {
      c.fail("new unit advance miscounted");
    }
    if (ev != events.end()) {
      const auto& e = *ev->second;
      if (e.advanced > u.spec.speed) c.fail("unit exceeded its speed");
      if (e.attacked && e.advanced >= u.spec.speed) c.fail("unit attacked after a full advance");
      // A unit that stopped short without attacking must have breached.
      if (!e.attacked && e.advanced < u.spec.speed && !e.breached) c.fail("unit stopped short without cause");
      if (e.attacked) {
        bool engaged = false;
        for (const auto& d : after.defenders)
          engaged |= d.x == u.spec.lane && u.y - d.y <= u.spec.range;
        if (!engaged) c.fail("unit attacked without a defender in range");
      }
    }
  }
  if (after.tick != before.tick + 1) c.fail("tick did not advance by one");
  if (out.terminal != after.terminal) c.fail("outcome terminal disagrees with state");
  if (after.terminal == lanedef::Terminal::Truncated && after.tick != g.max_ticks)
    c.fail("truncation away from the tick cap");
  if (after.terminal == lanedef::Terminal::None && after.tick >= g.max_ticks) c.fail("missed truncation");
  bool any_down = false;
  for (const auto& d : after.defenders) any_down |= d.health <= 0;
  if (after.breached && after.terminal != lanedef::Terminal::AttackerWinBreach) c.fail("breach not terminal");
  if (!after.breached && any_down && after.terminal != lanedef::Terminal::AttackerWinDefenderDown)
    c.fail("defender down not terminal");
  const int removed = static_cast<int>(before.units.size()) + (out.spawned ? 1 : 0) -
                      static_cast<int>(after.units.size());
  if (removed != out.kills) c.fail("kill count disagrees with removed units");
}

}  // namespace oracle
