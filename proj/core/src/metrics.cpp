#include "lanedef/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lanedef/errors.hpp"

namespace lanedef {

TickRecord make_tick_record(const GameState& after, const StepOutcome& outcome, const AttackerAction& action) {
  TickRecord r;
  r.tick = after.tick - 1;
  for (int i = 0; i < kDefenderCount; ++i) {
    r.lanes[i] = after.defenders[i].x;
    r.health[i] = after.defenders[i].health;
    r.energy[i] = after.defenders[i].energy;
  }
  r.actions = outcome.executed;
  if (outcome.spawned) r.spawn = action.spec;
  r.spawn_failed = outcome.spawn_failed;
  r.kills = outcome.kills;
  r.terminal = outcome.terminal;
  return r;
}

std::vector<SpawnEvent> spawn_events(const EpisodeTrace& trace) {
  std::vector<SpawnEvent> events;
  for (const auto& t : trace.ticks)
    if (t.spawn) events.push_back({t.tick, t.spawn->lane});
  return events;
}

std::vector<LaneSnapshot> lane_history(const EpisodeTrace& trace) {
  std::vector<LaneSnapshot> lanes;
  lanes.reserve(trace.ticks.size());
  for (const auto& t : trace.ticks) lanes.push_back(t.lanes);
  return lanes;
}

namespace {

bool all_distinct(const LaneSnapshot& l) {
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i + 1; j < l.size(); ++j)
      if (l[i] == l[j]) return false;
  return true;
}

bool three_share(const LaneSnapshot& l) {
  for (int lane : l)
    if (std::count(l.begin(), l.end(), lane) >= 3) return true;
  return false;
}

template <typename Pred>
int count_runs(std::span<const LaneSnapshot> lanes, int min_len, Pred pred) {
  int events = 0;
  int run = 0;
  for (const auto& l : lanes) {
    if (pred(l)) {
      if (++run == min_len) ++events;
    } else {
      run = 0;
    }
  }
  return events;
}

bool far_left(int lane) { return lane == 0 || lane == 1; }
bool far_right(int lane) { return lane == 8 || lane == 9; }

}  // namespace

int detect_spreading(std::span<const LaneSnapshot> lanes) { return count_runs(lanes, 5, all_distinct); }
int detect_focusing(std::span<const LaneSnapshot> lanes) { return count_runs(lanes, 2, three_share); }

int detect_flanking(std::span<const SpawnEvent> spawns) {
  std::vector<SpawnEvent> left;
  std::vector<SpawnEvent> right;
  for (const auto& s : spawns) {
    if (far_left(s.lane)) left.push_back(s);
    if (far_right(s.lane)) right.push_back(s);
  }
  auto by_tick = [](const SpawnEvent& a, const SpawnEvent& b) { return a.tick < b.tick; };
  std::stable_sort(left.begin(), left.end(), by_tick);
  std::stable_sort(right.begin(), right.end(), by_tick);

  std::vector<bool> used(right.size(), false);
  int pairs = 0;
  for (const auto& l : left) {
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (used[j] || std::abs(right[j].tick - l.tick) > 1) continue;
      used[j] = true;
      ++pairs;
      break;
    }
  }
  return pairs;
}

int detect_tandem(std::span<const SpawnEvent> spawns) {
  int events = 0;
  for (const auto& s : spawns) {
    const bool follows = std::any_of(spawns.begin(), spawns.end(), [&](const SpawnEvent& p) {
      return p.lane == s.lane && p.tick == s.tick - 1;
    });
    if (follows) ++events;
  }
  return events;
}

int detect_spreading(const EpisodeTrace& t) { return detect_spreading(lane_history(t)); }
int detect_focusing(const EpisodeTrace& t) { return detect_focusing(lane_history(t)); }
int detect_flanking(const EpisodeTrace& t) { return detect_flanking(spawn_events(t)); }
int detect_tandem(const EpisodeTrace& t) { return detect_tandem(spawn_events(t)); }

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Spreading: return "spreading";
    case Strategy::Focusing: return "focusing";
    case Strategy::Flanking: return "flanking";
    case Strategy::Tandem: return "tandem";
  }
  return "?";
}

StrategyCounts detect_all(const EpisodeTrace& trace) {
  const auto lanes = lane_history(trace);
  const auto spawns = spawn_events(trace);
  StrategyCounts c;
  c.counts = {detect_spreading(lanes), detect_focusing(lanes), detect_flanking(spawns), detect_tandem(spawns)};
  c.length = trace.length();
  return c;
}

void StatsAccumulator::add(const StrategyCounts& c) {
  for (std::size_t i = 0; i < 4; ++i) {
    uses_[i] += c.counts[i];
    used_[i] += c.counts[i] > 0 ? 1 : 0;
  }
  length_sum_ += c.length;
  ++episodes_;
}

StrategyStats StatsAccumulator::finish() const {
  if (episodes_ == 0) throw UsageError("aggregate: no episodes");
  StrategyStats s;
  const auto n = static_cast<double>(episodes_);
  for (std::size_t i = 0; i < 4; ++i) {
    s.rows[i].strategy = kStrategies[i];
    s.rows[i].avg_uses = static_cast<double>(uses_[i]) / n;
    s.rows[i].usage_rate = static_cast<double>(used_[i]) / n;
  }
  s.avg_episode_length = static_cast<double>(length_sum_) / n;
  s.episodes = episodes_;
  return s;
}

StrategyStats aggregate(std::span<const EpisodeTrace> traces) {
  StatsAccumulator acc;
  for (const auto& t : traces) acc.add(detect_all(t));
  return acc.finish();
}

StrategyStats aggregate(std::span<const StrategyCounts> counts) {
  StatsAccumulator acc;
  for (const auto& c : counts) acc.add(c);
  return acc.finish();
}

std::string stats_csv(const StrategyStats& s) {
  std::ostringstream os;
  os.precision(17);
  os << "metric,avg_uses_per_episode,usage_rate\n";
  for (const auto& r : s.rows) os << to_string(r.strategy) << ',' << r.avg_uses << ',' << r.usage_rate << '\n';
  os << "avg_episode_length," << s.avg_episode_length << ",\n";
  os << "episodes," << s.episodes << ",\n";
  return os.str();
}

std::string format_report(const StrategyStats& s, std::string_view title) {
  auto row = [](std::string_view agent, std::string_view name, double uses, double rate) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-9s %-22s %10.4f  %7.2f%%\n", std::string(agent).c_str(),
                  std::string(name).c_str(), uses, rate * 100.0);
    return std::string(buf);
  };
  std::string out;
  out += std::string(title) + "\n";
  out += "agent     strategy               uses/ep      usage\n";
  out += "--------- ---------------------- ----------  --------\n";
  out += row("defender", "cooperative spreading", s[Strategy::Spreading].avg_uses, s[Strategy::Spreading].usage_rate);
  out += row("", "cooperative focusing", s[Strategy::Focusing].avg_uses, s[Strategy::Focusing].usage_rate);
  out += row("attacker", "flanking", s[Strategy::Flanking].avg_uses, s[Strategy::Flanking].usage_rate);
  out += row("", "tandem", s[Strategy::Tandem].avg_uses, s[Strategy::Tandem].usage_rate);
  char buf[160];
  std::snprintf(buf, sizeof buf, "avg episode length: %.2f ticks over %zu episodes\n", s.avg_episode_length,
                s.episodes);
  out += buf;
  return out;
}

}  // namespace lanedef
