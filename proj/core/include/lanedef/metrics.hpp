#pragma once

// Episode traces and emergent-strategy detectors.
//
// Spreading  maximal runs of >= 5 consecutive ticks with all four defender
//            lanes pairwise distinct; each run counts once.
// Focusing   maximal runs of >= 2 consecutive ticks with some lane holding
//            at least three defenders.
// Flanking   far-left spawns (lane 0/1) greedily paired, in time order, with
//            the earliest unpaired far-right spawn (lane 8/9) at |dt| <= 1.
// Tandem     spawns into lane L at tick t when lane L also saw a spawn at t-1.
//
// Only spawns that created a unit are events; failed attempts are ignored.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lanedef/engine.hpp"

namespace lanedef {

using LaneSnapshot = std::array<int, kDefenderCount>;

struct TickRecord {
  int tick = 0;
  LaneSnapshot lanes{};
  std::array<int, kDefenderCount> health{};
  std::array<int, kDefenderCount> energy{};
  DefenderActions actions{};  // as executed
  std::optional<UnitSpec> spawn;
  bool spawn_failed = false;
  int kills = 0;
  Terminal terminal = Terminal::None;

  bool operator==(const TickRecord&) const = default;
};

struct EpisodeTrace {
  GridConfig config;
  std::uint64_t seed = 0;
  std::int64_t episode = 0;
  std::vector<TickRecord> ticks;
  Terminal outcome = Terminal::None;

  int length() const { return static_cast<int>(ticks.size()); }
  bool operator==(const EpisodeTrace&) const = default;
};

/// Record of the tick that produced `after` (whose tick counter is already advanced).
TickRecord make_tick_record(const GameState& after, const StepOutcome& outcome, const AttackerAction& action);

struct SpawnEvent {
  int tick = 0;
  int lane = 0;
  bool operator==(const SpawnEvent&) const = default;
};

std::vector<SpawnEvent> spawn_events(const EpisodeTrace& trace);
std::vector<LaneSnapshot> lane_history(const EpisodeTrace& trace);

int detect_spreading(std::span<const LaneSnapshot> lanes);
int detect_focusing(std::span<const LaneSnapshot> lanes);
int detect_flanking(std::span<const SpawnEvent> spawns);
int detect_tandem(std::span<const SpawnEvent> spawns);

int detect_spreading(const EpisodeTrace& trace);
int detect_focusing(const EpisodeTrace& trace);
int detect_flanking(const EpisodeTrace& trace);
int detect_tandem(const EpisodeTrace& trace);

enum class Strategy : std::uint8_t { Spreading, Focusing, Flanking, Tandem };
inline constexpr std::array<Strategy, 4> kStrategies{Strategy::Spreading, Strategy::Focusing,
                                                     Strategy::Flanking, Strategy::Tandem};
std::string_view to_string(Strategy s) noexcept;

struct StrategyCounts {
  std::array<int, 4> counts{};  // indexed by Strategy
  int length = 0;

  int operator[](Strategy s) const { return counts[static_cast<std::size_t>(s)]; }
};

StrategyCounts detect_all(const EpisodeTrace& trace);

struct StrategyRow {
  Strategy strategy = Strategy::Spreading;
  double avg_uses = 0.0;
  double usage_rate = 0.0;
};

struct StrategyStats {
  std::array<StrategyRow, 4> rows{};  // Spreading, Focusing, Flanking, Tandem
  double avg_episode_length = 0.0;
  std::size_t episodes = 0;

  const StrategyRow& operator[](Strategy s) const { return rows[static_cast<std::size_t>(s)]; }
};

/// Running aggregation over per-episode detector counts.
class StatsAccumulator {
 public:
  void add(const StrategyCounts& counts);
  std::size_t episodes() const { return episodes_; }
  /// Throws UsageError when no episode has been added.
  StrategyStats finish() const;

 private:
  std::array<std::int64_t, 4> uses_{};
  std::array<std::int64_t, 4> used_{};
  std::int64_t length_sum_ = 0;
  std::size_t episodes_ = 0;
};

StrategyStats aggregate(std::span<const EpisodeTrace> traces);
StrategyStats aggregate(std::span<const StrategyCounts> counts);

/// One header line plus one row per strategy, then the episode-length row.
std::string stats_csv(const StrategyStats& stats);
/// Human-readable table in the layout of the strategy-frequency report.
std::string format_report(const StrategyStats& stats, std::string_view title);

}  // namespace lanedef
