#pragma once

// Experiment orchestration: random opponents, training and evaluation runs,
// persistence of their outputs, and offline trace analysis.
//
// A run directory holds
//   summary.json                 mode, status, config echo, stats, length series
//   episodes.csv                 one row per recorded game
//   updates.csv                  one row per side per PPO update (training modes)
//   traces/ep_<n>.log            one trace per recorded game
//   eval/traces/ep_<n>.log       post-training evaluation games
//   checkpoints/<side>_<ep>.bin  actor; <side>_critic_<ep>.bin holds the critic
//
// In training modes only games won by the attacker advance the episode
// counter; truncated games are still recorded and trained on.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lanedef/config.hpp"
#include "lanedef/metrics.hpp"
#include "lanedef/ppo.hpp"

namespace lanedef {

DefenderAction random_defender_policy(Rng& rng);
/// Spawns with probability `spawn_prob`; every unit field is uniform over its range.
AttackerAction random_attacker_policy(Rng& rng, double spawn_prob = 0.5, int lanes = 10);

DefenderScript random_defender_script();
AttackerScript random_attacker_script(double spawn_prob = 0.5);
/// Spawns the cheapest legal unit in lane 0 whenever it can afford one.
AttackerScript minimal_spawner_script();

struct EpisodeRow {
  std::int64_t game = 0;
  std::uint64_t seed = 0;
  int length = 0;
  Terminal outcome = Terminal::None;
  bool counted = false;
  StrategyCounts detectors;
};

struct RunSummary {
  Mode mode = Mode::Baseline;
  std::string status = "ok";  // "ok" or "aborted: <reason>"
  ExperimentConfig config;
  std::optional<StrategyStats> stats;       // over recorded games
  std::optional<StrategyStats> eval_stats;  // post-training evaluation
  std::vector<EpisodeRow> episodes;
  std::vector<int> episode_lengths;  // one per recorded game, in play order
  int counted_episodes = 0;
  int updates = 0;
  std::int64_t ticks = 0;
  int skipped_traces = 0;  // analyze only
  double wall_seconds = 0.0;
};

/// Runs the configured mode and writes its outputs under config.out_dir.
/// Throws ConfigError/UsageError for bad input, TrainingError when an update
/// diverges and std::runtime_error for I/O failures; in the last two cases
/// summary.json is written first with an "aborted" status. Progress lines go
/// to `progress` when given.
RunSummary run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Loads every *.log under `dir`, skipping unreadable ones with a warning on
/// `warnings` (if non-null). Throws UsageError if nothing could be loaded.
RunSummary analyze(const std::filesystem::path& dir, std::ostream* warnings = nullptr);

std::string summary_to_json(const RunSummary& summary);
std::string episodes_csv(const RunSummary& summary);

}  // namespace lanedef
