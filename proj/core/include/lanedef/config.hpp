#pragma once

// Experiment configuration and its JSON file form.
//
// Every field below maps to a key of the same name. Nested objects: "grid",
// "rules" (with "roles" as an array of four sheets and "cost"), "rewards",
// "ppo", "network". A file may list any subset of keys; the rest keep their
// defaults. Unknown keys are rejected so that typos do not silently vanish.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lanedef/engine.hpp"
#include "lanedef/obs_reward.hpp"
#include "lanedef/ppo.hpp"

namespace lanedef {

enum class Mode : std::uint8_t { CoTrain, Baseline, AblateDefender, AblateAttacker, Eval, Analyze };

std::string_view to_string(Mode m) noexcept;
/// Accepts the names produced by to_string; throws ConfigError otherwise.
Mode parse_mode(std::string_view name);

struct ExperimentConfig {
  Mode mode = Mode::CoTrain;
  int episodes = 500;
  std::uint64_t master_seed = 0;

  GridConfig grid;
  Rules rules;
  RewardConfig rewards;
  Hyperparams ppo;
  std::vector<int> hidden{128, 128};

  double random_spawn_prob = 0.5;
  int checkpoint_every = 50;  // counted episodes; 0 disables periodic checkpoints
  bool write_traces = true;
  int eval_episodes = 100;   // post-training evaluation games; 0 skips
  int max_games_factor = 20;  // training stops after episodes * factor games

  std::filesystem::path out_dir = "runs/latest";
  std::filesystem::path checkpoint;  // eval
  std::filesystem::path traces_dir;  // analyze

  /// Throws ConfigError.
  void validate() const;
};

std::string config_to_json(const ExperimentConfig& config, int indent = 2);
/// Overlays the keys present in `text` onto `base`. Throws ConfigError.
ExperimentConfig config_from_json(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace lanedef
