// lanedef: run co-training, baselines, ablations, evaluation and trace analysis.

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "lanedef/config.hpp"
#include "lanedef/errors.hpp"
#include "lanedef/harness.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file (any subset of keys)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--episodes", f.episodes, "Episode target")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("-q,--quiet", f.quiet, "No progress output");
}

lanedef::ExperimentConfig make_config(const CommonFlags& f, lanedef::Mode mode) {
  lanedef::ExperimentConfig cfg = f.config.empty() ? lanedef::ExperimentConfig{} : lanedef::load_config(f.config);
  cfg.mode = mode;
  if (f.seed) cfg.master_seed = *f.seed;
  if (f.episodes) cfg.episodes = *f.episodes;
  if (!f.out.empty()) cfg.out_dir = f.out;
  return cfg;
}

void report(const lanedef::RunSummary& s) {
  std::cout << "mode: " << lanedef::to_string(s.mode) << "  status: " << s.status << '\n';
  if (s.stats) std::cout << '\n' << lanedef::format_report(*s.stats, "recorded games");
  if (s.eval_stats) std::cout << '\n' << lanedef::format_report(*s.eval_stats, "evaluation games (final policies)");
  if (s.mode == lanedef::Mode::Analyze) std::cout << "skipped traces: " << s.skipped_traces << '\n';
  std::cout << "\nwall clock: " << s.wall_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-defense co-evolution simulator and PPO harness"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* train = app.add_subcommand("train", "Co-train defenders and attacker");
  add_common(train, flags);

  auto* baseline = app.add_subcommand("baseline", "Both sides uniformly random, no learning");
  add_common(baseline, flags);

  std::string side;
  auto* ablate = app.add_subcommand("ablate", "Train one side against a random opponent");
  add_common(ablate, flags);
  ablate->add_option("--side", side, "Side that learns")
      ->required()
      ->check(CLI::IsMember({"attacker", "defender"}));

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "Play games with saved policies");
  add_common(eval, flags);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file or checkpoints directory")->required();

  std::string traces;
  auto* analyze = app.add_subcommand("analyze", "Strategy report over a directory of traces");
  add_common(analyze, flags);
  analyze->add_option("--traces", traces, "Directory of ep_<n>.log files")->required();

  auto* show = app.add_subcommand("print-config", "Print the effective config as JSON");
  add_common(show, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    using lanedef::Mode;
    if (*show) {
      std::cout << lanedef::config_to_json(make_config(flags, Mode::CoTrain)) << '\n';
      return 0;
    }
    Mode mode = Mode::CoTrain;
    if (*baseline) mode = Mode::Baseline;
    if (*ablate) mode = side == "defender" ? Mode::AblateDefender : Mode::AblateAttacker;
    if (*eval) mode = Mode::Eval;
    if (*analyze) mode = Mode::Analyze;

    lanedef::ExperimentConfig cfg = make_config(flags, mode);
    if (*eval) cfg.checkpoint = checkpoint;
    if (*analyze) cfg.traces_dir = traces;
    const lanedef::RunSummary s = lanedef::run_experiment(cfg, flags.quiet ? nullptr : &std::cerr);
    report(s);
    std::cout << "outputs: " << cfg.out_dir.string() << '\n';
    return s.status == "ok" ? 0 : 1;
  } catch (const lanedef::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lanedef::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const lanedef::TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
