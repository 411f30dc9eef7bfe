#include "lanedef/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "lanedef/checkpoint.hpp"
#include "lanedef/errors.hpp"
#include "lanedef/trace_io.hpp"

namespace fs = std::filesystem;

namespace lanedef {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Random and scripted opponents

DefenderAction random_defender_policy(Rng& rng) {
  return static_cast<DefenderAction>(rng.uniform_int(0, kDefenderActionCount - 1));
}

AttackerAction random_attacker_policy(Rng& rng, double spawn_prob, int lanes) {
  using L = UnitLimits;
  AttackerAction a;
  a.spawn = rng.uniform() < spawn_prob;
  UnitSpec& u = a.spec;
  // Fields are drawn even without a spawn so each tick consumes the same stream length.
  u.lane = rng.uniform_int(0, lanes - 1);
  u.health = rng.uniform_int(L::health_min, L::health_max);
  u.damage = rng.uniform_int(L::damage_min, L::damage_max);
  u.speed = rng.uniform_int(L::speed_min, L::speed_max);
  u.range = rng.uniform_int(L::range_min, L::range_max);
  u.regen = rng.uniform_int(0, L::regen_max);
  u.leech = rng.uniform_int(0, L::leech_max);
  u.phys_def = rng.uniform_int(0, L::def_max);
  u.magic_def = rng.uniform_int(0, L::def_max);
  u.phys_pen = rng.uniform_int(0, L::pen_max);
  u.magic_pen = rng.uniform_int(0, L::pen_max);
  u.dtype = rng.uniform_int(0, 1) == 1 ? DamageType::Magic : DamageType::Physical;
  return a;
}

DefenderScript random_defender_script() {
  return [](const GameState&, int, Rng& rng) { return random_defender_policy(rng); };
}

AttackerScript random_attacker_script(double spawn_prob) {
  return [spawn_prob](const GameState& s, Rng& rng) { return random_attacker_policy(rng, spawn_prob, s.grid.lanes); };
}

AttackerScript minimal_spawner_script() {
  return [](const GameState& s, Rng&) {
    AttackerAction a;
    a.spec = UnitSpec{};
    a.spawn = s.attacker.energy >= spawn_cost(a.spec, s.rules.cost);
    return a;
  };
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

ordered_json stats_json(const StrategyStats& s) {
  ordered_json j;
  for (const auto& r : s.rows)
    j[std::string(to_string(r.strategy))] = {{"avg_uses", r.avg_uses}, {"usage_rate", r.usage_rate}};
  j["avg_episode_length"] = s.avg_episode_length;
  j["episodes"] = s.episodes;
  return j;
}

std::string csv_header() { return "game,seed,length,outcome,counted,spreading,focusing,flanking,tandem\n"; }

std::string csv_row(const EpisodeRow& r) {
  std::ostringstream os;
  os << r.game << ',' << r.seed << ',' << r.length << ',' << to_string(r.outcome) << ',' << (r.counted ? 1 : 0);
  for (int c : r.detectors.counts) os << ',' << c;
  os << '\n';
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

std::string summary_to_json(const RunSummary& s) {
  ordered_json j;
  j["mode"] = std::string(to_string(s.mode));
  j["status"] = s.status;
  j["counted_episodes"] = s.counted_episodes;
  j["games"] = s.episodes.size();
  j["ticks"] = s.ticks;
  j["updates"] = s.updates;
  j["wall_seconds"] = s.wall_seconds;
  if (s.mode == Mode::Analyze) j["skipped_traces"] = s.skipped_traces;
  j["stats"] = s.stats ? stats_json(*s.stats) : ordered_json(nullptr);
  j["eval_stats"] = s.eval_stats ? stats_json(*s.eval_stats) : ordered_json(nullptr);
  j["episode_lengths"] = s.episode_lengths;
  j["config"] = ordered_json::parse(config_to_json(s.config));
  return j.dump(2) + "\n";
}

std::string episodes_csv(const RunSummary& s) {
  std::string out = csv_header();
  for (const auto& r : s.episodes) out += csv_row(r);
  return out;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

class Recorder {
 public:
  Recorder(RunSummary& summary, const fs::path& out, bool write_traces)
      : summary_(summary), traces_(out / "traces"), write_traces_(write_traces) {
    if (write_traces_) ensure_dir(traces_);
    csv_.open(out / "episodes.csv", std::ios::binary | std::ios::trunc);
    if (!csv_) throw std::runtime_error("cannot write " + (out / "episodes.csv").string());
    csv_ << csv_header();
  }

  void add(const EpisodeTrace& trace, bool counted) {
    EpisodeRow row;
    row.game = static_cast<std::int64_t>(summary_.episodes.size());
    row.seed = trace.seed;
    row.length = trace.length();
    row.outcome = trace.outcome;
    row.counted = counted;
    row.detectors = detect_all(trace);
    acc_.add(row.detectors);
    if (write_traces_) write_trace(traces_ / trace_file_name(row.game), trace);
    csv_ << csv_row(row);
    csv_.flush();
    if (!csv_) throw std::runtime_error("write to episodes.csv failed");
    summary_.ticks += row.length;
    summary_.episode_lengths.push_back(row.length);
    summary_.episodes.push_back(row);
    if (counted) ++summary_.counted_episodes;
  }

  void finish() {
    if (acc_.episodes() > 0) summary_.stats = acc_.finish();
  }

 private:
  RunSummary& summary_;
  fs::path traces_;
  bool write_traces_;
  std::ofstream csv_;
  StatsAccumulator acc_;
};

NetSpec with_hidden(NetSpec spec, const std::vector<int>& hidden) {
  spec.hidden = hidden;
  return spec;
}

struct Snapshot {
  std::optional<Mlp> defender;
  std::optional<Mlp> attacker;
};

// A file is loaded on its own side (told apart by input width) and its
// other-side sibling is picked up when present. A directory yields the
// latest episode that has any actor checkpoint.
Snapshot load_snapshot(const fs::path& path) {
  Snapshot snap;
  auto place = [&](const fs::path& p) {
    Mlp net = load_checkpoint(p);
    if (net.spec().input_dim == kDefenderObsSize)
      snap.defender = std::move(net);
    else if (net.spec().input_dim == kAttackerObsSize)
      snap.attacker = std::move(net);
    else
      throw UsageError("checkpoint " + p.string() + " fits neither side");
  };
  fs::path dir;
  std::string ep;
  if (fs::is_directory(path)) {
    long best = -1;
    for (const auto& e : fs::directory_iterator(path)) {
      const std::string name = e.path().filename().string();
      for (const char* side : {"defender_", "attacker_"}) {
        const std::string pre = side;
        if (name.rfind(pre, 0) != 0 || e.path().extension() != ".bin") continue;
        const std::string num = name.substr(pre.size(), name.size() - pre.size() - 4);
        if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) continue;
        best = std::max(best, std::stol(num));
      }
    }
    if (best < 0) throw UsageError("no actor checkpoints in " + path.string());
    dir = path;
    ep = std::to_string(best);
    for (const char* side : {"defender_", "attacker_"})
      if (fs::exists(dir / (side + ep + ".bin"))) place(dir / (side + ep + ".bin"));
    return snap;
  }
  if (!fs::exists(path)) throw UsageError("checkpoint " + path.string() + " does not exist");
  place(path);
  const std::string name = path.filename().string();
  for (const auto& [from, to] : {std::pair{"defender_", "attacker_"}, std::pair{"attacker_", "defender_"}}) {
    if (name.rfind(from, 0) != 0) continue;
    const fs::path sibling = path.parent_path() / (to + name.substr(std::string(from).size()));
    if (fs::exists(sibling)) place(sibling);
  }
  return snap;
}

void save_side(const fs::path& dir, const char* side, const ActorCritic& ac, int episode) {
  const std::string ep = std::to_string(episode);
  save_checkpoint(ac.policy, dir / (std::string(side) + "_" + ep + ".bin"));
  save_checkpoint(ac.critic, dir / (std::string(side) + "_critic_" + ep + ".bin"));
}

// Seed streams kept apart from the per-game stream mix_seed(master, k).
constexpr std::uint64_t kInitStream = 0x1A17'0000'0000'0001ULL;
constexpr std::uint64_t kUpdateStream = 0x1A17'0000'0000'0002ULL;
constexpr std::uint64_t kEvalStream = 0x1A17'0000'0000'0003ULL;

class Run {
 public:
  Run(const ExperimentConfig& cfg, std::ostream* progress) : cfg_(cfg), progress_(progress) {
    summary_.mode = cfg.mode;
    summary_.config = cfg;
  }

  RunSummary execute() {
    const auto start = std::chrono::steady_clock::now();
    ensure_dir(cfg_.out_dir);
    try {
      switch (cfg_.mode) {
        case Mode::Baseline: play(random_controllers(), cfg_.episodes, cfg_.master_seed, cfg_.out_dir, summary_); break;
        case Mode::Eval: evaluate(); break;
        case Mode::CoTrain:
        case Mode::AblateDefender:
        case Mode::AblateAttacker: train(); break;
        case Mode::Analyze: {
          const RunSummary a = analyze(cfg_.traces_dir, progress_);
          summary_.stats = a.stats;
          summary_.episodes = a.episodes;
          summary_.episode_lengths = a.episode_lengths;
          summary_.counted_episodes = a.counted_episodes;
          summary_.ticks = a.ticks;
          summary_.skipped_traces = a.skipped_traces;
          write_text(cfg_.out_dir / "episodes.csv", episodes_csv(summary_));
          if (summary_.stats) write_text(cfg_.out_dir / "report.csv", stats_csv(*summary_.stats));
          break;
        }
      }
    } catch (const TrainingError& e) {
      abort_with(e.what(), start);
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      abort_with(e.what(), start);
      throw;
    }
    summary_.wall_seconds = seconds_since(start);
    write_text(cfg_.out_dir / "summary.json", summary_to_json(summary_));
    return summary_;
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  }

  void abort_with(const std::string& why, std::chrono::steady_clock::time_point start) {
    summary_.status = "aborted: " + why;
    summary_.wall_seconds = seconds_since(start);
    try {
      write_text(cfg_.out_dir / "summary.json", summary_to_json(summary_));
    } catch (const std::exception&) {
      // Nothing more can be written; the original error is rethrown by the caller.
    }
  }

  Controllers random_controllers() const {
    Controllers c;
    c.defender_script = random_defender_script();
    c.attacker_script = random_attacker_script(cfg_.random_spawn_prob);
    return c;
  }

  // Plays `games` complete games without learning into `dir`.
  void play(const Controllers& c, int games, std::uint64_t seed, const fs::path& dir, RunSummary& target) {
    RolloutCollector collector(cfg_.grid, cfg_.rules, cfg_.rewards, seed);
    Recorder rec(target, dir, cfg_.write_traces);
    for (int k = 0; k < games; ++k) rec.add(collector.play_episode(c), true);
    rec.finish();
  }

  void evaluate() {
    if (cfg_.checkpoint.empty()) throw UsageError("eval needs a checkpoint path");
    const Snapshot snap = load_snapshot(cfg_.checkpoint);
    Controllers c = random_controllers();
    if (snap.defender) c.defender_policy = &*snap.defender;
    if (snap.attacker) c.attacker_policy = &*snap.attacker;
    play(c, cfg_.episodes, cfg_.master_seed, cfg_.out_dir, summary_);
  }

  void train() {
    const bool learn_def = cfg_.mode != Mode::AblateAttacker;
    const bool learn_att = cfg_.mode != Mode::AblateDefender;
    Rng init(mix_seed(cfg_.master_seed, kInitStream));
    std::optional<ActorCritic> def;
    std::optional<ActorCritic> att;
    if (learn_def)
      def.emplace(with_hidden(defender_policy_spec(), cfg_.hidden), with_hidden(defender_value_spec(), cfg_.hidden),
                  init);
    if (learn_att)
      att.emplace(with_hidden(attacker_policy_spec(), cfg_.hidden), with_hidden(attacker_value_spec(), cfg_.hidden),
                  init);

    Controllers c = random_controllers();
    if (def) {
      c.defender_policy = &def->policy;
      c.defender_critic = &def->critic;
    }
    if (att) {
      c.attacker_policy = &att->policy;
      c.attacker_critic = &att->critic;
    }

    const fs::path ckpt_dir = cfg_.out_dir / "checkpoints";
    ensure_dir(ckpt_dir);
    std::ofstream updates(cfg_.out_dir / "updates.csv", std::ios::binary | std::ios::trunc);
    if (!updates) throw std::runtime_error("cannot write updates.csv");
    updates << "update,side,ticks,games,counted,policy_loss,value_loss,entropy,clip_fraction,approx_kl,"
               "minibatches,samples\n";
    updates.precision(10);

    auto checkpoint = [&](int episode) {
      if (def) save_side(ckpt_dir, "defender", *def, episode);
      if (att) save_side(ckpt_dir, "attacker", *att, episode);
    };

    RolloutCollector collector(cfg_.grid, cfg_.rules, cfg_.rewards, cfg_.master_seed);
    Recorder rec(summary_, cfg_.out_dir, cfg_.write_traces);
    Rng update_rng(mix_seed(cfg_.master_seed, kUpdateStream));
    const std::int64_t max_games = static_cast<std::int64_t>(cfg_.episodes) * cfg_.max_games_factor;
    int last_checkpoint = -1;

    while (summary_.counted_episodes < cfg_.episodes) {
      if (static_cast<std::int64_t>(summary_.episodes.size()) >= max_games) {
        summary_.status = "stopped: game cap reached before the episode target";
        break;
      }
      Rollout rollout = collector.collect(c, cfg_.ppo.horizon);
      for (const auto& ep : rollout.episodes) {
        if (summary_.counted_episodes >= cfg_.episodes) break;
        const bool counted = is_attacker_win(ep.outcome);
        rec.add(ep, counted);
        if (counted && cfg_.checkpoint_every > 0 && summary_.counted_episodes % cfg_.checkpoint_every == 0 &&
            summary_.counted_episodes != last_checkpoint) {
          checkpoint(summary_.counted_episodes);
          last_checkpoint = summary_.counted_episodes;
        }
      }

      ++summary_.updates;
      auto log_update = [&](const char* side, const UpdateStats& s) {
        updates << summary_.updates << ',' << side << ',' << summary_.ticks << ',' << summary_.episodes.size() << ','
                << summary_.counted_episodes << ',' << s.policy_loss << ',' << s.value_loss << ',' << s.entropy
                << ',' << s.clip_fraction << ',' << s.approx_kl << ',' << s.minibatches << ',' << s.samples << '\n';
        updates.flush();
        if (!updates) throw std::runtime_error("write to updates.csv failed");
      };
      try {
        if (def) log_update("defender", ppo_update(rollout.defender, defender_action_layout(), *def, cfg_.ppo, update_rng));
        if (att) log_update("attacker", ppo_update(rollout.attacker, attacker_action_layout(), *att, cfg_.ppo, update_rng));
      } catch (const TrainingError& e) {
        dump_diagnostic(e.what(), rollout);
        throw;
      }
      if (progress_) {
        const auto n = summary_.episode_lengths.size();
        const std::size_t w = std::min<std::size_t>(n, 50);
        double recent = 0.0;
        for (std::size_t i = n - w; i < n; ++i) recent += summary_.episode_lengths[i];
        *progress_ << "update " << summary_.updates << ": games " << n << ", counted " << summary_.counted_episodes
                   << ", mean length (last " << w << ") " << (w ? recent / static_cast<double>(w) : 0.0) << '\n';
      }
    }
    rec.finish();
    if (summary_.counted_episodes != last_checkpoint) checkpoint(summary_.counted_episodes);

    if (cfg_.eval_episodes > 0) {
      Controllers ec = random_controllers();
      if (def) ec.defender_policy = &def->policy;
      if (att) ec.attacker_policy = &att->policy;
      RunSummary eval;
      const fs::path eval_dir = cfg_.out_dir / "eval";
      ensure_dir(eval_dir);
      play(ec, cfg_.eval_episodes, mix_seed(cfg_.master_seed, kEvalStream), eval_dir, eval);
      summary_.eval_stats = eval.stats;
    }
  }

  void dump_diagnostic(const std::string& what, const Rollout& rollout) {
    ordered_json d;
    d["error"] = what;
    d["update"] = summary_.updates;
    d["games"] = summary_.episodes.size();
    d["ticks"] = summary_.ticks;
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    d["defender_buffer"] = {{"size", rollout.defender.size()},
                            {"rewards_finite", finite(rollout.defender.rewards)},
                            {"values_finite", finite(rollout.defender.values)}};
    d["attacker_buffer"] = {{"size", rollout.attacker.size()},
                            {"rewards_finite", finite(rollout.attacker.rewards)},
                            {"values_finite", finite(rollout.attacker.values)}};
    try {
      write_text(cfg_.out_dir / "diagnostic.json", d.dump(2) + "\n");
    } catch (const std::exception&) {
      // Best effort; the training error is what gets reported.
    }
  }

  const ExperimentConfig& cfg_;
  std::ostream* progress_;
  RunSummary summary_;
};

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  return Run(config, progress).execute();
}

RunSummary analyze(const fs::path& dir, std::ostream* warnings) {
  if (!fs::is_directory(dir)) throw UsageError("trace directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".log") files.push_back(e.path());
  // Numeric order for ep_<n>.log, name order otherwise.
  auto key = [](const fs::path& p) {
    const std::string stem = p.stem().string();
    if (stem.rfind("ep_", 0) == 0) {
      const std::string num = stem.substr(3);
      if (!num.empty() && std::all_of(num.begin(), num.end(), ::isdigit))
        return std::pair<long long, std::string>{std::stoll(num), stem};
    }
    return std::pair<long long, std::string>{-1, stem};
  };
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) { return key(a) < key(b); });

  RunSummary s;
  s.mode = Mode::Analyze;
  s.config.mode = Mode::Analyze;
  s.config.traces_dir = dir;
  StatsAccumulator acc;
  for (const auto& f : files) {
    EpisodeTrace t;
    try {
      t = read_trace(f);
    } catch (const std::exception& e) {
      ++s.skipped_traces;
      if (warnings) *warnings << "warning: skipping " << f.string() << ": " << e.what() << '\n';
      continue;
    }
    EpisodeRow row;
    row.game = t.episode;
    row.seed = t.seed;
    row.length = t.length();
    row.outcome = t.outcome;
    row.counted = true;
    row.detectors = detect_all(t);
    acc.add(row.detectors);
    s.ticks += row.length;
    s.episode_lengths.push_back(row.length);
    s.episodes.push_back(row);
    ++s.counted_episodes;
  }
  if (acc.episodes() == 0)
    throw UsageError("no readable traces in " + dir.string() + " (" + std::to_string(s.skipped_traces) + " skipped)");
  s.stats = acc.finish();
  return s;
}

}  // namespace lanedef
