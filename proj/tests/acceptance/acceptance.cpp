// Acceptance suite: one pass/fail line per criterion.
//
//   lanedef_acceptance [--only N]... [--out DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lanedef/engine.hpp"
#include "lanedef/harness.hpp"
#include "lanedef/metrics.hpp"
#include "lanedef/policy_net.hpp"
#include "lanedef/ppo.hpp"
#include "support/detector_examples.hpp"
#include "support/gradcheck_cases.hpp"
#include "support/oracles.hpp"

using namespace lanedef;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 3) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

std::string pct(double rate) { return fmt(100.0 * rate, 3) + "%"; }

double rate(const StrategyStats& s, Strategy k) { return s[k].usage_rate; }

std::string rates(const StrategyStats& s) {
  std::string out;
  for (Strategy k : kStrategies) out += std::string(to_string(k)) + " " + pct(rate(s, k)) + ", ";
  return out + "length " + fmt(s.avg_episode_length, 4);
}

fs::path g_out;

// Runs are memoised so that criteria sharing a run (7 and 9) train it once.
std::map<std::string, RunSummary> g_runs;

const RunSummary& run(Mode mode, std::uint64_t seed) {
  const std::string key = std::string(to_string(mode)) + "_" + std::to_string(seed);
  if (auto it = g_runs.find(key); it != g_runs.end()) return it->second;
  ExperimentConfig c;
  c.mode = mode;
  c.master_seed = seed;
  c.episodes = 500;
  c.out_dir = g_out / key;
  std::cerr << "  running " << key << " ...\n";
  return g_runs.emplace(key, run_experiment(c)).first->second;
}

const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// ---------------------------------------------------------------------------

Verdict engine_invariants() {
  constexpr int kSeedsN = 20, kTicks = 10000;
  std::size_t violations = 0, nondeterministic = 0;
  std::string first;
  std::int64_t spawned = 0;
  for (std::uint64_t seed = 0; seed < kSeedsN; ++seed) {
    // Two identical passes: the second must reproduce the first state by state.
    std::vector<GameState> first_pass;
    for (int pass = 0; pass < 2; ++pass) {
      Rng rng(mix_seed(seed, 1));
      GameState s = new_game(GridConfig{}, mix_seed(seed, 2));
      for (int t = 0; t < kTicks; ++t) {
        if (s.terminal != Terminal::None) s = new_game(GridConfig{}, rng.next_u64());
        DefenderActions a;
        for (auto& x : a) x = random_defender_policy(rng);
        const AttackerAction att = random_attacker_policy(rng);
        const GameState before = s;
        const StepOutcome out = step(s, a, att);
        if (pass == 0) {
          spawned += out.spawned;
          oracle::StepCheck c;
          oracle::check_step(before, a, att, s, out, c);
          violations += c.violations.size();
          if (first.empty() && !c.violations.empty()) first = c.violations.front();
          first_pass.push_back(s);
        } else if (!(first_pass[t] == s)) {
          ++nondeterministic;
        }
      }
    }
  }
  return {violations == 0 && nondeterministic == 0,
          std::to_string(kSeedsN) + " seeds x " + std::to_string(kTicks) + " ticks, " + std::to_string(spawned) +
              " spawns, " + std::to_string(violations) + " invariant violations, " +
              std::to_string(nondeterministic) + " replay mismatches" + (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict cost_properties() {
  using L = UnitLimits;
  struct Field {
    int UnitSpec::*member;
    int min, max;
  };
  const std::vector<Field> fields{{&UnitSpec::health, L::health_min, L::health_max},
                                  {&UnitSpec::damage, L::damage_min, L::damage_max},
                                  {&UnitSpec::speed, L::speed_min, L::speed_max},
                                  {&UnitSpec::range, L::range_min, L::range_max},
                                  {&UnitSpec::regen, 0, L::regen_max},
                                  {&UnitSpec::leech, 0, L::leech_max},
                                  {&UnitSpec::phys_def, 0, L::def_max},
                                  {&UnitSpec::magic_def, 0, L::def_max},
                                  {&UnitSpec::phys_pen, 0, L::pen_max},
                                  {&UnitSpec::magic_pen, 0, L::pen_max}};
  UnitSpec maximal;
  for (const auto& f : fields) maximal.*f.member = f.max;
  UnitSpec mid;
  mid.health = 5;
  mid.speed = 3;

  // Every single-field increment, from every point of its range, on the minimal
  // and maximal specs and 1000 random ones.
  Rng rng(2024);
  std::vector<UnitSpec> bases{UnitSpec{}, maximal};
  for (int k = 0; k < 1000; ++k) bases.push_back(random_attacker_policy(rng, 1.0).spec);
  std::size_t checked = 0, monotone_fail = 0;
  for (const UnitSpec& base : bases)
    for (const auto& f : fields)
      for (int v = f.min; v < f.max; ++v) {
        UnitSpec a = base, b = base;
        a.*f.member = v;
        b.*f.member = v + 1;
        ++checked;
        monotone_fail += spawn_cost(a) < spawn_cost(b) ? 0 : 1;
      }

  const bool hand = spawn_cost(UnitSpec{}) == 11 && spawn_cost(mid) == 31 && spawn_cost(maximal) == 120499;

  // Raising two different fields together costs more than the sum of the two
  // separate increases.
  std::size_t super_fail = 0;
  for (int k = 0; k < 1000; ++k) {
    UnitSpec base = random_attacker_policy(rng, 1.0).spec;
    const int i = rng.uniform_int(0, 9);
    int j = rng.uniform_int(0, 8);
    if (j >= i) ++j;
    const Field &fi = fields[i], &fj = fields[j];
    if (base.*fi.member == fi.max) --(base.*fi.member);
    if (base.*fj.member == fj.max) --(base.*fj.member);
    const int di = rng.uniform_int(1, fi.max - base.*fi.member);
    const int dj = rng.uniform_int(1, fj.max - base.*fj.member);
    UnitSpec a = base, b = base, ab = base;
    a.*fi.member += di;
    b.*fj.member += dj;
    ab.*fi.member += di;
    ab.*fj.member += dj;
    const std::int64_t c0 = spawn_cost(base);
    if (!(spawn_cost(ab) - c0 > (spawn_cost(a) - c0) + (spawn_cost(b) - c0))) ++super_fail;
  }
  return {monotone_fail == 0 && hand && super_fail == 0,
          std::to_string(checked) + " single-field increments (" + std::to_string(monotone_fail) +
              " non-increasing), hand values " + (hand ? "exact" : "WRONG") + ", superlinearity " +
              std::to_string(1000 - super_fail) + "/1000"};
}

Verdict detector_oracle() {
  Rng rng(31337);
  std::array<int, 4> mismatch{}, fired{};
  for (int k = 0; k < 1000; ++k) {
    const EpisodeTrace t = oracle::random_trace(rng, rng.uniform_int(1, 300));
    const StrategyCounts got = detect_all(t);
    const std::array<int, 4> want{oracle::spreading(t), oracle::focusing(t), oracle::flanking(t), oracle::tandem(t)};
    for (std::size_t i = 0; i < 4; ++i) {
      mismatch[i] += got.counts[i] != want[i];
      fired[i] += want[i] > 0;
    }
  }
  int examples_ok = 0;
  std::string bad;
  const auto ex = examples::all();
  for (const auto& e : ex) {
    if (e.run() == e.expected)
      ++examples_ok;
    else
      bad += " " + e.name;
  }
  const int total_mismatch = mismatch[0] + mismatch[1] + mismatch[2] + mismatch[3];
  std::string detail = "1000 random traces, mismatches";
  for (std::size_t i = 0; i < 4; ++i)
    detail += " " + std::string(to_string(kStrategies[i])) + "=" + std::to_string(mismatch[i]) + " (fired in " +
              std::to_string(fired[i]) + ")";
  detail += "; examples " + std::to_string(examples_ok) + "/" + std::to_string(ex.size());
  if (!bad.empty()) detail += " failing:" + bad;
  return {total_mismatch == 0 && examples_ok == static_cast<int>(ex.size()) && ex.size() == 12, detail};
}

Verdict gradients() {
  double worst_def = 0, worst_att = 0, worst_critic = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = gradcase::policy_case(defender_policy_spec(), defender_action_layout(), 100 + seed);
    const auto a = gradcase::policy_case(attacker_policy_spec(), attacker_action_layout(), 200 + seed);
    const auto vd = gradcase::value_case(defender_value_spec(), 300 + seed);
    const auto va = gradcase::value_case(attacker_value_spec(), 400 + seed);
    worst_def = std::max(worst_def, grad_check(d.net, d.obs, d.loss, {.seed = seed}));
    worst_att = std::max(worst_att, grad_check(a.net, a.obs, a.loss, {.seed = seed}));
    worst_critic = std::max({worst_critic, grad_check(vd.net, vd.obs, vd.loss, {.seed = seed}),
                             grad_check(va.net, va.obs, va.loss, {.seed = seed})});
  }
  const auto d = gradcase::policy_case(defender_policy_spec(), defender_action_layout(), 999);
  const auto a = gradcase::policy_case(attacker_policy_spec(), attacker_action_layout(), 998);
  const double neg = std::min(grad_check(d.net, d.obs, d.loss, {.seed = 1, .corrupt_index = d.net.params().size() - 1}),
                              grad_check(a.net, a.obs, a.loss, {.seed = 1, .corrupt_index = 0}));
  return {worst_def < 1e-4 && worst_att < 1e-4 && worst_critic < 1e-4 && neg > 1e-2,
          "max rel. error defender " + fmt(worst_def) + ", attacker " + fmt(worst_att) + ", critics " +
              fmt(worst_critic) + "; corrupted gradient " + fmt(neg)};
}

// Single lane, 200-tick cap, attacker script spawning the cheapest unit
// whenever affordable. A seed passes once 18 of its last 20 games survive to
// the cap, within its first 200 games.
Verdict ppo_sanity() {
  GridConfig g;
  g.lanes = 1;
  g.max_ticks = 200;
  const Hyperparams hp;
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    Rng init(mix_seed(seed, 99));
    ActorCritic def = ActorCritic::defender(init);
    Controllers c;
    c.defender_policy = &def.policy;
    c.defender_critic = &def.critic;
    c.attacker_script = minimal_spawner_script();
    RolloutCollector collector(g, Rules{}, RewardConfig{}, seed);
    Rng update_rng(mix_seed(seed, 7));
    std::deque<int> window;
    int games = 0, reached_at = -1, best = 0;
    while (games < 200 && reached_at < 0) {
      Rollout r = collector.collect(c, hp.horizon);
      for (const auto& e : r.episodes) {
        if (games >= 200 || reached_at >= 0) break;
        ++games;
        window.push_back(e.outcome == Terminal::Truncated);
        if (window.size() > 20) window.pop_front();
        const int survived = static_cast<int>(std::count(window.begin(), window.end(), 1));
        best = std::max(best, survived);
        if (window.size() == 20 && survived >= 18) reached_at = games;
      }
      if (reached_at < 0) ppo_update(r.defender, defender_action_layout(), def, hp, update_rng);
    }
    passed += reached_at >= 0;
    detail += "seed " + std::to_string(seed) + ": " +
              (reached_at >= 0 ? "90% at game " + std::to_string(reached_at)
                               : "best window " + std::to_string(best) + "/20") +
              "; ";
  }
  return {passed >= 2, detail + std::to_string(passed) + "/3 seeds"};
}

Verdict baseline() {
  const RunSummary& b = run(Mode::Baseline, 1);
  const StrategyStats& s = *b.stats;
  bool ok = s.avg_episode_length < 40.0;
  for (Strategy k : kStrategies) ok &= rate(s, k) <= 0.15;
  return {ok, "500 games: " + rates(s) + " (need length < 40, every rate <= 15%)"};
}

double baseline_length() { return run(Mode::Baseline, 1).stats->avg_episode_length; }

Verdict cotrain() {
  const double base = baseline_length();
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const RunSummary& r = run(Mode::CoTrain, seed);
    if (!r.eval_stats) return {false, "seed " + std::to_string(seed) + " produced no evaluation (" + r.status + ")"};
    const StrategyStats& s = *r.eval_stats;
    const bool ok = r.status == "ok" && s.avg_episode_length >= 2.0 * base && rate(s, Strategy::Tandem) >= 0.5 &&
                    rate(s, Strategy::Flanking) >= 0.5 && rate(s, Strategy::Spreading) >= 0.4 &&
                    rate(s, Strategy::Focusing) >= 0.4;
    passed += ok;
    detail += "seed " + std::to_string(seed) + " [" + rates(s) + "]; ";
  }
  return {passed >= 2, detail + "baseline length " + fmt(base, 4) + "; " + std::to_string(passed) + "/3 seeds"};
}

Verdict ablations() {
  const double base = baseline_length();
  const RunSummary& aa = run(Mode::AblateAttacker, 1);
  const RunSummary& ad = run(Mode::AblateDefender, 1);
  if (!aa.eval_stats || !ad.eval_stats) return {false, "an ablation produced no evaluation"};
  const StrategyStats &a = *aa.eval_stats, &d = *ad.eval_stats;
  const bool att_ok = a.avg_episode_length < base && rate(a, Strategy::Flanking) <= 0.3 &&
                      rate(a, Strategy::Tandem) <= 0.3;
  const bool def_ok = d.avg_episode_length >= 2.0 * base && rate(d, Strategy::Spreading) <= 0.3 &&
                      rate(d, Strategy::Focusing) <= 0.3;
  return {att_ok && def_ok, std::string("attacker-only ") + (att_ok ? "ok" : "fails") + " [" + rates(a) +
                                "]; defender-only " + (def_ok ? "ok" : "fails") + " [" + rates(d) +
                                "]; baseline length " + fmt(base, 4)};
}

Verdict learning_curve() {
  int passed = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const std::vector<int>& v = run(Mode::CoTrain, seed).episode_lengths;
    const std::size_t n = v.size(), d = std::max<std::size_t>(1, n / 10);
    double first = 0, last = 0;
    for (std::size_t i = 0; i < d; ++i) {
      first += v[i];
      last += v[n - d + i];
    }
    first /= static_cast<double>(d);
    last /= static_cast<double>(d);
    passed += last >= 1.5 * first;
    detail += "seed " + std::to_string(seed) + ": " + fmt(first, 4) + " -> " + fmt(last, 4) + " (x" +
              fmt(last / first) + "); ";
  }
  return {passed >= 2, detail + std::to_string(passed) + "/3 seeds"};
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lanedef acceptance suite"};
  std::vector<int> only;
  std::string out = (fs::temp_directory_path() / "lanedef_acceptance").string();
  app.add_option("--only", only, "Run only these criteria (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--out", out, "Directory for experiment outputs");
  CLI11_PARSE(app, argc, argv);
  g_out = out;

  const std::vector<Criterion> criteria{
      {1, "engine invariants", 10, engine_invariants},
      {2, "spawn cost properties", 1, cost_properties},
      {3, "detector oracle equivalence", 5, detector_oracle},
      {4, "gradient correctness", 30, gradients},
      {5, "PPO sanity (single lane)", 300, ppo_sanity},
      {6, "random-vs-random baseline", 120, baseline},
      {7, "co-training, 500 episodes", 3600, cotrain},
      {8, "one-sided training vs random opponent", 3600, ablations},
      {9, "episode length grows over co-training", 3600, learning_curve},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << v.detail << " ("
              << fmt(secs, 3) << " s" << (in_time ? "" : ", over the " + fmt(c.budget_seconds, 4) + " s budget")
              << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
