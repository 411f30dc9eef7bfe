#include <benchmark/benchmark.h>

#include "lanedef/engine.hpp"
#include "lanedef/harness.hpp"
#include "lanedef/metrics.hpp"
#include "lanedef/obs_reward.hpp"
#include "lanedef/policy_net.hpp"
#include "lanedef/ppo.hpp"

using namespace lanedef;

static void BM_EngineStepRandom(benchmark::State& state) {
  Rng rng(1);
  GameState s = new_game(GridConfig{}, 1);
  for (auto _ : state) {
    if (s.terminal != Terminal::None) s = new_game(GridConfig{}, rng.next_u64());
    DefenderActions a;
    for (auto& x : a) x = random_defender_policy(rng);
    AttackerAction att = random_attacker_policy(rng);
    att.spec.health = 1 + static_cast<int>(rng.next_u64() % 4);
    att.spec.regen = att.spec.leech = 0;
    benchmark::DoNotOptimize(step(s, a, att));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EngineStepRandom);

static void BM_EncodeObservations(benchmark::State& state) {
  GameState s = new_game(GridConfig{}, 2);
  Rng rng(2);
  for (int t = 0; t < 60 && s.terminal == Terminal::None; ++t) {
    AttackerAction att;
    att.spawn = true;
    att.spec.lane = rng.uniform_int(0, 9);
    step(s, {}, att);
  }
  ObsVector d, a;
  for (auto _ : state) {
    for (int i = 0; i < kDefenderCount; ++i) d = encode_defender_obs(s, i);
    a = encode_attacker_obs(s);
    benchmark::DoNotOptimize(d.data());
    benchmark::DoNotOptimize(a.data());
  }
}
BENCHMARK(BM_EncodeObservations);

static void BM_MlpForward(benchmark::State& state) {
  Rng rng(3);
  const Mlp net(attacker_policy_spec(), rng, 0.01);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(kAttackerObsSize, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(4)->Arg(128);

static void BM_CollectRollout(benchmark::State& state) {
  Rng rng(4);
  ActorCritic def = ActorCritic::defender(rng), att = ActorCritic::attacker(rng);
  Controllers c{&def.policy, &def.critic, &att.policy, &att.critic, {}, {}};
  RolloutCollector collector(GridConfig{}, Rules{}, RewardConfig{}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(collector.collect(c, 256));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_CollectRollout)->Unit(benchmark::kMillisecond);

static void BM_PpoUpdate(benchmark::State& state) {
  Rng rng(5);
  ActorCritic def = ActorCritic::defender(rng), att = ActorCritic::attacker(rng);
  Controllers c{&def.policy, &def.critic, &att.policy, &att.critic, {}, {}};
  RolloutCollector collector(GridConfig{}, Rules{}, RewardConfig{}, 5);
  const Rollout r = collector.collect(c, 512);
  const Hyperparams hp;
  for (auto _ : state) {
    RolloutBuffer d = r.defender, a = r.attacker;
    ppo_update(d, defender_action_layout(), def, hp, rng);
    ppo_update(a, attacker_action_layout(), att, hp, rng);
  }
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

static void BM_DetectAll(benchmark::State& state) {
  Rng rng(6);
  EpisodeTrace t;
  for (int k = 0; k < 300; ++k) {
    TickRecord r;
    r.tick = k;
    for (int& x : r.lanes) x = rng.uniform_int(0, 9);
    if (rng.uniform() < 0.5) r.spawn = random_attacker_policy(rng, 1.0).spec;
    t.ticks.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect_all(t));
}
BENCHMARK(BM_DetectAll);
BENCHMARK_MAIN();
