#include <gtest/gtest.h>

#include "lanedef/errors.hpp"
#include "lanedef/metrics.hpp"
#include "support/detector_examples.hpp"
#include "support/oracles.hpp"

using namespace lanedef;

TEST(Detectors, HandBuiltExamples) {
  for (const auto& ex : examples::all()) EXPECT_EQ(ex.run(), ex.expected) << ex.name;
}

TEST(Detectors, MatchBruteForceOnRandomTraces) {
  Rng rng(2024);
  for (int k = 0; k < 1000; ++k) {
    const EpisodeTrace t = oracle::random_trace(rng, rng.uniform_int(1, 300));
    ASSERT_EQ(detect_spreading(t), oracle::spreading(t)) << "trace " << k;
    ASSERT_EQ(detect_focusing(t), oracle::focusing(t)) << "trace " << k;
    ASSERT_EQ(detect_flanking(t), oracle::flanking(t)) << "trace " << k;
    ASSERT_EQ(detect_tandem(t), oracle::tandem(t)) << "trace " << k;
  }
}

TEST(Detectors, FailedSpawnsAreNotEvents) {
  EpisodeTrace t = examples::lanes_trace(examples::repeat({1, 3, 5, 7}, 5));
  for (int k : {1, 2}) {
    t.ticks[k].spawn_failed = true;
    t.ticks[k].spawn.reset();
  }
  EXPECT_TRUE(spawn_events(t).empty());
  EXPECT_EQ(detect_tandem(t), 0);
}

TEST(Detectors, DefenderPermutationInvariance) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    EpisodeTrace t = oracle::random_trace(rng, rng.uniform_int(1, 100));
    EpisodeTrace p = t;
    for (auto& r : p.ticks) std::reverse(r.lanes.begin(), r.lanes.end());
    EXPECT_EQ(detect_spreading(t), detect_spreading(p));
    EXPECT_EQ(detect_focusing(t), detect_focusing(p));
  }
}

TEST(Detectors, AppendingNeverDecreasesCounts) {
  Rng rng(6);
  for (int k = 0; k < 200; ++k) {
    const EpisodeTrace full = oracle::random_trace(rng, rng.uniform_int(2, 150));
    EpisodeTrace prefix = full;
    prefix.ticks.resize(static_cast<std::size_t>(rng.uniform_int(1, full.length())));
    const auto a = detect_all(prefix).counts;
    const auto b = detect_all(full).counts;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(a[i], b[i]);
  }
}

TEST(Detectors, ConcatenatedRunsCountTwice) {
  using examples::concat;
  using examples::repeat;
  const auto one = repeat({0, 2, 4, 6}, 7);
  EXPECT_EQ(detect_spreading(examples::lanes_trace(concat(concat(one, repeat({0, 0, 4, 6}, 1)), one))), 2);
  const auto crowd = repeat({3, 3, 3, 6}, 3);
  EXPECT_EQ(detect_focusing(examples::lanes_trace(concat(concat(crowd, repeat({0, 2, 4, 6}, 1)), crowd))), 2);
}

TEST(Aggregate, TandemArithmetic) {
  std::vector<StrategyCounts> counts(10);
  counts[0].counts[static_cast<std::size_t>(Strategy::Tandem)] = 1;
  for (auto& c : counts) c.length = 19;
  const StrategyStats s = aggregate(counts);
  EXPECT_DOUBLE_EQ(s[Strategy::Tandem].avg_uses, 0.1);
  EXPECT_DOUBLE_EQ(s[Strategy::Tandem].usage_rate, 0.1);
  EXPECT_DOUBLE_EQ(s.avg_episode_length, 19.0);
  EXPECT_EQ(s.episodes, 10u);
}

TEST(Aggregate, QuietTraces) {
  std::vector<EpisodeTrace> traces(4, examples::lanes_trace(examples::repeat({1, 1, 2, 2}, 1)));
  for (auto& t : traces) t.ticks.resize(19, t.ticks[0]);
  const StrategyStats s = aggregate(traces);
  EXPECT_DOUBLE_EQ(s.avg_episode_length, 19.0);
  for (const auto& r : s.rows) EXPECT_EQ(r.usage_rate, 0.0);
}

TEST(Aggregate, EmptyInputIsUsageError) {
  EXPECT_THROW(aggregate(std::vector<EpisodeTrace>{}), UsageError);
}

TEST(Aggregate, RowsInReportOrder) {
  const StrategyStats s = aggregate(std::vector<EpisodeTrace>{examples::lanes_trace(examples::repeat({1, 3, 5, 7}, 6))});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.rows[i].strategy, kStrategies[i]);
  const std::string csv = stats_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,avg_uses_per_episode,usage_rate");
  EXPECT_NE(csv.find("spreading,1,1"), std::string::npos);
  EXPECT_NE(format_report(s, "t").find("cooperative spreading"), std::string::npos);
}
