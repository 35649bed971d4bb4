#include "fixtures.hpp"

#include <modalcur/curriculum.hpp>
#include <modalcur/rng.hpp>
#include <modalcur/sensing_env.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

namespace modalcur {
namespace {

using testing::beam_toy;

// Rank weights h = [1, 1/2] raised to 1/0.3, normalised; then mixed 0.7/0.3
// with the staleness distribution [8/12, 4/12].
constexpr double kPs0 = 0.9097421473884821;
constexpr double kPs1 = 0.09025785261151782;
constexpr double kMix0 = 0.8368195031719374;
constexpr double kMix1 = 0.16318049682806246;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Score, ZeroDeltasScoreZero) {
  const std::vector<double> d(7, 0.0);
  EXPECT_EQ(score_trajectory(d, 0.99, 0.95, ScoringMode::abs_gae), 0.0);
  EXPECT_EQ(score_trajectory(d, 0.99, 0.95, ScoringMode::positive_value_loss), 0.0);
}

TEST(Score, SingleDelta) {
  const std::vector<double> d{1.0};
  EXPECT_EQ(score_trajectory(d, 0.3, 0.1, ScoringMode::abs_gae), 1.0);
}

TEST(Score, TwoStepHandExample) {
  const std::vector<double> d{1.0, -1.0};
  // gamma * lambda = 0.5
  EXPECT_NEAR(score_trajectory(d, 1.0, 0.5, ScoringMode::abs_gae), 0.75, 1e-15);
  EXPECT_NEAR(score_trajectory(d, 1.0, 0.5, ScoringMode::positive_value_loss), 0.25, 1e-15);
}

TEST(Score, EmptyTrajectoryThrows) {
  EXPECT_THROW(score_trajectory({}, 0.99, 0.95, ScoringMode::abs_gae), std::invalid_argument);
}

TEST(Distributions, RankPrioritisationExample) {
  const std::vector<double> s{0.5, 0.2};
  const auto p = scoring_distribution(s, 0.3);
  EXPECT_NEAR(p[0], kPs0, 1e-12);
  EXPECT_NEAR(p[1], kPs1, 1e-12);
}

TEST(Distributions, RankPrioritisationTiesAndSingle) {
  const std::vector<double> equal{0.4, 0.4, 0.4};
  const auto p = scoring_distribution(equal, 0.5);
  EXPECT_GT(p[0], p[1]);
  EXPECT_GT(p[1], p[2]);
  EXPECT_EQ(scoring_distribution(std::vector<double>{3.0}, 0.3), std::vector<double>{1.0});
}

TEST(Distributions, RankPrioritisationIgnoresPositiveRescaling) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(6);
    for (auto& x : s) x = rng.uniform();
    std::vector<double> scaled = s;
    for (auto& x : scaled) x *= 17.5;
    EXPECT_EQ(scoring_distribution(s, 0.3), scoring_distribution(scaled, 0.3));
  }
}

TEST(Distributions, Staleness) {
  const std::vector<std::int64_t> c{2, 6};
  const auto p = staleness_distribution(c, 10);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(staleness_distribution(std::vector<std::int64_t>{9}, 10), std::vector<double>{1.0});
  const auto u = staleness_distribution(std::vector<std::int64_t>{4, 4, 4}, 7);
  for (double x : u) EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
  const auto fresh = staleness_distribution(std::vector<std::int64_t>{7, 7}, 7);
  for (double x : fresh) EXPECT_NEAR(x, 0.5, 1e-15);
}

class BufferFixture : public ::testing::Test {
 protected:
  BufferFixture() : model_(beam_toy(6, 2)), suite_(std::make_shared<const EnvSuite>(model_, 2)) {
    for (int i = 0; i < suite_->n_levels(); ++i) levels_.push_back(suite_->base_level(i));
  }
  LevelBufferEntry entry(int level, double score, std::int64_t c, std::int64_t id) const {
    LevelBufferEntry e;
    e.level = levels_[static_cast<std::size_t>(level)];
    e.score = score;
    e.last_sampled_at = c;
    e.id = id;
    return e;
  }
  std::shared_ptr<const ModalModel> model_;
  std::shared_ptr<const EnvSuite> suite_;
  std::vector<EnvLevel> levels_;
};

TEST_F(BufferFixture, ReplayMixtureExample) {
  CurriculumConfig cfg;
  cfg.temperature = 0.3;
  cfg.staleness = 0.3;
  const LevelBuffer buf{entry(0, 0.5, 2, 0), entry(1, 0.2, 6, 1)};
  const auto p = replay_distribution(buf, cfg, 10);
  EXPECT_NEAR(p[0], kMix0, 1e-12);
  EXPECT_NEAR(p[1], kMix1, 1e-12);
  EXPECT_NEAR(p[0], 0.7 * kPs0 + 0.3 * 2.0 / 3.0, 1e-12);
  cfg.staleness = 0.0;
  EXPECT_EQ(replay_distribution(buf, cfg, 10), scoring_distribution(std::vector<double>{0.5, 0.2}, 0.3));
  cfg.staleness = 1.0;
  EXPECT_EQ(replay_distribution(buf, cfg, 10), staleness_distribution(std::vector<std::int64_t>{2, 6}, 10));
}

TEST_F(BufferFixture, DistributionsSumToOne) {
  Rng rng(8);
  CurriculumConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    LevelBuffer buf;
    const int n = 1 + rng.index(15);
    for (int i = 0; i < n; ++i) buf.push_back(entry(i % 3, rng.uniform(), rng.index(50), i));
    const auto p = replay_distribution(buf, cfg, 50);
    EXPECT_NEAR(sum(p), 1.0, 1e-12);
    for (double x : p) EXPECT_GE(x, 0.0);
  }
}

TEST_F(BufferFixture, EmptyBufferAlwaysSamples) {
  Curriculum cur(CurriculumConfig{}, levels_, model_);
  for (std::uint64_t s = 0; s < 100; ++s) EXPECT_EQ(cur.next_task(1, s).origin, TaskOrigin::sampled);
}

TEST_F(BufferFixture, AlwaysReplayWithoutEdits) {
  CurriculumConfig cfg;
  cfg.replay_rate = 1.0;
  cfg.edit_rate = 0.0;
  Curriculum cur(cfg, levels_, model_);
  cur.restore({entry(1, 0.3, 0, 0)}, 1);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = cur.next_task(3, s);
    EXPECT_EQ(t.origin, TaskOrigin::replayed);
    EXPECT_EQ(t.level, levels_[1]);
  }
}

TEST_F(BufferFixture, BernoulliGateFraction) {
  Curriculum cur(CurriculumConfig{}, levels_, model_);
  cur.restore({entry(0, 0.5, 0, 0), entry(1, 0.2, 0, 1)}, 2);
  int sampled = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) sampled += cur.next_task(5, mix_seed(77, s)).origin == TaskOrigin::sampled;
  EXPECT_NEAR(sampled / 10000.0, 0.2, 0.02);
}

TEST_F(BufferFixture, NextTaskIsDeterministic) {
  Curriculum cur(CurriculumConfig{}, levels_, model_);
  cur.restore({entry(0, 0.5, 0, 0), entry(2, 0.2, 3, 1)}, 2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = cur.next_task(9, s);
    const auto b = cur.next_task(9, s);
    EXPECT_EQ(a.level, b.level);
    EXPECT_EQ(a.origin, b.origin);
    EXPECT_EQ(a.seed, b.seed);
  }
}

TEST_F(BufferFixture, InsertEvictAndRefresh) {
  CurriculumConfig cfg;
  cfg.buffer_size = 2;
  Curriculum cur(cfg, levels_, model_);
  Task t0{levels_[0], TaskOrigin::sampled, -1, 0};
  Task t1{levels_[1], TaskOrigin::sampled, -1, 0};
  Task t2{levels_[2], TaskOrigin::sampled, -1, 0};
  cur.update_after_rollout(t0, 0.5, 1);
  EXPECT_EQ(cur.buffer().size(), 1u);
  cur.update_after_rollout(t1, 0.4, 2);
  EXPECT_EQ(cur.buffer().size(), 2u);
  // Full buffer, new score below the minimum: the newcomer is evicted.
  cur.update_after_rollout(t2, 0.1, 3);
  ASSERT_EQ(cur.buffer().size(), 2u);
  EXPECT_EQ(cur.buffer()[0].level, levels_[0]);
  EXPECT_EQ(cur.buffer()[1].level, levels_[1]);
  // Replaying refreshes the counter so its staleness term vanishes.
  Task replay{levels_[1], TaskOrigin::replayed, cur.buffer()[1].id, 0};
  cur.update_after_rollout(replay, 0.6, 9);
  EXPECT_EQ(cur.buffer()[1].last_sampled_at, 9);
  EXPECT_EQ(cur.buffer()[1].score, 0.6);
  const auto p = staleness_distribution(std::vector<std::int64_t>{cur.buffer()[0].last_sampled_at, 9}, 9);
  EXPECT_EQ(p[1], 0.0);
}

TEST_F(BufferFixture, BufferNeverExceedsCapacity) {
  CurriculumConfig cfg;
  cfg.buffer_size = 4;
  Curriculum cur(cfg, levels_, model_);
  Rng rng(1);
  for (std::int64_t c = 1; c <= 300; ++c) {
    const auto task = cur.next_task(c, mix_seed(5, static_cast<std::uint64_t>(c)));
    const double score = rng.uniform();
    cur.update_after_rollout(task, score, c);
    EXPECT_LE(cur.buffer().size(), 4u);
  }
}

TEST_F(BufferFixture, MutatedChildCarriesLineage) {
  CurriculumConfig cfg;
  cfg.replay_rate = 1.0;
  cfg.edit_rate = 1.0;
  Curriculum cur(cfg, levels_, model_);
  cur.restore({entry(2, 0.3, 0, 0)}, 1);
  const auto task = cur.next_task(2, 11);
  ASSERT_EQ(task.origin, TaskOrigin::mutated);
  cur.update_after_rollout(task, 0.2, 2);
  ASSERT_EQ(cur.buffer().size(), 2u);
  EXPECT_EQ(cur.buffer()[1].parent, 0);
  EXPECT_EQ(cur.buffer()[1].level.level_index, levels_[2].level_index);
}

TEST_F(BufferFixture, SnapshotRoundTrip) {
  LevelBuffer buf{entry(0, 0.5, 2, 0), entry(2, 0.125, 6, 3)};
  buf[1].parent = 0;
  buf[1].seed = 12345678901234ULL;
  std::stringstream ss;
  write_buffer_snapshot(ss, buf, 10, 4);
  const auto back = read_buffer_snapshot(ss);
  EXPECT_EQ(back.c, 10);
  EXPECT_EQ(back.next_id, 4);
  ASSERT_EQ(back.buffer.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.buffer[i].level, buf[i].level);
    EXPECT_EQ(back.buffer[i].score, buf[i].score);
    EXPECT_EQ(back.buffer[i].last_sampled_at, buf[i].last_sampled_at);
    EXPECT_EQ(back.buffer[i].id, buf[i].id);
    EXPECT_EQ(back.buffer[i].parent, buf[i].parent);
    EXPECT_EQ(back.buffer[i].seed, buf[i].seed);
  }
}

TEST(CurriculumConfig, Validation) {
  CurriculumConfig c;
  EXPECT_NO_THROW(c.validate());
  c.temperature = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.buffer_size = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.replay_rate = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace modalcur
