#include "fixtures.hpp"

#include <modalcur/levels.hpp>
#include <modalcur/plate_fe.hpp>
#include <modalcur/rng.hpp>
#include <modalcur/sensing_env.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace modalcur {
namespace {

using testing::beam_toy;

std::shared_ptr<const ModalModel> small_plate() {
  static const auto m = std::make_shared<const ModalModel>(assemble_plate_model(PlateGeometry{}, MaterialSpec{}, 0.0127, 3));
  return m;
}

TEST(Levels, EnumerationCounts) {
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(enumerate_levels(n).size(), static_cast<std::size_t>(n * (n + 1) / 2));
  EXPECT_EQ(enumerate_levels(5).size(), 15u);
  const auto one = enumerate_levels(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (ModeRange{1, 1}));
}

TEST(Levels, ThreeModesInLengthThenFirstModeOrder) {
  const std::vector<ModeRange> expected{{1, 1}, {2, 2}, {3, 3}, {1, 2}, {2, 3}, {1, 3}};
  EXPECT_EQ(enumerate_levels(3), expected);
}

TEST(Levels, SplitSizesAndDeterminism) {
  const auto s = split_indices(15, 0.75, 3);
  EXPECT_EQ(s.train.size(), 11u);
  EXPECT_EQ(s.holdout.size(), 4u);
  const auto again = split_indices(15, 0.75, 3);
  EXPECT_EQ(s.train, again.train);
  EXPECT_EQ(s.holdout, again.holdout);
  EXPECT_TRUE(split_indices(15, 1.0, 3).holdout.empty());
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.holdout.begin(), s.holdout.end());
  EXPECT_EQ(all.size(), 15u);
}

TEST(Levels, SplitRejectsBadInput) {
  EXPECT_THROW(split_indices(0, 0.5, 0), std::invalid_argument);
  EXPECT_THROW(split_indices(5, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(split_indices(5, 1.5, 0), std::invalid_argument);
}

TEST(Levels, ManifestRoundTrip) {
  auto suite = std::make_shared<const EnvSuite>(beam_toy(8, 3), 2);
  std::vector<ManifestRow> rows;
  for (int i = 0; i < suite->n_levels(); ++i) rows.push_back({suite->base_level(i), i % 2 == 0, i % 2 == 0 ? i / 2 : -1, -1, 0});
  std::stringstream ss;
  write_level_manifest(ss, rows);
  const auto back = read_level_manifest(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].level, rows[i].level);
    EXPECT_EQ(back[i].train, rows[i].train);
    EXPECT_EQ(back[i].train_rank, rows[i].train_rank);
  }
}

TEST(Mutation, EditingEverySensorRedrawsDistinctValidCells) {
  const auto model = small_plate();
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  const auto base = suite->base_level(0);
  const auto child = mutate_level(base, *model, 5, 42);
  std::set<int> cells(child.init_config.cells.begin(), child.init_config.cells.end());
  EXPECT_EQ(cells.size(), 5u);
  for (int c : child.init_config.cells) EXPECT_TRUE(model->placement_mask[static_cast<std::size_t>(c)]);
  EXPECT_EQ(child.theta, base.theta);
  EXPECT_EQ(child.level_index, base.level_index);
}

TEST(Mutation, OneEditMovesExactlyOneSensor) {
  const auto model = small_plate();
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  const auto base = suite->base_level(2);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto child = mutate_level(base, *model, 1, seed);
    int differ = 0;
    for (std::size_t s = 0; s < 5; ++s) differ += child.init_config.cells[s] != base.init_config.cells[s];
    EXPECT_EQ(differ, 1);
    EXPECT_EQ(child, mutate_level(base, *model, 1, seed));
  }
}

TEST(Env, DefaultInitOccupancyAndLayout) {
  const auto model = small_plate();
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  SensorEnv env(suite);
  const auto level = suite->base_level(0);
  const auto obs = env.reset(level);
  EXPECT_EQ(obs.size(), model->n_nodes() + suite->n_levels());
  EXPECT_EQ(obs.size(), suite->observation_size());
  for (int i = 0; i < model->n_nodes(); ++i) {
    const bool occupied = std::count(level.init_config.cells.begin(), level.init_config.cells.end(), i) > 0;
    EXPECT_EQ(obs.occupancy[static_cast<std::size_t>(i)], occupied ? 1 : 0);
  }
  EXPECT_EQ(obs.level_id[0], 1);
  EXPECT_EQ(env.reset(level), obs);
  // Sensors sit on the middle row next to the clamp.
  const auto& grid = suite->grid();
  for (int c : level.init_config.cells) EXPECT_EQ(grid.row_of(c), grid.n_rows() / 2);
}

TEST(Env, BlockedMoveIsExactNoOp) {
  const auto model = beam_toy(6, 2);
  auto suite = std::make_shared<const EnvSuite>(model, 2);
  SensorEnv env(suite);
  env.reset(suite->base_level(2));
  const auto before = env.config();
  const auto r = env.step({0, Direction::up});  // a beam has a single row
  EXPECT_EQ(r.reward, 0.0);
  EXPECT_EQ(env.config(), before);
  const auto l = env.step({0, Direction::left});  // into the clamp
  EXPECT_EQ(l.reward, 0.0);
  EXPECT_EQ(env.config(), before);
}

TEST(Env, MoveThenInverseCancels) {
  const auto model = small_plate();
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  SensorEnv env(suite);
  env.reset(suite->base_level(3));
  const auto a = env.step({4, Direction::right});
  const auto b = env.step({4, Direction::left});
  EXPECT_NEAR(a.reward + b.reward, 0.0, 1e-15);
  EXPECT_EQ(env.config(), suite->base_level(3).init_config);
}

TEST(Env, RandomEpisodesTelescopeAndKeepInvariants) {
  const auto model = small_plate();
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  Rng rng(5);
  for (int ep = 0; ep < 5; ++ep) {
    SensorEnv env(suite, 200);
    const int li = rng.index(suite->n_levels());
    env.reset(suite->base_level(li));
    const double initial = env.current_det();
    double total = 0.0;
    StepResult r;
    while (!env.done()) {
      r = env.step({rng.index(5), static_cast<Direction>(rng.index(kNumDirections))});
      total += r.reward;
      int occupied = 0;
      for (auto o : r.observation.occupancy) occupied += o;
      EXPECT_EQ(occupied, 5);
      for (int c : env.config().cells) EXPECT_TRUE(model->placement_mask[static_cast<std::size_t>(c)]);
    }
    EXPECT_TRUE(r.done);
    EXPECT_EQ(env.steps_taken(), 200);
    EXPECT_NEAR(total, env.current_det() - initial, 1e-9);
    EXPECT_NEAR(env.current_det(), det_fim(suite->context(li), env.config()), 1e-15 + 1e-12 * std::abs(env.current_det()));
  }
}

TEST(Env, TransitionsAreDeterministic) {
  const auto model = beam_toy(12, 3);
  auto suite = std::make_shared<const EnvSuite>(model, 3);
  SensorEnv a(suite), b(suite);
  a.reset(suite->base_level(5));
  b.reset(suite->base_level(5));
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    const Action act{rng.index(3), static_cast<Direction>(rng.index(4))};
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    EXPECT_EQ(ra.reward, rb.reward);
    EXPECT_EQ(ra.observation, rb.observation);
  }
}

TEST(Env, StepAfterDoneAndBadActionsThrow) {
  const auto model = beam_toy(6, 2);
  auto suite = std::make_shared<const EnvSuite>(model, 2);
  SensorEnv env(suite, 1);
  EXPECT_THROW(env.step({0, Direction::right}), std::logic_error);
  env.reset(suite->base_level(0));
  EXPECT_THROW(env.step({5, Direction::right}), std::invalid_argument);
  env.step({0, Direction::right});
  EXPECT_THROW(env.step({0, Direction::right}), std::logic_error);
}

TEST(Env, ForeignLevelIsRejected) {
  auto suite = std::make_shared<const EnvSuite>(beam_toy(6, 2), 2);
  SensorEnv env(suite);
  auto level = suite->base_level(0);
  level.n_levels = 7;
  EXPECT_THROW(env.reset(level), std::invalid_argument);
}

}  // namespace
}  // namespace modalcur
