#include "fixtures.hpp"

#include <modalcur/baselines.hpp>
#include <modalcur/evaluation.hpp>
#include <modalcur/plate_fe.hpp>
#include <modalcur/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace modalcur {
namespace {

using testing::beam_toy;
using testing::rel_err;
using testing::to_problem;

// Walks each sensor of a beam to a target cell, rightmost sensor first, then
// holds with a blocked move.
class TargetPolicy final : public ActingPolicy {
 public:
  explicit TargetPolicy(SensorConfig target) : target_(std::move(target)) {}
  [[nodiscard]] std::unique_ptr<ActingPolicy> clone() const override { return std::make_unique<TargetPolicy>(target_); }
  void begin_episode(const SensorEnv&) override {}
  Action act(const SensorEnv& env, const Observation&, Rng&) override {
    const auto& cells = env.config().cells;
    for (int s = static_cast<int>(cells.size()) - 1; s >= 0; --s) {
      const int cur = cells[static_cast<std::size_t>(s)];
      const int want = target_.cells[static_cast<std::size_t>(s)];
      if (cur != want) return {s, want > cur ? Direction::right : Direction::left};
    }
    return {0, Direction::up};
  }

 private:
  SensorConfig target_;
};

TEST(Efi, AllCandidatesKeptWhenSensorsEqualCandidates) {
  const auto model = beam_toy(6, 2);
  const auto cfg = effective_independence(*model, {1, 2}, 6);
  EXPECT_EQ(cfg.cells, model->placeable_nodes());
}

TEST(Efi, TwelveCandidateSequenceMatchesOracle) {
  const auto model = beam_toy(12, 3);
  EfiTrace trace;
  const auto cfg = effective_independence(*model, {1, 3}, 3, &trace);
  const auto ref = oracle::efi_sequence(to_problem(*model, {1, 3}, 3), model->placeable_nodes());
  ASSERT_EQ(trace.removed.size(), ref.size());
  for (std::size_t s = 0; s < ref.size(); ++s) {
    EXPECT_EQ(trace.candidates[s], ref[s].candidates);
    EXPECT_EQ(trace.removed[s], ref[s].removed);
    const double total = trace.effectiveness[s].sum();
    EXPECT_NEAR(total, 3.0, 1e-9);
    for (Eigen::Index i = 0; i < trace.effectiveness[s].size(); ++i) {
      EXPECT_NEAR(trace.effectiveness[s][i], ref[s].effectiveness[static_cast<std::size_t>(i)], 1e-10);
      EXPECT_GE(trace.effectiveness[s][i], -1e-12);
      EXPECT_LE(trace.effectiveness[s][i], 1.0 + 1e-12);
    }
  }
  EXPECT_EQ(cfg.cells.size(), 3u);
}

TEST(Efi, RankDeficientCandidateSetThrows) {
  auto m = std::make_shared<ModalModel>(beam_modes_analytical(0.423, 7, 2));
  m->mode_shapes.col(1) = m->mode_shapes.col(0);
  try {
    effective_independence(*m, {1, 2}, 2);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mode shapes rank deficient on candidate set"), std::string::npos);
  }
}

TEST(Efi, PreconditionsChecked) {
  const auto model = beam_toy(6, 3);
  EXPECT_THROW(effective_independence(*model, {1, 3}, 2), std::invalid_argument);
  EXPECT_THROW(effective_independence(*model, {1, 1}, 7), std::invalid_argument);
}

TEST(Exhaustive, SingleSensorSingleModePicksLargestSquare) {
  const auto model = beam_toy(6, 1);
  FimContext ctx(model, {1, 1}, 1);
  const auto res = exhaustive_best(ctx);
  Eigen::Index imax = 0;
  model->mode_shapes.col(0).cwiseAbs2().maxCoeff(&imax);
  EXPECT_EQ(res.config.cells, std::vector<int>{static_cast<int>(imax)});
}

TEST(Exhaustive, SixCandidateToyMatchesEnumerationOracle) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 2);
  const auto res = exhaustive_best(ctx);
  const auto ref = oracle::enumerate_all(to_problem(*model, {1, 2}, 2), model->placeable_nodes());
  EXPECT_EQ(res.config.cells, ref.best);
  EXPECT_LT(rel_err(res.det, ref.best_det), 1e-10);
  EXPECT_EQ(res.evaluated, 15);
}

TEST(Exhaustive, DominatesEfiOnToyInstances) {
  for (int cand : {6, 9, 12}) {
    for (int modes = 1; modes <= 3; ++modes) {
      const auto model = beam_toy(cand, modes);
      for (int first = 1; first <= modes; ++first) {
        const ModeRange theta{first, modes};
        const int n_sensors = std::max(theta.size(), 2);
        FimContext ctx(model, theta, n_sensors);
        const auto efi = effective_independence(*model, theta, n_sensors);
        EXPECT_GE(exhaustive_best(ctx).det, det_fim(ctx, efi) - 1e-15);
      }
    }
  }
}

TEST(Exhaustive, BudgetExceeded) {
  const auto model = beam_toy(30, 2);
  FimContext ctx(model, {1, 2}, 5);
  EXPECT_THROW(exhaustive_best(ctx, 1000), BudgetExceeded);
  EXPECT_EQ(binomial(30, 5), 142506);
  EXPECT_EQ(binomial(6, 2), 15);
}

TEST(Mac, DiagonalOneAndOrthogonalZero) {
  auto m = std::make_shared<ModalModel>(beam_modes_analytical(0.423, 5, 2));
  m->mode_shapes.setZero();
  m->mode_shapes(1, 0) = 1.0;
  m->mode_shapes(2, 1) = 1.0;
  m->mode_shapes(3, 0) = 1.0;
  m->mode_shapes(4, 1) = -1.0;
  const auto mm = mac(*m, {1, 2}, {{1, 2}});
  EXPECT_EQ(mm(0, 0), 1.0);
  EXPECT_EQ(mm(1, 1), 1.0);
  EXPECT_EQ(mm(0, 1), 0.0);
}

TEST(Mac, ZeroRestrictedModeThrows) {
  auto m = std::make_shared<ModalModel>(beam_modes_analytical(0.423, 5, 2));
  m->mode_shapes.setZero();
  m->mode_shapes(1, 0) = 1.0;
  m->mode_shapes(2, 1) = 1.0;
  try {
    mac(*m, {1, 2}, {{1, 3}});
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mode unobservable at configuration"), std::string::npos);
  }
}

TEST(Mac, ExhaustiveBestOnBeamMatchesDirectFormula) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 2);
  const auto best = exhaustive_best(ctx);
  const auto mm = mac(*model, {1, 2}, best.config);
  const auto p = to_problem(*model, {1, 2}, 2);
  EXPECT_NEAR(mm(0, 1), oracle::mac_entry(p.shapes, 0, 1, best.config.cells), 1e-12);
}

TEST(Mac, RandomInstancesSymmetricUnitDiagonalBounded) {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 4 + rng.index(10);
    const int k = 2 + rng.index(3);
    auto m = std::make_shared<ModalModel>(beam_modes_analytical(0.423, n, 1));
    m->mode_shapes.resize(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) m->mode_shapes(i, j) = 2.0 * rng.uniform() - 1.0;
    m->frequencies.assign(static_cast<std::size_t>(k), 1.0);
    const int s = 2 + rng.index(n - 2);
    auto nodes = m->placeable_nodes();
    std::vector<int> cells(nodes.begin(), nodes.begin() + s);
    const auto mm = mac(*m, {1, k}, {cells});
    for (int a = 0; a < k; ++a) {
      EXPECT_NEAR(mm(a, a), 1.0, 1e-12);
      for (int b = 0; b < k; ++b) {
        EXPECT_NEAR(mm(a, b), mm(b, a), 1e-12);
        EXPECT_GE(mm(a, b), -1e-12);
        EXPECT_LE(mm(a, b), 1.0 + 1e-12);
      }
    }
  }
}

class EvalFixture : public ::testing::Test {
 protected:
  EvalFixture() : suite_(std::make_shared<const EnvSuite>(beam_toy(6, 2), 2)) {}
  std::shared_ptr<const EnvSuite> suite_;
};

TEST_F(EvalFixture, UnreachableBaselineSolvesNothing) {
  ActorCritic net(PolicyShape{suite_->observation_size(), 8, 2, 4}, 1);
  EvalOptions o;
  o.n_episodes = 10;
  o.episode_length = 20;
  o.baseline_override = std::numeric_limits<double>::infinity();
  const auto r = evaluate(net, suite_, {suite_->base_level(2)}, o);
  EXPECT_EQ(r.levels[0].solved_rate, 0.0);
}

TEST_F(EvalFixture, ExhaustiveOraclePolicySolvesEverything) {
  // EfI is optimal everywhere on the 6-candidate toy; the 20-candidate one
  // leaves a gap on the single-mode levels.
  const auto suite = std::make_shared<const EnvSuite>(beam_toy(20, 2), 2);
  EvalOptions o;
  o.n_episodes = 8;
  o.episode_length = 60;
  int tested = 0;
  for (int li = 0; li < suite->n_levels(); ++li) {
    const auto best = exhaustive_best(suite->context(li));
    const auto r = evaluate(TargetPolicy(best.config), suite, {suite->base_level(li)}, o);
    const auto& l = r.levels[0];
    if (!(best.det > l.efi_det)) continue;
    ++tested;
    EXPECT_EQ(l.solved_rate, 1.0);
    EXPECT_EQ(l.best_config, best.config);
    EXPECT_EQ(l.stddev, 0.0);
    const int n_modes = suite->thetas()[static_cast<std::size_t>(li)].size();
    EXPECT_EQ(l.mac.rows(), n_modes >= 2 ? n_modes : 0);
  }
  EXPECT_GT(tested, 0);
}

TEST_F(EvalFixture, GreedyDeterministicRunsHaveZeroSpread) {
  ActorCritic net(PolicyShape{suite_->observation_size(), 8, 2, 4}, 3);
  EvalOptions o;
  o.n_episodes = 12;
  o.episode_length = 25;
  o.greedy = true;
  const auto r = evaluate(net, suite_, {suite_->base_level(0), suite_->base_level(1)}, o);
  for (const auto& l : r.levels) EXPECT_EQ(l.stddev, 0.0);
}

TEST_F(EvalFixture, ReproduciblePerSeed) {
  ActorCritic net(PolicyShape{suite_->observation_size(), 8, 2, 4}, 3);
  EvalOptions o;
  o.n_episodes = 12;
  o.episode_length = 25;
  o.seed = 4;
  o.randomize_init = true;
  const auto a = evaluate(net, suite_, {suite_->base_level(2)}, o);
  o.n_threads = 1;
  const auto b = evaluate(net, suite_, {suite_->base_level(2)}, o);
  EXPECT_EQ(a.levels[0].final_dets, b.levels[0].final_dets);
  std::ostringstream ca, cb;
  write_eval_csv(ca, a, {"train"});
  write_eval_csv(cb, b, {"train"});
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_GE(a.levels[0].solved_rate, 0.0);
  EXPECT_LE(a.levels[0].solved_rate, 1.0);
}

TEST_F(EvalFixture, EmptyLevelListThrows) {
  ActorCritic net(PolicyShape{suite_->observation_size(), 8, 2, 4}, 3);
  EXPECT_THROW(evaluate(net, suite_, {}, EvalOptions{}), std::invalid_argument);
}

TEST(EvalPlate, DefaultMeshSkipsExhaustiveWithMarker) {
  auto model = std::make_shared<const ModalModel>(assemble_plate_model(PlateGeometry{}, MaterialSpec{}, 0.0127, 2));
  auto suite = std::make_shared<const EnvSuite>(model, 5);
  ActorCritic net(PolicyShape{suite->observation_size(), 8, 5, 4}, 3);
  EvalOptions o;
  o.n_episodes = 2;
  o.episode_length = 5;
  const auto r = evaluate(net, suite, {suite->base_level(0)}, o);
  EXPECT_FALSE(r.levels[0].exhaustive.has_value());
  EXPECT_EQ(r.levels[0].exhaustive_note, "budget exceeded");
}

}  // namespace
}  // namespace modalcur
