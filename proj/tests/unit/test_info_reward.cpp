#include "fixtures.hpp"

#include <modalcur/info_reward.hpp>
#include <modalcur/rng.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

namespace modalcur {
namespace {

using testing::beam_toy;
using testing::rel_err;
using testing::to_problem;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(PairNorm, LargerEntryBecomesOne) {
  const auto [a, b] = pair_norm(vec({2.0}), vec({1.0}));
  EXPECT_EQ(a(0), 1.0);
  EXPECT_EQ(b(0), 0.5);
}

TEST(PairNorm, EqualVectorsGiveOnes) {
  const auto [a, b] = pair_norm(vec({0.3, -0.7, 2.0}), vec({0.3, -0.7, 2.0}));
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(a(k), 1.0);
    EXPECT_EQ(b(k), 1.0);
  }
}

TEST(PairNorm, BothZeroGivesZero) {
  const auto [a, b] = pair_norm(vec({0.0}), vec({0.0}));
  EXPECT_EQ(a(0), 0.0);
  EXPECT_EQ(b(0), 0.0);
}

TEST(PairNorm, MismatchedLengthsThrow) { EXPECT_THROW(pair_norm(vec({1.0}), vec({1.0, 2.0})), std::invalid_argument); }

TEST(Covariance, DiagonalIsOneWhenEntriesNonzero) {
  const auto model = beam_toy(6, 3);
  FimContext ctx(model, {1, 3}, 2);
  for (int i : model->placeable_nodes()) EXPECT_NEAR(covariance(ctx, i, i), 1.0, 1e-15);
}

TEST(Covariance, DecaysWithDistance) {
  // A long beam with the same shape samples pushes the far-end kernel down.
  const auto model = beam_toy(20, 1);
  FimContext ctx(model, {1, 1}, 20);
  EXPECT_LT(covariance(ctx, 1, 20), 1e-6);
  EXPECT_GT(covariance(ctx, 1, 2), covariance(ctx, 1, 5));
}

TEST(Covariance, ThreeNodeBeamMatchesHandEvaluation) {
  const auto model = std::make_shared<const ModalModel>(beam_modes_analytical(0.423, 3, 2));
  FimContext ctx(model, {1, 2}, 2);
  const auto p = to_problem(*model, {1, 2}, 2);
  const auto sigma = covariance_matrix(ctx);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(sigma(i, j), oracle::covariance(p, i, j), 1e-15) << i << "," << j;
}

TEST(Covariance, SymmetricUnitDiagonalBoundedOnRandomModels) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = std::make_shared<ModalModel>(beam_modes_analytical(0.423, 12, 3));
    for (int i = 1; i < m->n_nodes(); ++i)
      for (int k = 0; k < 3; ++k) m->mode_shapes(i, k) = rng.uniform() + 0.05;
    normalise_columns(m->mode_shapes);
    FimContext ctx(m, {1, 3}, 3);
    const auto s = covariance_matrix(ctx);
    for (int i = 1; i < m->n_nodes(); ++i) {
      EXPECT_NEAR(s(i, i), 1.0, 1e-12);
      for (int j = 0; j < m->n_nodes(); ++j) {
        EXPECT_EQ(s(i, j), s(j, i));
        EXPECT_LE(s(i, j), 1.0 + 1e-12);
        EXPECT_GE(s(i, j), 0.0);
      }
    }
  }
}

TEST(Fim, SingleSensorSingleModeIsSquaredShape) {
  const auto model = beam_toy(6, 1);
  FimContext ctx(model, {1, 1}, 1);
  for (int i : model->placeable_nodes()) {
    const double phi = model->mode_shapes(i, 0);
    EXPECT_NEAR(det_fim(ctx, {{i}}), phi * phi, 1e-15);
  }
}

TEST(Fim, SymmetricAndPositiveSemidefinite) {
  const auto model = beam_toy(12, 3);
  FimContext ctx(model, {1, 3}, 4);
  const SensorConfig cfg{{2, 5, 9, 12}};
  const auto q = fim(ctx, cfg);
  EXPECT_LE((q - q.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(Fim, MatchesStraightLineOracleOnEveryToyConfig) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 2);
  const auto p = to_problem(*model, {1, 2}, 2);
  const auto all = oracle::enumerate_all(p, model->placeable_nodes());
  ASSERT_EQ(all.configs.size(), 15u);
  double best = -1.0;
  std::vector<int> best_cells;
  for (std::size_t n = 0; n < all.configs.size(); ++n) {
    const SensorConfig cfg{all.configs[n]};
    const auto q = fim(ctx, cfg);
    const auto qo = oracle::fim(p, all.configs[n]);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) EXPECT_LT(rel_err(q(r, c), qo[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]), 1e-10);
    const double d = det_fim(ctx, cfg);
    EXPECT_LT(rel_err(d, all.dets[n]), 1e-10);
    if (d > best) {
      best = d;
      best_cells = all.configs[n];
    }
  }
  EXPECT_EQ(best_cells, all.best);
}

TEST(Fim, DeterminantIgnoresSensorOrder) {
  const auto model = beam_toy(12, 3);
  FimContext ctx(model, {1, 3}, 3);
  const double a = det_fim(ctx, {{3, 7, 11}});
  EXPECT_NEAR(det_fim(ctx, {{11, 3, 7}}), a, 1e-12 * std::abs(a));
  EXPECT_NEAR(det_fim(ctx, {{7, 11, 3}}), a, 1e-12 * std::abs(a));
}

TEST(Fim, AddingASensorNeverLowersDetOnToy) {
  // Empirical record over the 6-candidate toy, not a theorem.
  const auto model = beam_toy(6, 2);
  FimContext two(model, {1, 2}, 2);
  FimContext three(model, {1, 2}, 3);
  const auto nodes = model->placeable_nodes();
  int violations = 0;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b)
      for (int extra : nodes) {
        if (extra == nodes[a] || extra == nodes[b]) continue;
        if (det_fim(three, {{nodes[a], nodes[b], extra}}) < det_fim(two, {{nodes[a], nodes[b]}})) ++violations;
      }
  RecordProperty("nested_violations", violations);
  SUCCEED();
}

TEST(Fim, RejectsInvalidConfigs) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 2);
  EXPECT_THROW(fim(ctx, {{1, 1}}), std::invalid_argument);
  EXPECT_THROW(fim(ctx, {{0, 1}}), std::invalid_argument);  // clamped node
  EXPECT_THROW(fim(ctx, {{1}}), std::invalid_argument);
  EXPECT_THROW(fim(ctx, {{1, 99}}), std::invalid_argument);
}

TEST(Reward, IdentityAntisymmetryAndTelescoping) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 2);
  const SensorConfig a{{1, 3}}, b{{2, 6}}, c{{4, 5}};
  EXPECT_EQ(reward_delta(ctx, a, a), 0.0);
  EXPECT_EQ(reward_delta(ctx, a, b), -reward_delta(ctx, b, a));
  EXPECT_NEAR(reward_delta(ctx, a, b) + reward_delta(ctx, b, c), det_fim(ctx, c) - det_fim(ctx, a), 1e-12);
}

TEST(Context, UpsilonIsDiameterOverSensorCount) {
  const auto model = beam_toy(6, 2);
  FimContext ctx(model, {1, 2}, 3);
  EXPECT_NEAR(ctx.upsilon(), 0.423 / 3.0, 1e-15);
}

}  // namespace
}  // namespace modalcur
