#pragma once

#include "modalcur/info_reward.hpp"
#include "modalcur/modal_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace modalcur {

// Per-step record of the backward elimination.
struct EfiTrace {
  std::vector<std::vector<int>> candidates;  // surviving rows before each deletion
  std::vector<Eigen::VectorXd> effectiveness;  // E over those rows
  std::vector<int> removed;                  // node deleted at each step
};

// Effective independence over the placeable nodes: repeatedly drop the row
// with the smallest diag(Phi_s (Phi_s^T Phi_s)^-1 Phi_s^T), first index on ties.
SensorConfig effective_independence(const ModalModel& model, ModeRange theta, int n_sensors, EfiTrace* trace = nullptr);

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded() : std::runtime_error("combinatorial budget exceeded") {}
};

inline constexpr std::int64_t kExhaustiveBudget = 1'000'000;

// n choose k, saturating at INT64_MAX.
std::int64_t binomial(std::int64_t n, std::int64_t k);

struct ExhaustiveResult {
  SensorConfig config;  // ascending cells
  double det = 0.0;
  std::int64_t evaluated = 0;
  std::int64_t degenerate = 0;  // subsets skipped for a degenerate covariance
};

// Maximises det_fim over every placeable subset of size ctx.n_sensors();
// ties go to the lexicographically smallest subset.
ExhaustiveResult exhaustive_best(const FimContext& ctx, std::int64_t budget = kExhaustiveBudget);

// MAC(i,j) = (phi_i . phi_j)^2 / ((phi_i . phi_i)(phi_j . phi_j)) over the
// rows of Phi_theta selected by config.
Eigen::MatrixXd mac(const ModalModel& model, ModeRange theta, const SensorConfig& config);

}  // namespace modalcur
