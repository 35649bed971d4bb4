#pragma once

#include "modalcur/policy.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace modalcur {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int rollout_length = 256;
  int n_workers = 16;
  int epochs = 5;
  int minibatches = 1;
  double clip_range = 0.2;
  double learning_rate = 1e-4;
  double adam_eps = 1e-5;
  double max_grad_norm = 0.5;
  bool value_clipping = true;
  bool return_normalisation = true;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  int hidden = 256;

  void validate() const;
};

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  Eigen::VectorXd deltas;
};

// done[t] marks the last step of an episode: v_{t+1} is not bootstrapped and
// the advantage recursion restarts. `bootstrap` is v after the final step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
                      double bootstrap, double gamma, double lambda);

// Rollout of E environments over T lockstep steps. Per-step arrays are
// indexed t * E + e.
struct RolloutBatch {
  int n_envs = 0;
  int length = 0;
  RecurrentState initial;
  std::vector<std::vector<SparseObs>> observations;  // [t][e]
  std::vector<std::uint8_t> reset_before;
  std::vector<Action> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  std::vector<std::uint8_t> dones;
  Eigen::VectorXd bootstrap_values;  // per env
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;

  void check() const;
  // Fills advantages and returns from rewards, values and dones.
  void compute_advantages(double gamma, double lambda);
  // The columns listed in `envs`, in that order.
  [[nodiscard]] RolloutBatch select_envs(std::span<const int> envs) const;
};

struct LossStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double max_ratio_deviation = 0.0;  // max |ratio - 1|
};

// Clipped surrogate + value_coef * (clipped) value loss - entropy_coef *
// entropy, means over all samples. Uses batch.advantages as given. When
// `grad` is non-null it receives dLoss/dparams.
LossStats ppo_loss(const ActorCritic& net, const RolloutBatch& batch, const PpoConfig& cfg, Eigen::VectorXd* grad);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;

// Bias-corrected Adam step.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr, double eps);

// Scales g in place to global norm at most max_norm; returns the norm before.
double clip_grad_norm(Eigen::VectorXd& g, double max_norm);

// Running variance of discounted returns; rewards are divided by its std.
class ReturnNormaliser {
 public:
  ReturnNormaliser() = default;
  ReturnNormaliser(double mean, double var, double count) : mean_(mean), var_(var), count_(count) {}

  void observe(double discounted_return);
  [[nodiscard]] double scale() const;
  [[nodiscard]] double normalise(double reward) const { return reward / scale(); }

  [[nodiscard]] double mean() const { return mean_; }
  [[nodiscard]] double var() const { return var_; }
  [[nodiscard]] double count() const { return count_; }

 private:
  double mean_ = 0.0;
  double var_ = 1.0;
  double count_ = 1e-4;
};

struct UpdateStats {
  LossStats first_epoch;
  LossStats last_epoch;
  double grad_norm = 0.0;  // before clipping, last minibatch
  bool aborted = false;
  std::string abort_reason;
};

// Computes GAE from the batch's rewards, normalises advantages over the
// batch, then runs cfg.epochs passes of
// cfg.minibatches env-partitioned minibatches. A non-finite loss or gradient
// restores the pre-update parameters and optimiser state.
UpdateStats ppo_update(ActorCritic& net, AdamState& adam, RolloutBatch batch, const PpoConfig& cfg);

}  // namespace modalcur
