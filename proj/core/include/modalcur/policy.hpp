#pragma once

#include "modalcur/sensing_env.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace modalcur {

struct PolicyShape {
  int obs_size = 0;
  int hidden = 256;
  int n_sensors = 1;
  int n_directions = kNumDirections;

  [[nodiscard]] Eigen::Index param_count() const;
  void validate() const;
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

// Recurrent state of a batch of E environments, one column each (H x E).
struct RecurrentState {
  Eigen::MatrixXd h;
  Eigen::MatrixXd c;

  static RecurrentState zeros(int hidden, int batch = 1) {
    return {Eigen::MatrixXd::Zero(hidden, batch), Eigen::MatrixXd::Zero(hidden, batch)};
  }
  [[nodiscard]] int batch() const { return static_cast<int>(h.cols()); }
  void reset_column(int e) {
    h.col(e).setZero();
    c.col(e).setZero();
  }
};

// LSTM core followed by two categorical heads (sensor, direction) and a
// scalar value head. All weights live in one flat vector:
//   W_x (4H x obs, column-major), W_h (4H x H), b (4H),
//   W_s (S x H), b_s (S), W_d (D x H), b_d (D), w_v (H), b_v.
// Gate order inside each 4H block: input, forget, cell, output.
class ActorCritic {
 public:
  explicit ActorCritic(PolicyShape shape);  // all-zero weights
  ActorCritic(PolicyShape shape, std::uint64_t seed);

  [[nodiscard]] const PolicyShape& shape() const { return shape_; }
  [[nodiscard]] const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& mutable_params() { return params_; }
  void set_params(const Eigen::VectorXd& p);

  struct Offsets {
    Eigen::Index wx, wh, b, ws, bs, wd, bd, wv, bv, total;
  };
  [[nodiscard]] static Offsets offsets(const PolicyShape& shape);

 private:
  PolicyShape shape_;
  Eigen::VectorXd params_;
};

// Binary observation of one environment as the ascending indices of its ones.
using SparseObs = std::vector<int>;

// Cached activations of one batched step; also the forward result.
struct StepCache {
  std::vector<SparseObs> active;
  Eigen::MatrixXd h_prev, c_prev;
  Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;
  Eigen::MatrixXd c, tanh_c, h;
  Eigen::MatrixXd sensor_logits;     // S x E
  Eigen::MatrixXd direction_logits;  // D x E
  Eigen::RowVectorXd value;          // 1 x E
};

// One recurrent step for E environments in lockstep.
StepCache policy_step_batch(const ActorCritic& net, const std::vector<SparseObs>& active, const RecurrentState& state);

struct PolicyOutput {
  Eigen::VectorXd sensor_probs;
  Eigen::VectorXd direction_probs;
  double value = 0.0;
  RecurrentState next;
};

PolicyOutput policy_step(const ActorCritic& net, const Observation& obs, const RecurrentState& state);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

// Joint log-probability of a factorised action: sum of both head terms.
double action_log_prob(const Eigen::VectorXd& sensor_logits, const Eigen::VectorXd& direction_logits,
                       const Action& action);

// Lockstep forward over T steps. active[t][e] is the observation of env e at
// step t; reset_before[t * E + e] zeroes that env's state before step t.
std::vector<StepCache> forward_sequence(const ActorCritic& net, const std::vector<std::vector<SparseObs>>& active,
                                        const std::vector<std::uint8_t>& reset_before, const RecurrentState& initial);

// Output gradients for every step: dLoss/d(logits, value) per env column.
struct OutputGrad {
  Eigen::MatrixXd sensor_logits;
  Eigen::MatrixXd direction_logits;
  Eigen::RowVectorXd value;
};

// Back-propagation through time; accumulates dLoss/dparams into `grad`.
void backward_sequence(const ActorCritic& net, const std::vector<StepCache>& caches,
                       const std::vector<std::uint8_t>& reset_before, const std::vector<OutputGrad>& d_out,
                       Eigen::Ref<Eigen::VectorXd> grad);

}  // namespace modalcur
