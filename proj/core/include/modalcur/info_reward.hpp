#pragma once

#include "modalcur/modal_model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace modalcur {

// Contiguous 1-based mode range [first, last].
struct ModeRange {
  int first = 1;
  int last = 1;

  [[nodiscard]] int size() const { return last - first + 1; }
  [[nodiscard]] std::string label() const;  // "1,2,3"
  friend bool operator==(const ModeRange&, const ModeRange&) = default;
};

// Ordered list of candidate-node indices, one per sensor.
struct SensorConfig {
  std::vector<int> cells;
  friend bool operator==(const SensorConfig&, const SensorConfig&) = default;
};

// Raised when L Sigma L^T is singular or too badly conditioned to invert.
class DegenerateCovariance : public std::runtime_error {
 public:
  DegenerateCovariance() : std::runtime_error("degenerate sensor covariance") {}
};

inline constexpr double kMaxCovarianceCondition = 1e12;

// Euclidean distances between all node pairs.
Eigen::MatrixXd pairwise_distances(const ModalModel& model);

// Immutable evaluation context for one (model, theta) pair. Shares the model
// and the pairwise-distance table with sibling contexts built from the same model.
class FimContext {
 public:
  FimContext(std::shared_ptr<const ModalModel> model, ModeRange theta, int n_sensors,
             std::shared_ptr<const Eigen::MatrixXd> pair_distance = nullptr);

  [[nodiscard]] const ModalModel& model() const { return *model_; }
  [[nodiscard]] const std::shared_ptr<const ModalModel>& model_ptr() const { return model_; }
  [[nodiscard]] const ModeRange& theta() const { return theta_; }
  [[nodiscard]] int n_sensors() const { return n_sensors_; }
  [[nodiscard]] double upsilon() const { return upsilon_; }
  [[nodiscard]] const Eigen::MatrixXd& pair_distance() const { return *pair_distance_; }
  [[nodiscard]] const std::shared_ptr<const Eigen::MatrixXd>& pair_distance_ptr() const { return pair_distance_; }
  // Columns of Phi restricted to theta.
  [[nodiscard]] const Eigen::MatrixXd& theta_shapes() const { return theta_shapes_; }

  // Throws std::invalid_argument unless cells are distinct, placeable and
  // exactly n_sensors long.
  void check_config(const SensorConfig& config) const;

 private:
  std::shared_ptr<const ModalModel> model_;
  ModeRange theta_;
  int n_sensors_;
  double upsilon_;
  std::shared_ptr<const Eigen::MatrixXd> pair_distance_;
  Eigen::MatrixXd theta_shapes_;
};

// Pairwise magnitude normalisation of two mode vectors: each entry divided by
// the larger magnitude of the pair; 0 where both are 0.
std::pair<Eigen::VectorXd, Eigen::VectorXd> pair_norm(const Eigen::VectorXd& phi_i, const Eigen::VectorXd& phi_j);

// Sigma_ij = exp(-d_ij / upsilon) * psi_i . psi_j / |theta|.
double covariance(const FimContext& ctx, int i, int j);
Eigen::MatrixXd covariance_matrix(const FimContext& ctx);
Eigen::MatrixXd sensor_covariance(const FimContext& ctx, const SensorConfig& config);

// Q = (L Phi)^T (L Sigma L^T)^-1 (L Phi), |theta| x |theta|.
Eigen::MatrixXd fim(const FimContext& ctx, const SensorConfig& config);
double det_fim(const FimContext& ctx, const SensorConfig& config);
// Diagnostic only; -inf when det is 0.
double log_det_fim(const FimContext& ctx, const SensorConfig& config);

// det_fim(after) - det_fim(before).
double reward_delta(const FimContext& ctx, const SensorConfig& before, const SensorConfig& after);

}  // namespace modalcur
