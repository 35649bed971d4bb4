#include "modalcur/info_reward.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace modalcur {

std::string ModeRange::label() const {
  std::string out;
  for (int k = first; k <= last; ++k) {
    if (k > first) out.push_back(',');
    out += std::to_string(k);
  }
  return out;
}

Eigen::MatrixXd pairwise_distances(const ModalModel& model) {
  const int n = model.n_nodes();
  Eigen::MatrixXd d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    const auto& a = model.node_coords[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) {
      const auto& b = model.node_coords[static_cast<std::size_t>(j)];
      d(i, j) = d(j, i) = std::hypot(a.x - b.x, a.y - b.y);
    }
  }
  return d;
}

FimContext::FimContext(std::shared_ptr<const ModalModel> model, ModeRange theta, int n_sensors,
                       std::shared_ptr<const Eigen::MatrixXd> pair_distance)
    : model_(std::move(model)), theta_(theta), n_sensors_(n_sensors), pair_distance_(std::move(pair_distance)) {
  if (!model_) throw std::invalid_argument("FimContext requires a model");
  if (theta_.first < 1 || theta_.last < theta_.first || theta_.last > model_->n_modes())
    throw std::invalid_argument("theta must be a non-empty contiguous range within 1..K");
  if (n_sensors_ < 1) throw std::invalid_argument("n_sensors must be >= 1");
  if (!pair_distance_) pair_distance_ = std::make_shared<const Eigen::MatrixXd>(pairwise_distances(*model_));
  if (pair_distance_->rows() != model_->n_nodes() || pair_distance_->cols() != model_->n_nodes())
    throw std::invalid_argument("pair_distance size does not match model");
  const double diameter = pair_distance_->maxCoeff();
  upsilon_ = diameter / static_cast<double>(n_sensors_);
  if (!(upsilon_ > 0.0)) throw std::invalid_argument("upsilon must be > 0 (model needs >= 2 distinct nodes)");
  theta_shapes_ = model_->mode_shapes.middleCols(theta_.first - 1, theta_.size());
}

void FimContext::check_config(const SensorConfig& config) const {
  if (static_cast<int>(config.cells.size()) != n_sensors_)
    throw std::invalid_argument("sensor config length does not match sensor count");
  std::vector<int> sorted = config.cells;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("sensor cells must be distinct");
  for (int c : config.cells) {
    if (c < 0 || c >= model_->n_nodes()) throw std::invalid_argument("sensor cell out of range");
    if (!model_->placement_mask[static_cast<std::size_t>(c)]) throw std::invalid_argument("sensor cell outside placement region");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> pair_norm(const Eigen::VectorXd& phi_i, const Eigen::VectorXd& phi_j) {
  if (phi_i.size() != phi_j.size() || phi_i.size() < 1)
    throw std::invalid_argument("pair_norm requires equal-length non-empty vectors");
  Eigen::VectorXd psi_i(phi_i.size());
  Eigen::VectorXd psi_j(phi_j.size());
  for (Eigen::Index k = 0; k < phi_i.size(); ++k) {
    const double a = std::abs(phi_i(k));
    const double b = std::abs(phi_j(k));
    const double m = std::max(a, b);
    psi_i(k) = m > 0.0 ? a / m : 0.0;
    psi_j(k) = m > 0.0 ? b / m : 0.0;
  }
  return {psi_i, psi_j};
}

double covariance(const FimContext& ctx, int i, int j) {
  const auto& shapes = ctx.theta_shapes();
  // psi_i . psi_j reduces per mode to min(|a|,|b|) / max(|a|,|b|).
  double dot = 0.0;
  for (Eigen::Index k = 0; k < shapes.cols(); ++k) {
    const double a = std::abs(shapes(i, k));
    const double b = std::abs(shapes(j, k));
    const double m = std::max(a, b);
    if (m > 0.0) dot += std::min(a, b) / m;
  }
  const double n_m = static_cast<double>(ctx.theta().size());
  return std::exp(-ctx.pair_distance()(i, j) / ctx.upsilon()) * dot / n_m;
}

Eigen::MatrixXd covariance_matrix(const FimContext& ctx) {
  const int n = ctx.model().n_nodes();
  Eigen::MatrixXd sigma(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) sigma(i, j) = sigma(j, i) = covariance(ctx, i, j);
  return sigma;
}

Eigen::MatrixXd sensor_covariance(const FimContext& ctx, const SensorConfig& config) {
  const auto m = static_cast<Eigen::Index>(config.cells.size());
  Eigen::MatrixXd s(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b)
      s(a, b) = s(b, a) = covariance(ctx, config.cells[static_cast<std::size_t>(a)], config.cells[static_cast<std::size_t>(b)]);
  return s;
}

Eigen::MatrixXd fim(const FimContext& ctx, const SensorConfig& config) {
  ctx.check_config(config);
  const Eigen::MatrixXd s = sensor_covariance(ctx, config);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCovarianceCondition) throw DegenerateCovariance();

  const auto& shapes = ctx.theta_shapes();
  Eigen::MatrixXd a(s.rows(), shapes.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) a.row(r) = shapes.row(config.cells[static_cast<std::size_t>(r)]);
  const Eigen::MatrixXd solved = s.ldlt().solve(a);
  Eigen::MatrixXd q = a.transpose() * solved;
  return 0.5 * (q + q.transpose());
}

double det_fim(const FimContext& ctx, const SensorConfig& config) {
  // Q is PSD; a rank-deficient Q may round to a tiny negative determinant.
  return std::max(0.0, fim(ctx, config).determinant());
}

double log_det_fim(const FimContext& ctx, const SensorConfig& config) {
  const double d = det_fim(ctx, config);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

double reward_delta(const FimContext& ctx, const SensorConfig& before, const SensorConfig& after) {
  return det_fim(ctx, after) - det_fim(ctx, before);
}

}  // namespace modalcur
