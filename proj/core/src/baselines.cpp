#include "modalcur/baselines.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>

namespace modalcur {

namespace {

Eigen::MatrixXd theta_columns(const ModalModel& model, ModeRange theta) {
  if (theta.first < 1 || theta.last < theta.first || theta.last > model.n_modes())
    throw std::invalid_argument("theta must be a non-empty contiguous range within 1..K");
  return model.mode_shapes.middleCols(theta.first - 1, theta.size());
}

}  // namespace

SensorConfig effective_independence(const ModalModel& model, ModeRange theta, int n_sensors, EfiTrace* trace) {
  const Eigen::MatrixXd phi = theta_columns(model, theta);
  std::vector<int> rows = model.placeable_nodes();
  if (n_sensors < theta.size()) throw std::invalid_argument("n_sensors must be >= |theta|");
  if (static_cast<int>(rows.size()) < n_sensors) throw std::invalid_argument("fewer candidates than sensors");
  if (trace) *trace = {};

  while (true) {
    Eigen::MatrixXd phi_s(static_cast<Eigen::Index>(rows.size()), phi.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) phi_s.row(static_cast<Eigen::Index>(r)) = phi.row(rows[r]);
    const Eigen::MatrixXd a = phi_s.transpose() * phi_s;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * lmax)) throw std::runtime_error("mode shapes rank deficient on candidate set");
    if (static_cast<int>(rows.size()) == n_sensors) break;

    // E_r = phi_r^T A^-1 phi_r
    const Eigen::MatrixXd solved = a.ldlt().solve(phi_s.transpose());
    const Eigen::VectorXd e = (phi_s.array() * solved.transpose().array()).rowwise().sum().matrix();
    Eigen::Index worst = 0;
    for (Eigen::Index r = 1; r < e.size(); ++r)
      if (e[r] < e[worst]) worst = r;
    if (trace) {
      trace->candidates.push_back(rows);
      trace->effectiveness.push_back(e);
      trace->removed.push_back(rows[static_cast<std::size_t>(worst)]);
    }
    rows.erase(rows.begin() + worst);
  }
  return {rows};
}

std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t out = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    // out * (n - k + i) / i stays integral at every step.
    const std::int64_t num = n - k + i;
    if (out > std::numeric_limits<std::int64_t>::max() / num) return std::numeric_limits<std::int64_t>::max();
    out = out * num / i;
  }
  return out;
}

ExhaustiveResult exhaustive_best(const FimContext& ctx, std::int64_t budget) {
  const auto cand = ctx.model().placeable_nodes();
  const int n = static_cast<int>(cand.size());
  const int k = ctx.n_sensors();
  if (k > n) throw std::invalid_argument("fewer candidates than sensors");
  if (binomial(n, k) > budget) throw BudgetExceeded();

  ExhaustiveResult best;
  best.det = -1.0;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  SensorConfig config;
  config.cells.resize(static_cast<std::size_t>(k));
  while (true) {
    for (int i = 0; i < k; ++i) config.cells[static_cast<std::size_t>(i)] = cand[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    ++best.evaluated;
    try {
      const double d = det_fim(ctx, config);
      if (d > best.det) {
        best.det = d;
        best.config = config;
      }
    } catch (const DegenerateCovariance&) {
      ++best.degenerate;
    }
    // Next combination in lexicographic order.
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (best.config.cells.empty()) throw std::runtime_error("every configuration has a degenerate covariance");
  return best;
}

Eigen::MatrixXd mac(const ModalModel& model, ModeRange theta, const SensorConfig& config) {
  const Eigen::MatrixXd phi = theta_columns(model, theta);
  if (config.cells.empty()) throw std::invalid_argument("MAC needs at least one sensor");
  Eigen::MatrixXd r(static_cast<Eigen::Index>(config.cells.size()), phi.cols());
  for (std::size_t i = 0; i < config.cells.size(); ++i) {
    const int c = config.cells[i];
    if (c < 0 || c >= model.n_nodes()) throw std::invalid_argument("sensor cell out of range");
    r.row(static_cast<Eigen::Index>(i)) = phi.row(c);
  }
  const Eigen::MatrixXd g = r.transpose() * r;
  const Eigen::Index m = g.rows();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(g(i, i) > 0.0)) throw std::runtime_error("mode unobservable at configuration");
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double v = std::min(1.0, g(i, j) * g(i, j) / (g(i, i) * g(j, j)));
      out(i, j) = out(j, i) = v;
    }
  }
  return out;
}

}  // namespace modalcur
