#include "modalcur/sensing_env.hpp"

#include <stdexcept>

namespace modalcur {

std::vector<int> Observation::active_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < occupancy.size(); ++i)
    if (occupancy[i]) out.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < level_id.size(); ++i)
    if (level_id[i]) out.push_back(static_cast<int>(occupancy.size() + i));
  return out;
}

std::vector<double> Observation::flatten() const {
  std::vector<double> out;
  out.reserve(occupancy.size() + level_id.size());
  for (auto v : occupancy) out.push_back(v);
  for (auto v : level_id) out.push_back(v);
  return out;
}

EnvSuite::EnvSuite(std::shared_ptr<const ModalModel> model, int n_sensors, int n_modes_used)
    : model_(std::move(model)), grid_(*model_), n_sensors_(n_sensors) {
  model_->validate();
  if (n_modes_used <= 0) n_modes_used = model_->n_modes();
  if (n_modes_used > model_->n_modes()) throw std::invalid_argument("n_modes exceeds modes available in the model");
  if (n_sensors_ < 1) throw std::invalid_argument("n_sensors must be >= 1");
  if (static_cast<int>(model_->placeable_nodes().size()) < n_sensors_)
    throw std::invalid_argument("fewer placeable cells than sensors");
  thetas_ = enumerate_levels(n_modes_used);
  auto distances = std::make_shared<const Eigen::MatrixXd>(pairwise_distances(*model_));
  for (const auto& theta : thetas_) contexts_.push_back(std::make_unique<const FimContext>(model_, theta, n_sensors_, distances));
  default_init_ = default_init_config(*model_, grid_, n_sensors_);
}

const FimContext& EnvSuite::context(int level_index) const {
  if (level_index < 0 || level_index >= n_levels()) throw std::invalid_argument("level index out of range");
  return *contexts_[static_cast<std::size_t>(level_index)];
}

EnvLevel EnvSuite::base_level(int level_index) const {
  EnvLevel level;
  level.theta = context(level_index).theta();
  level.init_config = default_init_;
  level.level_index = level_index;
  level.n_levels = n_levels();
  return level;
}

void EnvSuite::check_level(const EnvLevel& level) const {
  if (level.n_levels != n_levels()) throw std::invalid_argument("invalid level: one-hot size does not match suite");
  if (level.level_index < 0 || level.level_index >= n_levels()) throw std::invalid_argument("invalid level: index out of range");
  if (!(thetas_[static_cast<std::size_t>(level.level_index)] == level.theta))
    throw std::invalid_argument("invalid level: theta does not match level index");
  context(level.level_index).check_config(level.init_config);
}

SensorEnv::SensorEnv(std::shared_ptr<const EnvSuite> suite, int episode_length)
    : suite_(std::move(suite)), episode_length_(episode_length) {
  if (!suite_) throw std::invalid_argument("SensorEnv requires a suite");
  if (episode_length_ < 1) throw std::invalid_argument("episode_length must be >= 1");
}

Observation SensorEnv::reset(const EnvLevel& level) {
  suite_->check_level(level);
  const auto& ctx = suite_->context(level.level_index);
  double d = 0.0;
  try {
    d = det_fim(ctx, level.init_config);
  } catch (const DegenerateCovariance&) {
    throw std::invalid_argument("invalid level: degenerate initial sensor covariance");
  }
  level_ = level;
  config_ = level.init_config;
  occupancy_.assign(static_cast<std::size_t>(suite_->model().n_nodes()), 0);
  for (int c : config_.cells) occupancy_[static_cast<std::size_t>(c)] = 1;
  current_det_ = initial_det_ = d;
  steps_ = 0;
  ready_ = true;
  return observe();
}

Observation SensorEnv::observe() const {
  if (!ready_) throw std::logic_error("environment not reset");
  return {occupancy_, level_.level_id_onehot()};
}

int SensorEnv::move_target(const Action& action) const {
  if (action.sensor < 0 || action.sensor >= static_cast<int>(config_.cells.size()))
    throw std::invalid_argument("action sensor index out of range");
  const auto& grid = suite_->grid();
  const int cell = config_.cells[static_cast<std::size_t>(action.sensor)];
  int col = grid.column_of(cell);
  int row = grid.row_of(cell);
  switch (action.direction) {
    case Direction::up: ++row; break;
    case Direction::down: --row; break;
    case Direction::left: --col; break;
    case Direction::right: ++col; break;
    default: throw std::invalid_argument("action direction out of range");
  }
  const int target = grid.node_at(col, row);
  if (target < 0) return -1;
  if (!suite_->model().placement_mask[static_cast<std::size_t>(target)]) return -1;
  if (occupancy_[static_cast<std::size_t>(target)]) return -1;
  return target;
}

StepResult SensorEnv::step(const Action& action) {
  if (!ready_) throw std::logic_error("environment not reset");
  if (done()) throw std::logic_error("episode finished");
  const int target = move_target(action);
  StepResult out;
  if (target >= 0) {
    SensorConfig next = config_;
    const int from = next.cells[static_cast<std::size_t>(action.sensor)];
    next.cells[static_cast<std::size_t>(action.sensor)] = target;
    try {
      const double d = det_fim(suite_->context(level_.level_index), next);
      out.reward = d - current_det_;
      current_det_ = d;
      config_ = std::move(next);
      occupancy_[static_cast<std::size_t>(from)] = 0;
      occupancy_[static_cast<std::size_t>(target)] = 1;
    } catch (const DegenerateCovariance&) {
      // Treated like any other blocked move.
      out.reward = 0.0;
    }
  }
  ++steps_;
  out.done = done();
  out.observation = observe();
  return out;
}

}  // namespace modalcur
