#pragma once

#include "modalcur/info_reward.hpp"
#include "modalcur/levels.hpp"
#include "modalcur/modal_model.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace modalcur {

enum class Direction : std::uint8_t { up = 0, down = 1, left = 2, right = 3 };
inline constexpr int kNumDirections = 4;

struct Action {
  int sensor = 0;
  Direction direction = Direction::up;
  friend bool operator==(const Action&, const Action&) = default;
};

// Flattened layout is occupancy followed by the level one-hot.
struct Observation {
  std::vector<std::uint8_t> occupancy;
  std::vector<std::uint8_t> level_id;

  [[nodiscard]] int size() const { return static_cast<int>(occupancy.size() + level_id.size()); }
  // Indices of the non-zero entries of the flattened vector, ascending.
  [[nodiscard]] std::vector<int> active_indices() const;
  [[nodiscard]] std::vector<double> flatten() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

// Immutable data shared by every environment instance built on one model:
// candidate grid, level set and one FIM context per level.
class EnvSuite {
 public:
  EnvSuite(std::shared_ptr<const ModalModel> model, int n_sensors, int n_modes_used = 0);

  [[nodiscard]] const ModalModel& model() const { return *model_; }
  [[nodiscard]] const std::shared_ptr<const ModalModel>& model_ptr() const { return model_; }
  [[nodiscard]] const CandidateGrid& grid() const { return grid_; }
  [[nodiscard]] int n_sensors() const { return n_sensors_; }
  [[nodiscard]] int n_levels() const { return static_cast<int>(thetas_.size()); }
  [[nodiscard]] const std::vector<ModeRange>& thetas() const { return thetas_; }
  [[nodiscard]] const FimContext& context(int level_index) const;
  [[nodiscard]] int observation_size() const { return model_->n_nodes() + n_levels(); }

  // Level with the default (mid-line, next to the clamp) start positions.
  [[nodiscard]] EnvLevel base_level(int level_index) const;
  // Throws std::invalid_argument if the level does not belong to this suite.
  void check_level(const EnvLevel& level) const;

 private:
  std::shared_ptr<const ModalModel> model_;
  CandidateGrid grid_;
  int n_sensors_;
  std::vector<ModeRange> thetas_;
  std::vector<std::unique_ptr<const FimContext>> contexts_;
  SensorConfig default_init_;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

inline constexpr int kDefaultEpisodeLength = 200;

// Deterministic single-instance sensor placement environment.
class SensorEnv {
 public:
  explicit SensorEnv(std::shared_ptr<const EnvSuite> suite, int episode_length = kDefaultEpisodeLength);

  Observation reset(const EnvLevel& level);
  StepResult step(const Action& action);

  [[nodiscard]] Observation observe() const;
  [[nodiscard]] const SensorConfig& config() const { return config_; }
  [[nodiscard]] const EnvLevel& level() const { return level_; }
  [[nodiscard]] const EnvSuite& suite() const { return *suite_; }
  [[nodiscard]] double current_det() const { return current_det_; }
  [[nodiscard]] double initial_det() const { return initial_det_; }
  [[nodiscard]] int steps_taken() const { return steps_; }
  [[nodiscard]] int episode_length() const { return episode_length_; }
  [[nodiscard]] bool done() const { return steps_ >= episode_length_; }

  // Cell the sensor would move to, or -1 when the move is blocked.
  [[nodiscard]] int move_target(const Action& action) const;

 private:
  std::shared_ptr<const EnvSuite> suite_;
  int episode_length_;
  EnvLevel level_;
  SensorConfig config_;
  std::vector<std::uint8_t> occupancy_;
  double current_det_ = 0.0;
  double initial_det_ = 0.0;
  int steps_ = 0;
  bool ready_ = false;
};

}  // namespace modalcur
