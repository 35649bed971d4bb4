#pragma once

#include "modalcur/levels.hpp"
#include "modalcur/modal_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace modalcur {

enum class ScoringMode { abs_gae, positive_value_loss };

std::string to_string(ScoringMode mode);
ScoringMode scoring_mode_from_string(const std::string& name);

struct CurriculumConfig {
  double replay_rate = 0.8;  // p
  double edit_rate = 1.0;    // q
  int buffer_size = 15;      // K
  double temperature = 0.3;  // beta
  double staleness = 0.3;    // rho
  int n_edits = 1;
  ScoringMode scoring = ScoringMode::positive_value_loss;

  void validate() const;
};

// S = (1/T) sum_t f(sum_{k>=t} (gamma lambda)^(k-t) delta_k) with f = |.|
// (abs_gae) or max(., 0) (positive_value_loss).
double score_trajectory(std::span<const double> deltas, double gamma, double lambda, ScoringMode mode);

// Rank prioritisation: h = 1/rank (rank 1 = largest score, ties go to the
// lower index), P proportional to h^(1/beta).
std::vector<double> scoring_distribution(std::span<const double> scores, double beta);

// P_i = (c - C_i) / sum_j (c - C_j); uniform when every C_i == c.
std::vector<double> staleness_distribution(std::span<const std::int64_t> counters, std::int64_t c);

struct LevelBufferEntry {
  EnvLevel level;
  double score = 0.0;
  std::int64_t last_sampled_at = 0;
  std::int64_t id = 0;
  std::int64_t parent = -1;  // id of the level this one was mutated from
  std::uint64_t seed = 0;    // mutation seed, 0 for base levels
};

// Entries in insertion order (oldest first).
using LevelBuffer = std::vector<LevelBufferEntry>;

// (1 - rho) P_S + rho P_C.
std::vector<double> replay_distribution(const LevelBuffer& buffer, const CurriculumConfig& cfg, std::int64_t c);

enum class TaskOrigin { sampled, replayed, mutated };
std::string to_string(TaskOrigin origin);

struct Task {
  EnvLevel level;
  TaskOrigin origin = TaskOrigin::sampled;
  std::int64_t source_id = -1;  // replayed entry, or mutation parent
  std::uint64_t seed = 0;
};

// Dual-curriculum coordinator. Single writer; not thread-safe.
class Curriculum {
 public:
  Curriculum(CurriculumConfig cfg, std::vector<EnvLevel> training_levels, std::shared_ptr<const ModalModel> model);

  [[nodiscard]] const CurriculumConfig& config() const { return cfg_; }
  [[nodiscard]] const LevelBuffer& buffer() const { return buffer_; }
  [[nodiscard]] const std::vector<EnvLevel>& training_levels() const { return training_levels_; }
  [[nodiscard]] std::int64_t next_id() const { return next_id_; }

  // Deterministic in (buffer, config, c, seed).
  [[nodiscard]] Task next_task(std::int64_t c, std::uint64_t seed) const;

  // Records the rollout score for `task` and evicts the lowest-ranked entry
  // when the buffer exceeds K.
  void update_after_rollout(const Task& task, double score, std::int64_t c);

  void restore(LevelBuffer buffer, std::int64_t next_id);

 private:
  CurriculumConfig cfg_;
  std::vector<EnvLevel> training_levels_;
  std::shared_ptr<const ModalModel> model_;
  LevelBuffer buffer_;
  std::int64_t next_id_ = 0;
};

void write_buffer_snapshot(std::ostream& out, const LevelBuffer& buffer, std::int64_t c, std::int64_t next_id);
struct BufferSnapshot {
  LevelBuffer buffer;
  std::int64_t c = 0;
  std::int64_t next_id = 0;
};
BufferSnapshot read_buffer_snapshot(std::istream& in);

}  // namespace modalcur
