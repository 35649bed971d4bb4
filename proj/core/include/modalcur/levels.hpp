#pragma once

#include "modalcur/info_reward.hpp"
#include "modalcur/modal_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace modalcur {

// All contiguous mode ranges of 1..n_modes, ordered by (length, first mode).
std::vector<ModeRange> enumerate_levels(int n_modes);

struct SplitIndices {
  std::vector<int> train;    // ascending
  std::vector<int> holdout;  // ascending
};

// round(fraction * n) indices (at least one) drawn uniformly without replacement; the rest
// form the holdout. Deterministic per seed.
SplitIndices split_indices(int n, double fraction, std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_eval(const std::vector<T>& levels, double fraction,
                                                           std::uint64_t seed) {
  const auto idx = split_indices(static_cast<int>(levels.size()), fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (int i : idx.train) out.first.push_back(levels[static_cast<std::size_t>(i)]);
  for (int i : idx.holdout) out.second.push_back(levels[static_cast<std::size_t>(i)]);
  return out;
}

// One concrete environment: a mode range plus sensor start positions.
// `level_index` is the position of `theta` in the enumerated level set and
// selects the one-hot identity; mutants keep their parent's index.
struct EnvLevel {
  ModeRange theta;
  SensorConfig init_config;
  int level_index = 0;
  int n_levels = 1;

  [[nodiscard]] std::vector<std::uint8_t> level_id_onehot() const;
  friend bool operator==(const EnvLevel&, const EnvLevel&) = default;
};

// Regular grid recovered from node coordinates. Every node must sit on a
// full tensor grid of distinct x and y values.
class CandidateGrid {
 public:
  explicit CandidateGrid(const ModalModel& model);

  [[nodiscard]] int n_columns() const { return n_columns_; }  // along x
  [[nodiscard]] int n_rows() const { return n_rows_; }        // along y
  [[nodiscard]] int column_of(int node) const { return column_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] int row_of(int node) const { return row_[static_cast<std::size_t>(node)]; }
  // Node at (column, row), or -1 when off-grid.
  [[nodiscard]] int node_at(int column, int row) const;

 private:
  int n_columns_ = 0;
  int n_rows_ = 0;
  std::vector<int> column_;
  std::vector<int> row_;
  std::vector<int> lookup_;
};

// Sensors on consecutive placeable cells of the middle row, starting at the
// first column next to the clamp.
SensorConfig default_init_config(const ModalModel& model, const CandidateGrid& grid, int n_sensors);

// Relocates n_edits distinct, uniformly chosen sensors to uniformly random
// unoccupied placeable cells. theta and identity are kept.
EnvLevel mutate_level(const EnvLevel& level, const ModalModel& model, int n_edits, std::uint64_t seed);

// Base-level manifest: one line per enumerated level.
struct ManifestRow {
  EnvLevel level;
  bool train = false;
  int train_rank = -1;  // position inside the training set, -1 for holdout
  std::int64_t parent = -1;
  std::uint64_t seed = 0;
};
void write_level_manifest(std::ostream& out, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_level_manifest(std::istream& in);

}  // namespace modalcur
