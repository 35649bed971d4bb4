#include "modalcur/levels.hpp"

#include "modalcur/rng.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace modalcur {

std::vector<ModeRange> enumerate_levels(int n_modes) {
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  std::vector<ModeRange> out;
  for (int len = 1; len <= n_modes; ++len)
    for (int first = 1; first + len - 1 <= n_modes; ++first) out.push_back({first, first + len - 1});
  return out;
}

SplitIndices split_indices(int n, double fraction, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("cannot split an empty level list");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1]");
  // Nearest integer, halves rounded up: 75% of 15 levels is 11 training levels.
  const double scaled = fraction * static_cast<double>(n);
  int n_train = static_cast<int>(std::floor(scaled + 0.5 + 1e-9 * static_cast<double>(n)));
  n_train = std::clamp(n_train, 1, n);

  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(mix_seed(seed, 0x5b117));
  // Partial Fisher-Yates: the first n_train slots are the sample.
  for (int i = 0; i < n_train; ++i) {
    const int j = i + rng.index(n - i);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  SplitIndices out;
  out.train.assign(pool.begin(), pool.begin() + n_train);
  out.holdout.assign(pool.begin() + n_train, pool.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.holdout.begin(), out.holdout.end());
  return out;
}

std::vector<std::uint8_t> EnvLevel::level_id_onehot() const {
  if (level_index < 0 || level_index >= n_levels) throw std::invalid_argument("level_index outside one-hot range");
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n_levels), 0);
  out[static_cast<std::size_t>(level_index)] = 1;
  return out;
}

namespace {

// Distinct values of `v` after merging values closer than `tol`.
std::vector<double> distinct_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

int locate(const std::vector<double>& axis, double x, double tol) {
  auto it = std::lower_bound(axis.begin(), axis.end(), x - tol);
  if (it == axis.end() || std::abs(*it - x) > tol) throw std::invalid_argument("node off the candidate grid");
  return static_cast<int>(it - axis.begin());
}

}  // namespace

CandidateGrid::CandidateGrid(const ModalModel& model) {
  std::vector<double> xs;
  std::vector<double> ys;
  double span = 0.0;
  for (const auto& c : model.node_coords) {
    xs.push_back(c.x);
    ys.push_back(c.y);
    span = std::max({span, std::abs(c.x), std::abs(c.y)});
  }
  const double tol = 1e-9 * std::max(span, 1.0);
  const auto ux = distinct_sorted(xs, tol);
  const auto uy = distinct_sorted(ys, tol);
  n_columns_ = static_cast<int>(ux.size());
  n_rows_ = static_cast<int>(uy.size());
  if (static_cast<std::size_t>(n_columns_) * static_cast<std::size_t>(n_rows_) != model.node_coords.size())
    throw std::invalid_argument("nodes do not form a full rectangular grid");
  lookup_.assign(static_cast<std::size_t>(n_columns_ * n_rows_), -1);
  for (int i = 0; i < model.n_nodes(); ++i) {
    const auto& c = model.node_coords[static_cast<std::size_t>(i)];
    const int col = locate(ux, c.x, tol);
    const int row = locate(uy, c.y, tol);
    auto& slot = lookup_[static_cast<std::size_t>(row * n_columns_ + col)];
    if (slot != -1) throw std::invalid_argument("duplicate node on the candidate grid");
    slot = i;
    column_.push_back(col);
    row_.push_back(row);
  }
}

int CandidateGrid::node_at(int column, int row) const {
  if (column < 0 || column >= n_columns_ || row < 0 || row >= n_rows_) return -1;
  return lookup_[static_cast<std::size_t>(row * n_columns_ + column)];
}

SensorConfig default_init_config(const ModalModel& model, const CandidateGrid& grid, int n_sensors) {
  if (n_sensors < 1) throw std::invalid_argument("n_sensors must be >= 1");
  const int mid = grid.n_rows() / 2;
  SensorConfig cfg;
  for (int col = 0; col < grid.n_columns() && static_cast<int>(cfg.cells.size()) < n_sensors; ++col) {
    const int node = grid.node_at(col, mid);
    if (node >= 0 && model.placement_mask[static_cast<std::size_t>(node)]) cfg.cells.push_back(node);
  }
  if (static_cast<int>(cfg.cells.size()) < n_sensors)
    throw std::invalid_argument("not enough placeable cells on the mid-line for the requested sensor count");
  return cfg;
}

EnvLevel mutate_level(const EnvLevel& level, const ModalModel& model, int n_edits, std::uint64_t seed) {
  const int n_sensors = static_cast<int>(level.init_config.cells.size());
  if (n_edits < 1 || n_edits > n_sensors) throw std::invalid_argument("n_edits must lie in 1..n_sensors");
  std::vector<bool> occupied(static_cast<std::size_t>(model.n_nodes()), false);
  for (int c : level.init_config.cells) occupied[static_cast<std::size_t>(c)] = true;

  Rng rng(mix_seed(seed, 0x3a7e));
  std::vector<int> sensors(static_cast<std::size_t>(n_sensors));
  std::iota(sensors.begin(), sensors.end(), 0);
  for (int i = 0; i < n_edits; ++i) {
    const int j = i + rng.index(n_sensors - i);
    std::swap(sensors[static_cast<std::size_t>(i)], sensors[static_cast<std::size_t>(j)]);
  }

  EnvLevel child = level;
  for (int e = 0; e < n_edits; ++e) {
    const int s = sensors[static_cast<std::size_t>(e)];
    // Vacate first so the sensor may land anywhere not held by another sensor.
    occupied[static_cast<std::size_t>(child.init_config.cells[static_cast<std::size_t>(s)])] = false;
    std::vector<int> free_cells;
    for (int n = 0; n < model.n_nodes(); ++n)
      if (model.placement_mask[static_cast<std::size_t>(n)] && !occupied[static_cast<std::size_t>(n)]) free_cells.push_back(n);
    if (free_cells.empty()) throw std::runtime_error("no free cells for mutation");
    const int target = free_cells[static_cast<std::size_t>(rng.index(static_cast<int>(free_cells.size())))];
    child.init_config.cells[static_cast<std::size_t>(s)] = target;
    occupied[static_cast<std::size_t>(target)] = true;
  }
  return child;
}

void write_level_manifest(std::ostream& out, const std::vector<ManifestRow>& rows) {
  out << "levels-v1 " << rows.size() << '\n';
  for (const auto& r : rows) {
    out << "level " << r.level.level_index << " of " << r.level.n_levels << " theta " << r.level.theta.first << '-'
        << r.level.theta.last << " init " << text::join_ints(r.level.init_config.cells) << " split "
        << (r.train ? "train" : "holdout") << " rank " << r.train_rank << " parent " << r.parent << " seed " << r.seed
        << '\n';
  }
}

std::vector<ManifestRow> read_level_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty level manifest");
  const auto head = text::split_ws(line);
  if (head.size() != 2 || head[0] != "levels-v1") throw std::invalid_argument("malformed level manifest header");
  const auto n = static_cast<std::size_t>(text::parse_int(head[1]));
  std::vector<ManifestRow> rows;
  while (std::getline(in, line)) {
    const auto t = text::split_ws(line);
    if (t.empty()) continue;
    if (t.size() != 16 || t[0] != "level" || t[2] != "of" || t[4] != "theta" || t[6] != "init" || t[8] != "split" ||
        t[10] != "rank" || t[12] != "parent" || t[14] != "seed")
      throw std::invalid_argument("malformed level manifest row: " + line);
    ManifestRow r;
    r.level.level_index = text::parse_int(t[1]);
    r.level.n_levels = text::parse_int(t[3]);
    const auto dash = t[5].find('-');
    if (dash == std::string::npos) throw std::invalid_argument("malformed theta in manifest");
    r.level.theta = {text::parse_int(t[5].substr(0, dash)), text::parse_int(t[5].substr(dash + 1))};
    r.level.init_config.cells = text::parse_int_list(t[7]);
    if (t[9] != "train" && t[9] != "holdout") throw std::invalid_argument("manifest split must be train|holdout");
    r.train = t[9] == "train";
    r.train_rank = text::parse_int(t[11]);
    r.parent = text::parse_int64(t[13]);
    r.seed = text::parse_uint64(t[15]);
    rows.push_back(std::move(r));
  }
  if (rows.size() != n) throw std::invalid_argument("level manifest row count does not match header");
  return rows;
}

}  // namespace modalcur
