#include "modalcur/curriculum.hpp"

#include "modalcur/rng.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace modalcur {

std::string to_string(ScoringMode mode) {
  return mode == ScoringMode::abs_gae ? "abs_gae" : "positive_value_loss";
}

ScoringMode scoring_mode_from_string(const std::string& name) {
  if (name == "abs_gae") return ScoringMode::abs_gae;
  if (name == "positive_value_loss") return ScoringMode::positive_value_loss;
  throw std::invalid_argument("unknown scoring mode '" + name + "'");
}

std::string to_string(TaskOrigin origin) {
  switch (origin) {
    case TaskOrigin::sampled: return "sampled";
    case TaskOrigin::replayed: return "replayed";
    case TaskOrigin::mutated: return "mutated";
  }
  return "unknown";
}

void CurriculumConfig::validate() const {
  if (!(replay_rate >= 0.0 && replay_rate <= 1.0)) throw std::invalid_argument("replay_rate must lie in [0,1]");
  if (!(edit_rate >= 0.0 && edit_rate <= 1.0)) throw std::invalid_argument("edit_rate must lie in [0,1]");
  if (buffer_size < 1) throw std::invalid_argument("buffer_size must be >= 1");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (!(staleness >= 0.0 && staleness <= 1.0)) throw std::invalid_argument("staleness must lie in [0,1]");
  if (n_edits < 1) throw std::invalid_argument("n_edits must be >= 1");
}

double score_trajectory(std::span<const double> deltas, double gamma, double lambda, ScoringMode mode) {
  if (deltas.empty()) throw std::invalid_argument("score_trajectory requires a non-empty trajectory");
  const double decay = gamma * lambda;
  double tail = 0.0;
  double total = 0.0;
  for (std::size_t i = deltas.size(); i-- > 0;) {
    tail = deltas[i] + decay * tail;
    total += mode == ScoringMode::abs_gae ? std::abs(tail) : std::max(tail, 0.0);
  }
  return total / static_cast<double>(deltas.size());
}

std::vector<double> scoring_distribution(std::span<const double> scores, double beta) {
  if (scores.empty()) throw std::invalid_argument("scoring_distribution requires scores");
  if (!(beta > 0.0)) throw std::invalid_argument("temperature must be > 0");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double h = 1.0 / static_cast<double>(r + 1);
    p[order[r]] = std::pow(h, 1.0 / beta);
    total += p[order[r]];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> staleness_distribution(std::span<const std::int64_t> counters, std::int64_t c) {
  if (counters.empty()) throw std::invalid_argument("staleness_distribution requires counters");
  double total = 0.0;
  for (auto ci : counters) {
    if (ci > c) throw std::invalid_argument("last-sampled counter exceeds global count");
    total += static_cast<double>(c - ci);
  }
  std::vector<double> p(counters.size());
  if (total <= 0.0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(counters.size()));
    return p;
  }
  for (std::size_t i = 0; i < counters.size(); ++i) p[i] = static_cast<double>(c - counters[i]) / total;
  return p;
}

std::vector<double> replay_distribution(const LevelBuffer& buffer, const CurriculumConfig& cfg, std::int64_t c) {
  if (buffer.empty()) throw std::invalid_argument("replay_distribution requires a non-empty buffer");
  std::vector<double> scores;
  std::vector<std::int64_t> counters;
  for (const auto& e : buffer) {
    scores.push_back(e.score);
    counters.push_back(e.last_sampled_at);
  }
  const auto ps = scoring_distribution(scores, cfg.temperature);
  const auto pc = staleness_distribution(counters, c);
  std::vector<double> p(buffer.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - cfg.staleness) * ps[i] + cfg.staleness * pc[i];
  return p;
}

Curriculum::Curriculum(CurriculumConfig cfg, std::vector<EnvLevel> training_levels, std::shared_ptr<const ModalModel> model)
    : cfg_(cfg), training_levels_(std::move(training_levels)), model_(std::move(model)) {
  cfg_.validate();
  if (training_levels_.empty()) throw std::invalid_argument("curriculum needs at least one training level");
  if (!model_) throw std::invalid_argument("curriculum needs a model");
  for (const auto& l : training_levels_)
    if (cfg_.n_edits > static_cast<int>(l.init_config.cells.size()))
      throw std::invalid_argument("n_edits exceeds the number of sensors");
}

Task Curriculum::next_task(std::int64_t c, std::uint64_t seed) const {
  Rng rng(mix_seed(seed, 0x7a5c));
  Task task;
  task.seed = rng.next();
  const bool replay = !buffer_.empty() && rng.bernoulli(cfg_.replay_rate);
  if (!replay) {
    task.level = training_levels_[static_cast<std::size_t>(rng.index(static_cast<int>(training_levels_.size())))];
    task.origin = TaskOrigin::sampled;
    return task;
  }
  const auto p = replay_distribution(buffer_, cfg_, c);
  const auto& entry = buffer_[static_cast<std::size_t>(rng.categorical(p))];
  task.source_id = entry.id;
  if (rng.bernoulli(cfg_.edit_rate)) {
    task.level = mutate_level(entry.level, *model_, cfg_.n_edits, task.seed);
    task.origin = TaskOrigin::mutated;
  } else {
    task.level = entry.level;
    task.origin = TaskOrigin::replayed;
  }
  return task;
}

void Curriculum::update_after_rollout(const Task& task, double score, std::int64_t c) {
  if (!(score >= 0.0)) throw std::invalid_argument("level score must be >= 0");
  auto find_id = [&](std::int64_t id) {
    return std::find_if(buffer_.begin(), buffer_.end(), [&](const LevelBufferEntry& e) { return e.id == id; });
  };
  auto it = buffer_.end();
  if (task.origin == TaskOrigin::replayed) it = find_id(task.source_id);
  else if (task.origin == TaskOrigin::sampled)
    it = std::find_if(buffer_.begin(), buffer_.end(), [&](const LevelBufferEntry& e) { return e.level == task.level; });

  if (it != buffer_.end()) {
    it->score = score;
    it->last_sampled_at = c;
    return;
  }
  LevelBufferEntry entry;
  entry.level = task.level;
  entry.score = score;
  entry.last_sampled_at = c;
  entry.id = next_id_++;
  if (task.origin == TaskOrigin::mutated) {
    entry.parent = task.source_id;
    entry.seed = task.seed;
  }
  buffer_.push_back(std::move(entry));

  if (static_cast<int>(buffer_.size()) > cfg_.buffer_size) {
    // Lowest score; among ties the newest entry ranks worst.
    auto victim = buffer_.begin();
    for (auto e = buffer_.begin(); e != buffer_.end(); ++e)
      if (e->score <= victim->score) victim = e;
    buffer_.erase(victim);
  }
}

void Curriculum::restore(LevelBuffer buffer, std::int64_t next_id) {
  buffer_ = std::move(buffer);
  next_id_ = next_id;
}

void write_buffer_snapshot(std::ostream& out, const LevelBuffer& buffer, std::int64_t c, std::int64_t next_id) {
  out << "buffer-v1 " << buffer.size() << " c " << c << " next_id " << next_id << '\n';
  for (const auto& e : buffer) {
    out << "entry " << e.id << " level " << e.level.level_index << " of " << e.level.n_levels << " theta "
        << e.level.theta.first << '-' << e.level.theta.last << " init " << text::join_ints(e.level.init_config.cells)
        << " score " << text::format_double(e.score) << " last " << e.last_sampled_at << " parent " << e.parent
        << " seed " << e.seed << '\n';
  }
}

BufferSnapshot read_buffer_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty buffer snapshot");
  const auto h = text::split_ws(line);
  if (h.size() != 6 || h[0] != "buffer-v1" || h[2] != "c" || h[4] != "next_id")
    throw std::invalid_argument("malformed buffer snapshot header");
  BufferSnapshot snap;
  const auto n = static_cast<std::size_t>(text::parse_int(h[1]));
  snap.c = text::parse_int64(h[3]);
  snap.next_id = text::parse_int64(h[5]);
  while (std::getline(in, line)) {
    const auto t = text::split_ws(line);
    if (t.empty()) continue;
    if (t.size() != 18 || t[0] != "entry" || t[2] != "level" || t[4] != "of" || t[6] != "theta" || t[8] != "init" ||
        t[10] != "score" || t[12] != "last" || t[14] != "parent" || t[16] != "seed")
      throw std::invalid_argument("malformed buffer snapshot row: " + line);
    LevelBufferEntry e;
    e.id = text::parse_int64(t[1]);
    e.level.level_index = text::parse_int(t[3]);
    e.level.n_levels = text::parse_int(t[5]);
    const auto dash = t[7].find('-');
    if (dash == std::string::npos) throw std::invalid_argument("malformed theta in buffer snapshot");
    e.level.theta = {text::parse_int(t[7].substr(0, dash)), text::parse_int(t[7].substr(dash + 1))};
    e.level.init_config.cells = text::parse_int_list(t[9]);
    e.score = text::parse_double(t[11]);
    e.last_sampled_at = text::parse_int64(t[13]);
    e.parent = text::parse_int64(t[15]);
    e.seed = text::parse_uint64(t[17]);
    snap.buffer.push_back(std::move(e));
  }
  if (snap.buffer.size() != n) throw std::invalid_argument("buffer snapshot row count does not match header");
  return snap;
}

}  // namespace modalcur
