#pragma once

#include "modalcur/curriculum.hpp"
#include "modalcur/policy.hpp"
#include "modalcur/ppo.hpp"
#include "modalcur/sensing_env.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace modalcur {

struct UpdateRecord {
  std::int64_t update = 0;  // 1-based
  std::int64_t env_steps = 0;
  std::int64_t c = 0;
  std::array<int, 3> origins{};  // sampled, replayed, mutated
  double mean_score = 0.0;
  double mean_episode_return = 0.0;  // raw reward over completed episodes
  double mean_final_det = 0.0;       // over completed episodes
  int episodes = 0;
  std::size_t buffer_size = 0;
  double reward_scale = 1.0;
  UpdateStats stats;
};

// One JSON object, no trailing newline.
std::string to_json_line(const UpdateRecord& rec);

struct TrainOptions {
  std::uint64_t seed = 0;
  std::int64_t budget_steps = 20'000'000;
  int episode_length = kDefaultEpisodeLength;
  int checkpoint_interval = 100;  // in updates; the final update always checkpoints
  std::filesystem::path run_dir;  // empty: nothing is written
  bool resume = false;
  int n_threads = 0;              // 0: see worker_threads()
  std::int64_t halt_after = -1;   // stop once this many updates are done
  std::string config_hash;
  std::function<void(const UpdateRecord&)> on_update;
};

// floor(budget / (rollout_length * n_workers)); throws when below one rollout.
std::int64_t planned_updates(std::int64_t budget_steps, const PpoConfig& cfg);

struct TrainResult {
  ActorCritic net;
  AdamState adam;
  LevelBuffer buffer;
  std::vector<UpdateRecord> log;  // records produced by this call
  std::int64_t updates_done = 0;
  std::int64_t env_steps = 0;
  bool completed = false;
};

// Run-directory layout: checkpoints/ckpt-NNNNNN.bin, buffer/buffer-NNNNNN.txt
// and log.jsonl (one record per update).
std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, std::int64_t update);
std::filesystem::path buffer_snapshot_path(const std::filesystem::path& run_dir, std::int64_t update);
std::filesystem::path latest_checkpoint(const std::filesystem::path& run_dir);  // empty if none

TrainResult train(std::shared_ptr<const EnvSuite> suite, std::vector<EnvLevel> training_levels,
                  const CurriculumConfig& curriculum_cfg, const PpoConfig& ppo_cfg, const TrainOptions& options);

}  // namespace modalcur
