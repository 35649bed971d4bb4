#pragma once

#include "modalcur/curriculum.hpp"
#include "modalcur/policy.hpp"
#include "modalcur/ppo.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace modalcur {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t update = 0;  // completed updates
  std::int64_t env_steps = 0;
  std::int64_t c = 0;
  std::int64_t next_id = 0;
  PolicyShape shape;
  Eigen::VectorXd params;
  AdamState adam;
  ReturnNormaliser normaliser;
  LevelBuffer buffer;
};

// Layout: magic line, JSON header line, then params, Adam m and Adam v as
// little-endian doubles. Written through a temporary file and renamed.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// 64-bit FNV-1a over the bytes of a file, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace modalcur
