#pragma once

#include <modalcur/curriculum.hpp>
#include <modalcur/modal_model.hpp>
#include <modalcur/ppo.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace modalcur::cli {

enum class ModelSource { assemble, analytical, load };
std::string to_string(ModelSource source);

struct BeamSpec {
  double length = 0.423;  // free span of the default plate
  int n_points = 21;      // node 0 is the clamp, the rest are candidates
  double thickness = 0.003;
};

struct EvalSettings {
  int episodes = 100;
  bool greedy = false;
  bool randomize_init = false;
  std::int64_t exhaustive_budget = 1'000'000;
};

struct RunConfig {
  ModelSource source = ModelSource::assemble;
  std::string model_path;
  PlateGeometry plate;
  double element_size = 0.005;
  BeamSpec beam;
  MaterialSpec material;
  int n_modes = 5;
  int n_sensors = 5;
  double split_fraction = 0.75;
  std::uint64_t split_seed = 0;
  CurriculumConfig curriculum;
  PpoConfig agent;
  std::int64_t budget_steps = 20'000'000;
  int episode_length = 200;
  int checkpoint_interval = 100;
  EvalSettings eval;
  std::uint64_t seed = 0;
  std::string out_dir = "runs/default";

  // Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

// Parses a JSON config. Missing keys keep their defaults; unknown keys and
// type mismatches are errors (std::invalid_argument).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical serialisation: every field, fixed key order, two-space indent.
std::string canonical_json(const RunConfig& config);
// FNV-1a of the canonical serialisation.
std::string config_hash(const RunConfig& config);

}  // namespace modalcur::cli
