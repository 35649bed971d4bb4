#pragma once

#include "modalcur/baselines.hpp"
#include "modalcur/policy.hpp"
#include "modalcur/rng.hpp"
#include "modalcur/sensing_env.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace modalcur {

// Anything that can drive a SensorEnv. A fresh clone runs each episode.
class ActingPolicy {
 public:
  virtual ~ActingPolicy() = default;
  [[nodiscard]] virtual std::unique_ptr<ActingPolicy> clone() const = 0;
  virtual void begin_episode(const SensorEnv& env) = 0;
  virtual Action act(const SensorEnv& env, const Observation& obs, Rng& rng) = 0;
};

// Recurrent agent; greedy takes the most probable entry of each head.
class AgentPolicy final : public ActingPolicy {
 public:
  AgentPolicy(const ActorCritic& net, bool greedy) : net_(&net), greedy_(greedy) {}
  [[nodiscard]] std::unique_ptr<ActingPolicy> clone() const override { return std::make_unique<AgentPolicy>(*net_, greedy_); }
  void begin_episode(const SensorEnv& env) override;
  Action act(const SensorEnv& env, const Observation& obs, Rng& rng) override;

 private:
  const ActorCritic* net_;
  bool greedy_;
  RecurrentState state_;
};

struct EvalOptions {
  int n_episodes = 100;
  bool greedy = false;
  bool randomize_init = false;  // uniform random distinct start cells per episode
  std::uint64_t seed = 0;
  int episode_length = kDefaultEpisodeLength;
  int n_threads = 0;
  bool run_exhaustive = true;
  std::int64_t exhaustive_budget = kExhaustiveBudget;
  std::optional<double> baseline_override;  // replaces the EfI det in the solved rate

  void validate() const;
};

struct LevelReport {
  EnvLevel level;
  std::vector<double> final_dets;  // one per episode
  double mean = 0.0;
  double stddev = 0.0;  // population
  SensorConfig efi_config;
  double efi_det = 0.0;
  std::string efi_note;  // non-empty when EfI could not run
  double baseline_det = 0.0;
  double solved_rate = 0.0;
  std::optional<ExhaustiveResult> exhaustive;
  std::string exhaustive_note;  // e.g. "budget exceeded"
  SensorConfig best_config;     // agent's best final configuration
  double best_det = 0.0;
  Eigen::MatrixXd mac;  // of best_config; empty for single-mode levels
  std::string mac_note;
};

struct EvalReport {
  EvalOptions options;
  std::vector<LevelReport> levels;
};

// Final det_fim of each episode, episode e seeded by mix_seed(seed, level, e).
EvalReport evaluate(const ActingPolicy& policy, std::shared_ptr<const EnvSuite> suite, const std::vector<EnvLevel>& levels,
                    const EvalOptions& options);
EvalReport evaluate(const ActorCritic& net, std::shared_ptr<const EnvSuite> suite, const std::vector<EnvLevel>& levels,
                    const EvalOptions& options);

// Uniformly random distinct placeable cells with a non-degenerate covariance.
SensorConfig random_init_config(const FimContext& ctx, Rng& rng);

// Per-level rows: level, theta, mean, std, EfI and exhaustive columns.
void write_eval_csv(std::ostream& out, const EvalReport& report, const std::vector<std::string>& split_labels);
// Every episode's final det, one row per (level, episode).
void write_episode_csv(std::ostream& out, const EvalReport& report);

}  // namespace modalcur
