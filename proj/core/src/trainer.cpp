#include "modalcur/trainer.hpp"

#include "modalcur/checkpoint.hpp"
#include "modalcur/parallel.hpp"
#include "modalcur/rng.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace modalcur {

namespace {

std::string padded(std::int64_t update) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld", static_cast<long long>(update));
  return buf;
}

// Keeps the first `n` lines of the log; a missing log counts as empty.
void truncate_log(const std::filesystem::path& log_path, std::int64_t n) {
  std::vector<std::string> keep;
  {
    std::ifstream in(log_path);
    std::string line;
    while (static_cast<std::int64_t>(keep.size()) < n && std::getline(in, line)) keep.push_back(line);
  }
  if (static_cast<std::int64_t>(keep.size()) != n) throw std::runtime_error("run log is shorter than the checkpoint");
  std::ofstream out(log_path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
  if (!out) throw std::runtime_error("cannot rewrite run log");
}

struct WorkerRollout {
  Task task;
  std::int64_t c = 0;
  Rng rng{0};
};

}  // namespace

std::string to_json_line(const UpdateRecord& rec) {
  nlohmann::ordered_json j;
  j["update"] = rec.update;
  j["env_steps"] = rec.env_steps;
  j["c"] = rec.c;
  j["sampled"] = rec.origins[0];
  j["replayed"] = rec.origins[1];
  j["mutated"] = rec.origins[2];
  j["mean_score"] = rec.mean_score;
  j["episodes"] = rec.episodes;
  j["mean_episode_return"] = rec.mean_episode_return;
  j["mean_final_det"] = rec.mean_final_det;
  j["buffer_size"] = rec.buffer_size;
  j["reward_scale"] = rec.reward_scale;
  j["policy_loss"] = rec.stats.last_epoch.policy_loss;
  j["value_loss"] = rec.stats.last_epoch.value_loss;
  j["entropy"] = rec.stats.last_epoch.entropy;
  j["approx_kl"] = rec.stats.last_epoch.approx_kl;
  j["clip_fraction"] = rec.stats.last_epoch.clip_fraction;
  j["first_epoch_ratio_deviation"] = rec.stats.first_epoch.max_ratio_deviation;
  j["grad_norm"] = rec.stats.grad_norm;
  j["aborted"] = rec.stats.aborted;
  if (rec.stats.aborted) j["abort_reason"] = rec.stats.abort_reason;
  return j.dump();
}

std::int64_t planned_updates(std::int64_t budget_steps, const PpoConfig& cfg) {
  const std::int64_t per_update = static_cast<std::int64_t>(cfg.rollout_length) * cfg.n_workers;
  if (budget_steps < per_update) throw std::invalid_argument("budget must cover at least one rollout");
  return budget_steps / per_update;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& run_dir, std::int64_t update) {
  return run_dir / "checkpoints" / ("ckpt-" + padded(update) + ".bin");
}

std::filesystem::path buffer_snapshot_path(const std::filesystem::path& run_dir, std::int64_t update) {
  return run_dir / "buffer" / ("buffer-" + padded(update) + ".txt");
}

std::filesystem::path latest_checkpoint(const std::filesystem::path& run_dir) {
  std::filesystem::path best;
  const auto dir = run_dir / "checkpoints";
  if (!std::filesystem::is_directory(dir)) return best;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("ckpt-", 0) != 0 || entry.path().extension() != ".bin") continue;
    if (best.empty() || name > best.filename().string()) best = entry.path();
  }
  return best;
}

TrainResult train(std::shared_ptr<const EnvSuite> suite, std::vector<EnvLevel> training_levels,
                  const CurriculumConfig& curriculum_cfg, const PpoConfig& cfg, const TrainOptions& options) {
  if (!suite) throw std::invalid_argument("train requires an environment suite");
  cfg.validate();
  curriculum_cfg.validate();
  for (const auto& level : training_levels) suite->check_level(level);
  if (options.checkpoint_interval < 0) throw std::invalid_argument("checkpoint_interval must be >= 0");
  const std::int64_t total = planned_updates(options.budget_steps, cfg);
  const int n_workers = cfg.n_workers;
  const int length = cfg.rollout_length;

  const PolicyShape shape{suite->observation_size(), cfg.hidden, suite->n_sensors(), kNumDirections};
  TrainResult result{ActorCritic(shape, mix_seed(options.seed, 0x11)), AdamState::zeros(shape.param_count()), {}, {}, 0, 0,
                     false};
  ReturnNormaliser normaliser;
  Curriculum curriculum(curriculum_cfg, std::move(training_levels), suite->model_ptr());
  std::int64_t c = 0;

  const bool persist = !options.run_dir.empty();
  const auto log_path = options.run_dir / "log.jsonl";
  if (persist) {
    std::filesystem::create_directories(options.run_dir / "checkpoints");
    std::filesystem::create_directories(options.run_dir / "buffer");
  }
  if (options.resume) {
    if (!persist) throw std::invalid_argument("resume requires a run directory");
    const auto path = latest_checkpoint(options.run_dir);
    if (path.empty()) throw std::runtime_error("missing checkpoint in " + options.run_dir.string());
    const auto ckpt = read_checkpoint(path);
    if (ckpt.config_hash != options.config_hash) throw std::invalid_argument("checkpoint config hash mismatch");
    if (ckpt.seed != options.seed) throw std::invalid_argument("checkpoint seed mismatch");
    if (!(ckpt.shape == shape)) throw std::invalid_argument("checkpoint policy shape mismatch");
    result.net.set_params(ckpt.params);
    result.adam = ckpt.adam;
    normaliser = ckpt.normaliser;
    curriculum.restore(ckpt.buffer, ckpt.next_id);
    c = ckpt.c;
    result.updates_done = ckpt.update;
    result.env_steps = ckpt.env_steps;
    truncate_log(log_path, ckpt.update);
  } else if (persist) {
    std::ofstream(log_path, std::ios::trunc);
  }

  const int threads = worker_threads(options.n_threads);
  std::vector<SensorEnv> envs;
  for (int w = 0; w < n_workers; ++w) envs.emplace_back(suite, options.episode_length);

  while (result.updates_done < total && (options.halt_after < 0 || result.updates_done < options.halt_after)) {
    const std::int64_t u = result.updates_done;
    UpdateRecord rec;

    // Task draws are serialised: each one advances the global counter.
    std::vector<WorkerRollout> workers(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) {
      auto& wk = workers[static_cast<std::size_t>(w)];
      const std::uint64_t stream = mix_seed(options.seed, mix_seed(static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(w)));
      wk.c = ++c;
      wk.task = curriculum.next_task(wk.c, stream);
      wk.rng = Rng(mix_seed(stream, 0xac7));
      ++rec.origins[static_cast<std::size_t>(wk.task.origin)];
    }

    RolloutBatch batch;
    batch.n_envs = n_workers;
    batch.length = length;
    const auto n = static_cast<Eigen::Index>(n_workers) * length;
    batch.initial = RecurrentState::zeros(cfg.hidden, n_workers);
    batch.observations.resize(static_cast<std::size_t>(length));
    batch.reset_before.assign(static_cast<std::size_t>(n), 0);
    batch.actions.resize(static_cast<std::size_t>(n));
    batch.log_probs.resize(n);
    batch.values.resize(n);
    batch.rewards.resize(n);
    batch.dones.assign(static_cast<std::size_t>(n), 0);
    batch.bootstrap_values.resize(n_workers);

    std::vector<SparseObs> obs(static_cast<std::size_t>(n_workers));
    parallel_for(n_workers, threads, [&](int w) {
      obs[static_cast<std::size_t>(w)] = envs[static_cast<std::size_t>(w)].reset(workers[static_cast<std::size_t>(w)].task.level).active_indices();
    });
    RecurrentState state = RecurrentState::zeros(cfg.hidden, n_workers);
    for (int w = 0; w < n_workers; ++w) batch.reset_before[static_cast<std::size_t>(w)] = 1;
    double return_sum = 0.0;
    double final_det_sum = 0.0;

    for (int t = 0; t < length; ++t) {
      batch.observations[static_cast<std::size_t>(t)] = obs;
      const StepCache step = policy_step_batch(result.net, obs, state);
      state.h = step.h;
      state.c = step.c;
      for (int w = 0; w < n_workers; ++w) {
        const auto i = static_cast<Eigen::Index>(t) * n_workers + w;
        auto& rng = workers[static_cast<std::size_t>(w)].rng;
        const Eigen::VectorXd ps = softmax(step.sensor_logits.col(w));
        const Eigen::VectorXd pd = softmax(step.direction_logits.col(w));
        Action a;
        a.sensor = rng.categorical(std::span<const double>(ps.data(), static_cast<std::size_t>(ps.size())));
        a.direction = static_cast<Direction>(rng.categorical(std::span<const double>(pd.data(), static_cast<std::size_t>(pd.size()))));
        batch.actions[static_cast<std::size_t>(i)] = a;
        batch.log_probs[i] = action_log_prob(step.sensor_logits.col(w), step.direction_logits.col(w), a);
        batch.values[i] = step.value[w];
      }
      parallel_for(n_workers, threads, [&](int w) {
        const auto i = static_cast<std::size_t>(t) * static_cast<std::size_t>(n_workers) + static_cast<std::size_t>(w);
        auto& env = envs[static_cast<std::size_t>(w)];
        auto res = env.step(batch.actions[i]);
        batch.rewards[static_cast<Eigen::Index>(i)] = res.reward;
        batch.dones[i] = res.done ? 1 : 0;
        obs[static_cast<std::size_t>(w)] = res.observation.active_indices();
      });
      for (int w = 0; w < n_workers; ++w) {
        const auto i = static_cast<std::size_t>(t) * static_cast<std::size_t>(n_workers) + static_cast<std::size_t>(w);
        if (!batch.dones[i]) continue;
        auto& env = envs[static_cast<std::size_t>(w)];
        return_sum += env.current_det() - env.initial_det();
        final_det_sum += env.current_det();
        ++rec.episodes;
        obs[static_cast<std::size_t>(w)] = env.reset(workers[static_cast<std::size_t>(w)].task.level).active_indices();
        state.reset_column(w);
        if (t + 1 < length) batch.reset_before[i + static_cast<std::size_t>(n_workers)] = 1;
      }
    }
    batch.bootstrap_values = policy_step_batch(result.net, obs, state).value.transpose();

    if (cfg.return_normalisation) {
      std::vector<double> running(static_cast<std::size_t>(n_workers), 0.0);
      for (int t = 0; t < length; ++t)
        for (int w = 0; w < n_workers; ++w) {
          const auto i = static_cast<Eigen::Index>(t) * n_workers + w;
          auto& ret = running[static_cast<std::size_t>(w)];
          ret = ret * cfg.gamma + batch.rewards[i];
          normaliser.observe(ret);
          batch.rewards[i] = normaliser.normalise(batch.rewards[i]);
          if (batch.dones[static_cast<std::size_t>(i)]) ret = 0.0;
        }
    }

    // Level scores from the TD errors, split at episode boundaries.
    double score_sum = 0.0;
    std::vector<double> r(static_cast<std::size_t>(length)), v(r.size());
    std::vector<std::uint8_t> d(r.size());
    for (int w = 0; w < n_workers; ++w) {
      for (int t = 0; t < length; ++t) {
        const auto i = static_cast<Eigen::Index>(t) * n_workers + w;
        r[static_cast<std::size_t>(t)] = batch.rewards[i];
        v[static_cast<std::size_t>(t)] = batch.values[i];
        d[static_cast<std::size_t>(t)] = batch.dones[static_cast<std::size_t>(i)];
      }
      const auto gae = compute_gae(r, v, d, batch.bootstrap_values[w], cfg.gamma, cfg.gae_lambda);
      double weighted = 0.0;
      int start = 0;
      for (int t = 0; t < length; ++t) {
        if (!d[static_cast<std::size_t>(t)] && t + 1 < length) continue;
        const int len = t + 1 - start;
        weighted += len * score_trajectory(std::span<const double>(gae.deltas.data() + start, static_cast<std::size_t>(len)),
                                           cfg.gamma, cfg.gae_lambda, curriculum_cfg.scoring);
        start = t + 1;
      }
      const double score = weighted / length;
      score_sum += score;
      const auto& wk = workers[static_cast<std::size_t>(w)];
      curriculum.update_after_rollout(wk.task, score, wk.c);
    }

    rec.stats = ppo_update(result.net, result.adam, std::move(batch), cfg);
    ++result.updates_done;
    result.env_steps += static_cast<std::int64_t>(length) * n_workers;

    rec.update = result.updates_done;
    rec.env_steps = result.env_steps;
    rec.c = c;
    rec.mean_score = score_sum / n_workers;
    if (rec.episodes > 0) {
      rec.mean_episode_return = return_sum / rec.episodes;
      rec.mean_final_det = final_det_sum / rec.episodes;
    }
    rec.buffer_size = curriculum.buffer().size();
    rec.reward_scale = normaliser.scale();

    if (persist) {
      std::ofstream log(log_path, std::ios::app);
      log << to_json_line(rec) << '\n';
      if (!log) throw std::runtime_error("cannot append to run log");
      const bool last = result.updates_done == total;
      const bool due = options.checkpoint_interval > 0 && result.updates_done % options.checkpoint_interval == 0;
      if (last || due) {
        Checkpoint ckpt;
        ckpt.config_hash = options.config_hash;
        ckpt.seed = options.seed;
        ckpt.update = result.updates_done;
        ckpt.env_steps = result.env_steps;
        ckpt.c = c;
        ckpt.next_id = curriculum.next_id();
        ckpt.shape = shape;
        ckpt.params = result.net.params();
        ckpt.adam = result.adam;
        ckpt.normaliser = normaliser;
        ckpt.buffer = curriculum.buffer();
        write_checkpoint(checkpoint_path(options.run_dir, result.updates_done), ckpt);
        std::ofstream snap(buffer_snapshot_path(options.run_dir, result.updates_done), std::ios::trunc);
        write_buffer_snapshot(snap, curriculum.buffer(), c, curriculum.next_id());
        if (!snap) throw std::runtime_error("buffer snapshot write failed");
      }
    }
    if (options.on_update) options.on_update(rec);
    result.log.push_back(std::move(rec));
  }
  result.buffer = curriculum.buffer();
  result.completed = result.updates_done == total;
  return result;
}

}  // namespace modalcur
