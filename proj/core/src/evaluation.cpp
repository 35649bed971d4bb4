#include "modalcur/evaluation.hpp"

#include "modalcur/parallel.hpp"
#include "text_format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace modalcur {

namespace {

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<int>(best);
}

std::string join_cells(const SensorConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < config.cells.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(config.cells[i]);
  }
  return out;
}

std::string num(double v) { return std::isfinite(v) ? text::format_double(v) : (std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")); }

}  // namespace

void AgentPolicy::begin_episode(const SensorEnv&) { state_ = RecurrentState::zeros(net_->shape().hidden); }

Action AgentPolicy::act(const SensorEnv&, const Observation& obs, Rng& rng) {
  const auto out = policy_step(*net_, obs, state_);
  state_ = out.next;
  Action a;
  if (greedy_) {
    a.sensor = argmax(out.sensor_probs);
    a.direction = static_cast<Direction>(argmax(out.direction_probs));
  } else {
    a.sensor = rng.categorical(std::span<const double>(out.sensor_probs.data(), static_cast<std::size_t>(out.sensor_probs.size())));
    a.direction = static_cast<Direction>(
        rng.categorical(std::span<const double>(out.direction_probs.data(), static_cast<std::size_t>(out.direction_probs.size()))));
  }
  return a;
}

void EvalOptions::validate() const {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  if (episode_length < 1) throw std::invalid_argument("episode_length must be >= 1");
}

SensorConfig random_init_config(const FimContext& ctx, Rng& rng) {
  auto cand = ctx.model().placeable_nodes();
  const int k = ctx.n_sensors();
  if (static_cast<int>(cand.size()) < k) throw std::invalid_argument("fewer placeable cells than sensors");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // Partial Fisher-Yates over the candidate list.
    for (int i = 0; i < k; ++i) {
      const int j = i + rng.index(static_cast<int>(cand.size()) - i);
      std::swap(cand[static_cast<std::size_t>(i)], cand[static_cast<std::size_t>(j)]);
    }
    SensorConfig config{std::vector<int>(cand.begin(), cand.begin() + k)};
    try {
      (void)det_fim(ctx, config);
      return config;
    } catch (const DegenerateCovariance&) {
    }
  }
  throw std::runtime_error("no non-degenerate random start found");
}

EvalReport evaluate(const ActingPolicy& policy, std::shared_ptr<const EnvSuite> suite, const std::vector<EnvLevel>& levels,
                    const EvalOptions& options) {
  if (!suite) throw std::invalid_argument("evaluate requires an environment suite");
  options.validate();
  if (levels.empty()) throw std::invalid_argument("no levels selected for evaluation");
  for (const auto& level : levels) suite->check_level(level);
  const int threads = worker_threads(options.n_threads);

  EvalReport report;
  report.options = options;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto& level = levels[li];
    const auto& ctx = suite->context(level.level_index);
    LevelReport lr;
    lr.level = level;

    lr.efi_det = std::numeric_limits<double>::quiet_NaN();
    try {
      lr.efi_config = effective_independence(suite->model(), level.theta, suite->n_sensors());
      lr.efi_det = det_fim(ctx, lr.efi_config);
    } catch (const DegenerateCovariance& e) {
      lr.efi_note = e.what();
    } catch (const std::invalid_argument& e) {
      lr.efi_note = e.what();
    } catch (const std::runtime_error& e) {
      lr.efi_note = e.what();
    }
    lr.baseline_det = options.baseline_override.value_or(lr.efi_det);

    if (options.run_exhaustive) {
      try {
        lr.exhaustive = exhaustive_best(ctx, options.exhaustive_budget);
      } catch (const BudgetExceeded&) {
        lr.exhaustive_note = "budget exceeded";
      }
    }

    const std::uint64_t level_seed = mix_seed(options.seed, static_cast<std::uint64_t>(li));
    lr.final_dets.assign(static_cast<std::size_t>(options.n_episodes), 0.0);
    std::vector<SensorConfig> finals(static_cast<std::size_t>(options.n_episodes));
    parallel_for(options.n_episodes, threads, [&](int e) {
      Rng rng(mix_seed(level_seed, static_cast<std::uint64_t>(e)));
      EnvLevel start = level;
      if (options.randomize_init) start.init_config = random_init_config(ctx, rng);
      SensorEnv env(suite, options.episode_length);
      auto actor = policy.clone();
      Observation obs = env.reset(start);
      actor->begin_episode(env);
      while (!env.done()) obs = env.step(actor->act(env, obs, rng)).observation;
      lr.final_dets[static_cast<std::size_t>(e)] = env.current_det();
      finals[static_cast<std::size_t>(e)] = env.config();
    });

    double sum = 0.0;
    int solved = 0;
    std::size_t best = 0;
    for (std::size_t e = 0; e < lr.final_dets.size(); ++e) {
      const double d = lr.final_dets[e];
      sum += d;
      if (d > lr.baseline_det) ++solved;
      if (d > lr.final_dets[best]) best = e;
    }
    const double n = static_cast<double>(lr.final_dets.size());
    lr.mean = sum / n;
    // Deviations are taken from the first episode so identical finals give
    // exactly zero spread.
    const double shift = lr.final_dets.front();
    double s1 = 0.0;
    double s2 = 0.0;
    for (double d : lr.final_dets) {
      s1 += d - shift;
      s2 += (d - shift) * (d - shift);
    }
    lr.stddev = std::sqrt(std::max(0.0, (s2 - s1 * s1 / n) / n));
    lr.solved_rate = solved / n;
    lr.best_config = finals[best];
    lr.best_det = lr.final_dets[best];
    if (level.theta.size() >= 2) {
      try {
        lr.mac = mac(suite->model(), level.theta, lr.best_config);
      } catch (const std::runtime_error& e) {
        lr.mac_note = e.what();
      }
    }
    report.levels.push_back(std::move(lr));
  }
  return report;
}

EvalReport evaluate(const ActorCritic& net, std::shared_ptr<const EnvSuite> suite, const std::vector<EnvLevel>& levels,
                    const EvalOptions& options) {
  if (net.shape().obs_size != suite->observation_size() || net.shape().n_sensors != suite->n_sensors())
    throw std::invalid_argument("policy does not match the environment layout");
  return evaluate(AgentPolicy(net, options.greedy), std::move(suite), levels, options);
}

void write_eval_csv(std::ostream& out, const EvalReport& report, const std::vector<std::string>& split_labels) {
  if (!split_labels.empty() && split_labels.size() != report.levels.size())
    throw std::invalid_argument("one split label per level expected");
  out << "level,theta,split,mode,init,episodes,mean,std,efi_det,solved_rate,exhaustive_det,exhaustive_note,best_det,"
         "efi_config,best_config,exhaustive_config\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const auto& l = report.levels[i];
    out << l.level.level_index << ",\"" << l.level.theta.label() << "\","
        << (split_labels.empty() ? "" : split_labels[i]) << ',' << (report.options.greedy ? "greedy" : "stochastic") << ','
        << (report.options.randomize_init ? "random" : "fixed") << ',' << l.final_dets.size() << ',' << num(l.mean) << ','
        << num(l.stddev) << ',' << num(l.efi_det) << ',' << num(l.solved_rate) << ','
        << (l.exhaustive ? num(l.exhaustive->det) : "") << ',' << l.exhaustive_note << ',' << num(l.best_det) << ','
        << join_cells(l.efi_config) << ',' << join_cells(l.best_config) << ','
        << (l.exhaustive ? join_cells(l.exhaustive->config) : "") << '\n';
  }
}

void write_episode_csv(std::ostream& out, const EvalReport& report) {
  out << "level,theta,episode,final_det\n";
  for (const auto& l : report.levels)
    for (std::size_t e = 0; e < l.final_dets.size(); ++e)
      out << l.level.level_index << ",\"" << l.level.theta.label() << "\"," << e << ',' << num(l.final_dets[e]) << '\n';
}

}  // namespace modalcur
