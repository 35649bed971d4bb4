#include "modalcur/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace modalcur {

void PpoConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0,1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw std::invalid_argument("gae_lambda must lie in [0,1]");
  if (rollout_length < 1) throw std::invalid_argument("rollout_length must be >= 1");
  if (n_workers < 1) throw std::invalid_argument("n_workers must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (minibatches < 1 || minibatches > n_workers)
    throw std::invalid_argument("minibatches must lie in [1, n_workers]");
  if (!(clip_range > 0.0)) throw std::invalid_argument("clip_range must be > 0");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
  if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be > 0");
  if (!(value_coef >= 0.0) || !(entropy_coef >= 0.0)) throw std::invalid_argument("loss coefficients must be >= 0");
  if (hidden < 1) throw std::invalid_argument("hidden must be >= 1");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, std::span<const std::uint8_t> dones,
                      double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("rewards, values and dones must be aligned");
  GaeResult out;
  out.advantages.resize(static_cast<Eigen::Index>(n));
  out.returns.resize(static_cast<Eigen::Index>(n));
  out.deltas.resize(static_cast<Eigen::Index>(n));
  double next_value = bootstrap;
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    running = delta + gamma * lambda * live * running;
    const auto i = static_cast<Eigen::Index>(t);
    out.deltas[i] = delta;
    out.advantages[i] = running;
    out.returns[i] = running + values[t];
    next_value = values[t];
  }
  return out;
}

void RolloutBatch::check() const {
  const auto n = static_cast<std::size_t>(n_envs) * static_cast<std::size_t>(length);
  if (n_envs < 1 || length < 1) throw std::invalid_argument("empty rollout batch");
  if (observations.size() != static_cast<std::size_t>(length) || reset_before.size() != n || actions.size() != n ||
      static_cast<std::size_t>(log_probs.size()) != n || static_cast<std::size_t>(values.size()) != n ||
      static_cast<std::size_t>(rewards.size()) != n || dones.size() != n || bootstrap_values.size() != n_envs ||
      initial.batch() != n_envs)
    throw std::invalid_argument("rollout batch arrays are misaligned");
  for (const auto& step : observations)
    if (static_cast<int>(step.size()) != n_envs) throw std::invalid_argument("rollout batch arrays are misaligned");
}

void RolloutBatch::compute_advantages(double gamma, double lambda) {
  check();
  const auto n = static_cast<Eigen::Index>(n_envs) * length;
  advantages.resize(n);
  returns.resize(n);
  std::vector<double> r(static_cast<std::size_t>(length)), v(r.size());
  std::vector<std::uint8_t> d(r.size());
  for (int e = 0; e < n_envs; ++e) {
    for (int t = 0; t < length; ++t) {
      const auto i = static_cast<Eigen::Index>(t) * n_envs + e;
      r[static_cast<std::size_t>(t)] = rewards[i];
      v[static_cast<std::size_t>(t)] = values[i];
      d[static_cast<std::size_t>(t)] = dones[static_cast<std::size_t>(i)];
    }
    const auto g = compute_gae(r, v, d, bootstrap_values[e], gamma, lambda);
    for (int t = 0; t < length; ++t) {
      const auto i = static_cast<Eigen::Index>(t) * n_envs + e;
      advantages[i] = g.advantages[t];
      returns[i] = g.returns[t];
    }
  }
}

RolloutBatch RolloutBatch::select_envs(std::span<const int> envs) const {
  RolloutBatch out;
  out.n_envs = static_cast<int>(envs.size());
  out.length = length;
  const auto n = static_cast<Eigen::Index>(out.n_envs) * length;
  out.initial = RecurrentState::zeros(static_cast<int>(initial.h.rows()), out.n_envs);
  out.observations.resize(static_cast<std::size_t>(length));
  out.log_probs.resize(n);
  out.values.resize(n);
  out.rewards.resize(n);
  out.bootstrap_values.resize(out.n_envs);
  const bool have_adv = advantages.size() == log_probs.size();
  if (have_adv) {
    out.advantages.resize(n);
    out.returns.resize(n);
  }
  for (int k = 0; k < out.n_envs; ++k) {
    const int e = envs[static_cast<std::size_t>(k)];
    if (e < 0 || e >= n_envs) throw std::invalid_argument("env index out of range");
    out.initial.h.col(k) = initial.h.col(e);
    out.initial.c.col(k) = initial.c.col(e);
    out.bootstrap_values[k] = bootstrap_values[e];
  }
  for (int t = 0; t < length; ++t) {
    for (int k = 0; k < out.n_envs; ++k) {
      const int e = envs[static_cast<std::size_t>(k)];
      const auto src = static_cast<Eigen::Index>(t) * n_envs + e;
      const auto dst = static_cast<Eigen::Index>(t) * out.n_envs + k;
      out.observations[static_cast<std::size_t>(t)].push_back(observations[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)]);
      out.reset_before.push_back(reset_before[static_cast<std::size_t>(src)]);
      out.actions.push_back(actions[static_cast<std::size_t>(src)]);
      out.dones.push_back(dones[static_cast<std::size_t>(src)]);
      out.log_probs[dst] = log_probs[src];
      out.values[dst] = values[src];
      out.rewards[dst] = rewards[src];
      if (have_adv) {
        out.advantages[dst] = advantages[src];
        out.returns[dst] = returns[src];
      }
    }
  }
  return out;
}

LossStats ppo_loss(const ActorCritic& net, const RolloutBatch& batch, const PpoConfig& cfg, Eigen::VectorXd* grad) {
  batch.check();
  if (batch.advantages.size() != batch.log_probs.size() || batch.returns.size() != batch.log_probs.size())
    throw std::invalid_argument("rollout batch has no advantages");
  const auto caches = forward_sequence(net, batch.observations, batch.reset_before, batch.initial);
  const int e_count = batch.n_envs;
  const double n = static_cast<double>(e_count) * batch.length;
  const double eps = cfg.clip_range;
  const auto& shape = net.shape();

  LossStats s;
  std::vector<OutputGrad> d_out;
  if (grad) d_out.resize(caches.size());
  for (std::size_t t = 0; t < caches.size(); ++t) {
    const auto& k = caches[t];
    OutputGrad* d = grad ? &d_out[t] : nullptr;
    if (d) {
      d->sensor_logits.setZero(shape.n_sensors, e_count);
      d->direction_logits.setZero(shape.n_directions, e_count);
      d->value.setZero(e_count);
    }
    for (int e = 0; e < e_count; ++e) {
      const auto i = static_cast<Eigen::Index>(t) * e_count + e;
      const auto& action = batch.actions[static_cast<std::size_t>(i)];
      const auto dir = static_cast<Eigen::Index>(action.direction);
      const Eigen::VectorXd ls = log_softmax(k.sensor_logits.col(e));
      const Eigen::VectorXd ld = log_softmax(k.direction_logits.col(e));
      const Eigen::VectorXd ps = ls.array().exp().matrix();
      const Eigen::VectorXd pd = ld.array().exp().matrix();
      const double logp = ls[action.sensor] + ld[dir];
      const double ratio = std::exp(logp - batch.log_probs[i]);
      const double adv = batch.advantages[i];
      const double s1 = ratio * adv;
      const double s2 = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
      s.policy_loss -= std::min(s1, s2);
      s.approx_kl += batch.log_probs[i] - logp;
      if (std::abs(ratio - 1.0) > eps) s.clip_fraction += 1.0;
      s.max_ratio_deviation = std::max(s.max_ratio_deviation, std::abs(ratio - 1.0));
      const double hs = -(ps.array() * ls.array()).sum();
      const double hdir = -(pd.array() * ld.array()).sum();
      s.entropy += hs + hdir;

      const double v = k.value[e];
      const double ret = batch.returns[i];
      const double old_v = batch.values[i];
      const double u1 = (v - ret) * (v - ret);
      double dv = v - ret;
      double vl = u1;
      if (cfg.value_clipping) {
        const double vc = old_v + std::clamp(v - old_v, -eps, eps);
        const double u2 = (vc - ret) * (vc - ret);
        if (u2 > u1) {
          vl = u2;
          dv = std::abs(v - old_v) < eps ? vc - ret : 0.0;
        }
      }
      s.value_loss += 0.5 * vl;

      if (d) {
        const double dlogp = s1 <= s2 ? -ratio * adv / n : 0.0;
        Eigen::VectorXd gs = -dlogp * ps;
        gs[action.sensor] += dlogp;
        Eigen::VectorXd gd = -dlogp * pd;
        gd[dir] += dlogp;
        if (cfg.entropy_coef != 0.0) {
          // d(-c H)/dlogit_j = c p_j (log p_j + H) / n
          gs += (cfg.entropy_coef / n) * (ps.array() * (ls.array() + hs)).matrix();
          gd += (cfg.entropy_coef / n) * (pd.array() * (ld.array() + hdir)).matrix();
        }
        d->sensor_logits.col(e) = gs;
        d->direction_logits.col(e) = gd;
        d->value[e] = cfg.value_coef * dv / n;
      }
    }
  }
  s.policy_loss /= n;
  s.value_loss /= n;
  s.entropy /= n;
  s.approx_kl /= n;
  s.clip_fraction /= n;
  s.loss = s.policy_loss + cfg.value_coef * s.value_loss - cfg.entropy_coef * s.entropy;
  if (grad) {
    grad->setZero(net.params().size());
    backward_sequence(net, caches, batch.reset_before, d_out, *grad);
  }
  return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state, double lr, double eps) {
  if (grad.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("optimiser state size mismatch");
  ++state.step;
  state.m = kAdamBeta1 * state.m + (1.0 - kAdamBeta1) * grad;
  state.v = kAdamBeta2 * state.v + (1.0 - kAdamBeta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

double clip_grad_norm(Eigen::VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm) g *= max_norm / (norm + 1e-6);
  return norm;
}

void ReturnNormaliser::observe(double x) {
  // Parallel-variance update with a batch of one.
  const double total = count_ + 1.0;
  const double delta = x - mean_;
  const double m2 = var_ * count_ + delta * delta * count_ / total;
  mean_ += delta / total;
  var_ = m2 / total;
  count_ = total;
}

double ReturnNormaliser::scale() const { return std::sqrt(var_ + 1e-8); }

UpdateStats ppo_update(ActorCritic& net, AdamState& adam, RolloutBatch batch, const PpoConfig& cfg) {
  cfg.validate();
  batch.compute_advantages(cfg.gamma, cfg.gae_lambda);
  const auto n = batch.advantages.size();
  const double mean = batch.advantages.mean();
  const double var = n > 1 ? (batch.advantages.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
  batch.advantages = ((batch.advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();

  const int mb = std::min(cfg.minibatches, batch.n_envs);
  std::vector<RolloutBatch> parts;
  if (mb > 1) {
    for (int m = 0; m < mb; ++m) {
      std::vector<int> envs;
      for (int e = m; e < batch.n_envs; e += mb) envs.push_back(e);
      parts.push_back(batch.select_envs(envs));
    }
  }

  const Eigen::VectorXd saved_params = net.params();
  const AdamState saved_adam = adam;
  UpdateStats stats;
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int m = 0; m < mb; ++m) {
      const RolloutBatch& part = mb > 1 ? parts[static_cast<std::size_t>(m)] : batch;
      const LossStats ls = ppo_loss(net, part, cfg, &grad);
      if (!std::isfinite(ls.loss) || !grad.allFinite()) {
        net.set_params(saved_params);
        adam = saved_adam;
        stats.aborted = true;
        stats.abort_reason = "non-finite loss at epoch " + std::to_string(epoch);
        return stats;
      }
      if (epoch == 0 && m == 0) stats.first_epoch = ls;
      stats.last_epoch = ls;
      stats.grad_norm = clip_grad_norm(grad, cfg.max_grad_norm);
      adam_step(net.mutable_params(), grad, adam, cfg.learning_rate, cfg.adam_eps);
    }
  }
  return stats;
}

}  // namespace modalcur
