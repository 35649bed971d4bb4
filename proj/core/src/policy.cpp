#include "modalcur/policy.hpp"

#include "modalcur/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace modalcur {

namespace {

using MapM = Eigen::Map<const Eigen::MatrixXd>;
using MapV = Eigen::Map<const Eigen::VectorXd>;
using MutMapM = Eigen::Map<Eigen::MatrixXd>;
using MutMapV = Eigen::Map<Eigen::VectorXd>;

struct Weights {
  MapM wx, wh;
  MapV b;
  MapM ws;
  MapV bs;
  MapM wd;
  MapV bd;
  MapV wv;
  double bv;
};

Weights weights_of(const ActorCritic& net) {
  const auto& s = net.shape();
  const auto o = ActorCritic::offsets(s);
  const double* p = net.params().data();
  const Eigen::Index g = 4 * s.hidden;
  return {MapM(p + o.wx, g, s.obs_size), MapM(p + o.wh, g, s.hidden), MapV(p + o.b, g),
          MapM(p + o.ws, s.n_sensors, s.hidden), MapV(p + o.bs, s.n_sensors), MapM(p + o.wd, s.n_directions, s.hidden),
          MapV(p + o.bd, s.n_directions), MapV(p + o.wv, s.hidden), p[o.bv]};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double normal(Rng& rng) {
  // Box-Muller on the portable uniform stream.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Eigen::Index PolicyShape::param_count() const { return ActorCritic::offsets(*this).total; }

void PolicyShape::validate() const {
  if (obs_size < 1 || hidden < 1 || n_sensors < 1 || n_directions < 1)
    throw std::invalid_argument("policy dimensions must be positive");
}

ActorCritic::Offsets ActorCritic::offsets(const PolicyShape& s) {
  const Eigen::Index g = 4 * static_cast<Eigen::Index>(s.hidden);
  Offsets o{};
  o.wx = 0;
  o.wh = o.wx + g * s.obs_size;
  o.b = o.wh + g * s.hidden;
  o.ws = o.b + g;
  o.bs = o.ws + static_cast<Eigen::Index>(s.n_sensors) * s.hidden;
  o.wd = o.bs + s.n_sensors;
  o.bd = o.wd + static_cast<Eigen::Index>(s.n_directions) * s.hidden;
  o.wv = o.bd + s.n_directions;
  o.bv = o.wv + s.hidden;
  o.total = o.bv + 1;
  return o;
}

ActorCritic::ActorCritic(PolicyShape shape) : shape_(shape) {
  shape_.validate();
  params_ = Eigen::VectorXd::Zero(offsets(shape_).total);
}

ActorCritic::ActorCritic(PolicyShape shape, std::uint64_t seed) : ActorCritic(shape) {
  const auto o = offsets(shape_);
  Rng rng(mix_seed(seed, 0x1157));
  const double k = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
  for (Eigen::Index i = o.wx; i < o.ws; ++i) params_[i] = k * (2.0 * rng.uniform() - 1.0);
  // Small policy heads start near uniform; the value head at unit gain.
  for (Eigen::Index i = o.ws; i < o.bs; ++i) params_[i] = 0.01 * k * normal(rng);
  for (Eigen::Index i = o.wd; i < o.bd; ++i) params_[i] = 0.01 * k * normal(rng);
  for (Eigen::Index i = o.wv; i < o.bv; ++i) params_[i] = k * normal(rng);
}

void ActorCritic::set_params(const Eigen::VectorXd& p) {
  if (p.size() != params_.size()) throw std::invalid_argument("parameter vector size mismatch");
  params_ = p;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

double action_log_prob(const Eigen::VectorXd& sensor_logits, const Eigen::VectorXd& direction_logits,
                       const Action& action) {
  const auto d = static_cast<Eigen::Index>(action.direction);
  if (action.sensor < 0 || action.sensor >= sensor_logits.size() || d >= direction_logits.size())
    throw std::invalid_argument("action outside the policy's action space");
  return log_softmax(sensor_logits)[action.sensor] + log_softmax(direction_logits)[d];
}

StepCache policy_step_batch(const ActorCritic& net, const std::vector<SparseObs>& active, const RecurrentState& state) {
  const auto& s = net.shape();
  const int e_count = static_cast<int>(active.size());
  if (state.h.rows() != s.hidden || state.c.rows() != s.hidden || state.batch() != e_count || state.c.cols() != e_count)
    throw std::invalid_argument("recurrent state dimension mismatch");
  const Weights w = weights_of(net);
  const Eigen::Index hd = s.hidden;

  StepCache out;
  out.active = active;
  out.h_prev = state.h;
  out.c_prev = state.c;
  Eigen::MatrixXd z = w.wh * state.h;
  z.colwise() += w.b;
  for (int e = 0; e < e_count; ++e)
    for (int k : active[static_cast<std::size_t>(e)]) {
      if (k < 0 || k >= s.obs_size) throw std::invalid_argument("observation dimension mismatch");
      z.col(e) += w.wx.col(k);
    }
  out.gate_i = z.topRows(hd).unaryExpr(&sigmoid);
  out.gate_f = z.middleRows(hd, hd).unaryExpr(&sigmoid);
  out.gate_g = z.middleRows(2 * hd, hd).array().tanh().matrix();
  out.gate_o = z.bottomRows(hd).unaryExpr(&sigmoid);
  out.c = (out.gate_f.array() * state.c.array() + out.gate_i.array() * out.gate_g.array()).matrix();
  out.tanh_c = out.c.array().tanh().matrix();
  out.h = (out.gate_o.array() * out.tanh_c.array()).matrix();
  out.sensor_logits = w.ws * out.h;
  out.sensor_logits.colwise() += w.bs;
  out.direction_logits = w.wd * out.h;
  out.direction_logits.colwise() += w.bd;
  out.value = (w.wv.transpose() * out.h).array() + w.bv;
  return out;
}

PolicyOutput policy_step(const ActorCritic& net, const Observation& obs, const RecurrentState& state) {
  if (obs.size() != net.shape().obs_size) throw std::invalid_argument("observation dimension mismatch");
  const auto step = policy_step_batch(net, {obs.active_indices()}, state);
  PolicyOutput out;
  out.sensor_probs = softmax(step.sensor_logits.col(0));
  out.direction_probs = softmax(step.direction_logits.col(0));
  out.value = step.value[0];
  out.next = {step.h, step.c};
  return out;
}

std::vector<StepCache> forward_sequence(const ActorCritic& net, const std::vector<std::vector<SparseObs>>& active,
                                        const std::vector<std::uint8_t>& reset_before, const RecurrentState& initial) {
  const int e_count = initial.batch();
  if (reset_before.size() != active.size() * static_cast<std::size_t>(e_count))
    throw std::invalid_argument("reset flags misaligned with observations");
  std::vector<StepCache> caches;
  caches.reserve(active.size());
  RecurrentState state = initial;
  for (std::size_t t = 0; t < active.size(); ++t) {
    for (int e = 0; e < e_count; ++e)
      if (reset_before[t * static_cast<std::size_t>(e_count) + static_cast<std::size_t>(e)]) state.reset_column(e);
    caches.push_back(policy_step_batch(net, active[t], state));
    state.h = caches.back().h;
    state.c = caches.back().c;
  }
  return caches;
}

void backward_sequence(const ActorCritic& net, const std::vector<StepCache>& caches,
                       const std::vector<std::uint8_t>& reset_before, const std::vector<OutputGrad>& d_out,
                       Eigen::Ref<Eigen::VectorXd> grad) {
  const auto& s = net.shape();
  const auto o = ActorCritic::offsets(s);
  if (grad.size() != o.total) throw std::invalid_argument("gradient vector size mismatch");
  if (d_out.size() != caches.size()) throw std::invalid_argument("output gradients misaligned with steps");
  if (caches.empty()) return;
  const Weights w = weights_of(net);
  const Eigen::Index hd = s.hidden;
  const Eigen::Index e_count = caches.front().h.cols();
  double* g = grad.data();
  MutMapM g_wx(g + o.wx, 4 * hd, s.obs_size);
  MutMapM g_wh(g + o.wh, 4 * hd, hd);
  MutMapV g_b(g + o.b, 4 * hd);
  MutMapM g_ws(g + o.ws, s.n_sensors, hd);
  MutMapV g_bs(g + o.bs, s.n_sensors);
  MutMapM g_wd(g + o.wd, s.n_directions, hd);
  MutMapV g_bd(g + o.bd, s.n_directions);
  MutMapV g_wv(g + o.wv, hd);

  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(hd, e_count);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(hd, e_count);
  Eigen::MatrixXd dz(4 * hd, e_count);
  for (std::size_t t = caches.size(); t-- > 0;) {
    const auto& k = caches[t];
    const auto& d = d_out[t];
    g_ws.noalias() += d.sensor_logits * k.h.transpose();
    g_bs += d.sensor_logits.rowwise().sum();
    g_wd.noalias() += d.direction_logits * k.h.transpose();
    g_bd += d.direction_logits.rowwise().sum();
    g_wv.noalias() += k.h * d.value.transpose();
    g[o.bv] += d.value.sum();

    Eigen::MatrixXd dh = dh_next;
    dh.noalias() += w.ws.transpose() * d.sensor_logits;
    dh.noalias() += w.wd.transpose() * d.direction_logits;
    dh.noalias() += w.wv * d.value;

    const auto ti = k.tanh_c.array();
    const Eigen::ArrayXXd dc = dh.array() * k.gate_o.array() * (1.0 - ti * ti) + dc_next.array();
    const auto gi = k.gate_i.array();
    const auto gf = k.gate_f.array();
    const auto gg = k.gate_g.array();
    const auto go = k.gate_o.array();
    dz.topRows(hd) = (dc * gg * gi * (1.0 - gi)).matrix();
    dz.middleRows(hd, hd) = (dc * k.c_prev.array() * gf * (1.0 - gf)).matrix();
    dz.middleRows(2 * hd, hd) = (dc * gi * (1.0 - gg * gg)).matrix();
    dz.bottomRows(hd) = (dh.array() * ti * go * (1.0 - go)).matrix();

    g_wh.noalias() += dz * k.h_prev.transpose();
    g_b += dz.rowwise().sum();
    for (Eigen::Index e = 0; e < e_count; ++e)
      for (int idx : k.active[static_cast<std::size_t>(e)]) g_wx.col(idx) += dz.col(e);

    dh_next.noalias() = w.wh.transpose() * dz;
    dc_next = (dc * gf).matrix();
    for (Eigen::Index e = 0; e < e_count; ++e)
      if (reset_before[t * static_cast<std::size_t>(e_count) + static_cast<std::size_t>(e)]) {
        dh_next.col(e).setZero();
        dc_next.col(e).setZero();
      }
  }
}

}  // namespace modalcur
