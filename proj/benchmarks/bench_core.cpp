#include <modalcur/baselines.hpp>
#include <modalcur/info_reward.hpp>
#include <modalcur/modal_model.hpp>
#include <modalcur/plate_fe.hpp>
#include <modalcur/policy.hpp>
#include <modalcur/rng.hpp>
#include <modalcur/sensing_env.hpp>

#include <benchmark/benchmark.h>

#include <memory>

namespace modalcur {
namespace {

std::shared_ptr<const ModalModel> desk_beam(int n_modes) {
  return std::make_shared<const ModalModel>(beam_modes_analytical(0.423, 21, n_modes));
}

void BM_DetFim(benchmark::State& state) {
  const int n_sensors = static_cast<int>(state.range(0));
  const auto model = desk_beam(5);
  const FimContext ctx(model, {1, 5}, n_sensors);
  SensorConfig cfg;
  for (int i = 0; i < n_sensors; ++i) cfg.cells.push_back(1 + i * (20 / n_sensors));
  for (auto _ : state) benchmark::DoNotOptimize(det_fim(ctx, cfg));
}
BENCHMARK(BM_DetFim)->Arg(5)->Arg(10);

void BM_PlateModalSolve(benchmark::State& state) {
  const double element_size = static_cast<double>(state.range(0)) * 1e-3;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_plate_model(PlateGeometry{}, MaterialSpec{}, element_size, 5));
}
BENCHMARK(BM_PlateModalSolve)->Arg(10)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_PolicyStep(benchmark::State& state) {
  const int n_envs = static_cast<int>(state.range(0));
  const auto model = desk_beam(5);
  const PolicyShape shape{model->n_nodes() + 15, 256, 5, kNumDirections};
  const ActorCritic net(shape, 3);
  Rng rng(1);
  std::vector<SparseObs> obs(static_cast<std::size_t>(n_envs));
  for (auto& o : obs) {
    for (int i = 1; i <= 5; ++i) o.push_back(4 * i - rng.index(3));
    o.push_back(model->n_nodes() + rng.index(15));
  }
  const auto st = RecurrentState::zeros(shape.hidden, n_envs);
  for (auto _ : state) benchmark::DoNotOptimize(policy_step_batch(net, obs, st));
  state.SetItemsProcessed(state.iterations() * n_envs);
}
BENCHMARK(BM_PolicyStep)->Arg(1)->Arg(4)->Arg(32);

void BM_EnvStep(benchmark::State& state) {
  const auto suite = std::make_shared<const EnvSuite>(desk_beam(5), 5);
  SensorEnv env(suite, 1 << 30);
  env.reset(suite->base_level(0));
  Rng rng(5);
  for (auto _ : state)
    benchmark::DoNotOptimize(env.step({rng.index(5), static_cast<Direction>(rng.index(kNumDirections))}));
}
BENCHMARK(BM_EnvStep);

void BM_EffectiveIndependence(benchmark::State& state) {
  const auto model = desk_beam(5);
  for (auto _ : state) benchmark::DoNotOptimize(effective_independence(*model, {1, 5}, 5));
}
BENCHMARK(BM_EffectiveIndependence);

}  // namespace
}  // namespace modalcur

BENCHMARK_MAIN();
