#include <benchmark/benchmark.h>

#include "enhancekit/frequency.hpp"
#include "enhancekit/gmm_denoiser.hpp"
#include "enhancekit/pipeline.hpp"
#include "enhancekit/regularizers.hpp"
#include "enhancekit/toy_data.hpp"
#include "enhancekit/toy_denoiser.hpp"

using namespace enhancekit;

namespace {

const NoiseSchedule& schedule() {
  static const NoiseSchedule s = NoiseSchedule::scaled_linear(1000);
  return s;
}

Tensor noisy(int size, std::uint64_t seed) {
  RandomSource rng(seed);
  const Tensor x = to_model_space(make_toy_image(rng, ToyShape::disc, size));
  return add_noise(x, 500, rng.normal_tensor(x.shape()), schedule());
}

void BM_ToyPredict(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const ToyDenoiser model(ToyArchitecture{}, 1);
  const Tensor xt = noisy(size, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(xt, 500, Condition::none()));
}
BENCHMARK(BM_ToyPredict)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ToyVjp(benchmark::State& state) {
  const ToyDenoiser model(ToyArchitecture{}, 1);
  const Tensor xt = noisy(32, 3);
  const Tensor cot = noisy(32, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.vjp(xt, 500, Condition::none(), cot));
}
BENCHMARK(BM_ToyVjp)->Unit(benchmark::kMillisecond);

void BM_GmmPredict(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const GmmDenoiser oracle(toy_gmm_model({size, size, 3}), schedule());
  const Tensor xt = noisy(size, 5);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.predict(xt, 500, Condition::none()));
}
BENCHMARK(BM_GmmPredict)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ReviseStep(benchmark::State& state) {
  const GmmDenoiser oracle(toy_gmm_model({32, 32, 3}), schedule());
  const Tensor xt = noisy(32, 6);
  const Tensor eps = oracle.predict(xt, 500, Condition::none());
  const Tensor prev = ddim_step(xt, eps, 500, 490, schedule());
  const RevisionContext ctx{oracle, schedule(), Condition::none()};
  const RegularizerWeights w;
  for (auto _ : state) benchmark::DoNotOptimize(revise_step(prev, xt, eps, 500, ctx, w));
}
BENCHMARK(BM_ReviseStep)->Unit(benchmark::kMicrosecond);

void BM_HighPassMask(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  RandomSource rng(7);
  const Tensor img = make_toy_image(rng, ToyShape::ring, size);
  for (auto _ : state) benchmark::DoNotOptimize(high_pass_mask(img));
}
BENCHMARK(BM_HighPassMask)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_BandMask(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  RandomSource rng(8);
  const Tensor map = acutance_map(make_toy_image(rng, ToyShape::triangle, size));
  for (auto _ : state) benchmark::DoNotOptimize(band_mask(map, 35.0, 65.0));
}
BENCHMARK(BM_BandMask)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
