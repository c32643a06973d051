#include <benchmark/benchmark.h>

#include <cmath>

#include "truewm/dsp.hpp"
#include "truewm/model.hpp"
#include "truewm/ops.hpp"
#include "truewm/training.hpp"

using namespace truewm;

namespace {

nn::Tensor signal(std::size_t batch, std::size_t n) {
  std::vector<double> x(batch * n);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.3 * std::sin(0.01 * static_cast<double>(i));
  return nn::Tensor({batch, 1, n}, std::move(x));
}

void BM_Conv1d(benchmark::State& state) {
  Rng rng(1);
  const auto layer = nn::Conv1dLayer::init(16, 32, 3, 2, 1, rng);
  std::vector<double> x(16 * 8000, 0.1);
  const nn::Tensor in({1, 16, 8000}, x);
  for (auto _ : state) benchmark::DoNotOptimize(layer(in));
}
BENCHMARK(BM_Conv1d);

void BM_StftMagnitude(benchmark::State& state) {
  const auto x = signal(1, 16000);
  const dsp::StftConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(dsp::stft_magnitude(x, cfg));
}
BENCHMARK(BM_StftMagnitude);

void BM_EmbedSegment(benchmark::State& state) {
  const Model model(ModelConfig::for_capacity(32), 1);
  const auto x = signal(1, 16000);
  Rng rng(2);
  const auto bits = WatermarkBits::random(32, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.embed_segment(x.data(), bits));
}
BENCHMARK(BM_EmbedSegment)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Model model(ModelConfig::for_capacity(32), 1);
  training::TrainConfig cfg;
  training::Trainer trainer(model, cfg);
  const auto x = signal(1, 16000);
  const std::vector<std::vector<double>> segs(batch, std::vector<double>(x.data().begin(), x.data().end()));
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(segs));
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
