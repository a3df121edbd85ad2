#include <benchmark/benchmark.h>

#include "rrforge/baseline.hpp"
#include "rrforge/groundtruth.hpp"
#include "rrforge/model.hpp"
#include "rrforge/quality.hpp"
#include "rrforge/respiration.hpp"
#include "rrforge/spectral.hpp"
#include "grad_check.hpp"
#include "test_corpus.hpp"
#include "test_signals.hpp"

using namespace rrforge;

namespace {

const pipeline::WindowInput& window() {
  static const auto w = testing::first_window(testing::varied_spec(42));
  return w;
}

nn::Tensor batch(std::size_t b) {
  nn::Tensor t({b, 3, kWindowSamples});
  const auto x = testing::gaussian(t.size(), 1.0, 9);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = x[i];
  return t;
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto channels = static_cast<std::size_t>(state.range(0));
  nn::Parameter w("w", nn::Tensor({channels, channels, 3}));
  nn::Parameter b("b", nn::Tensor({channels}));
  nn::Tensor x({8, channels, 800});
  const auto weights = testing::random_tensor({8, channels}, 1);
  for (auto _ : state) {
    nn::Tape tape;
    const auto in = tape.input(x);
    const auto y = nn::conv1d(tape, in, w, &b, {2, 1, 1});
    tape.backward(testing::weighted_sum(tape, nn::global_avg_pool(tape, y), weights));
    benchmark::DoNotOptimize(tape.grad(in)[0]);
  }
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModelPredict(benchmark::State& state) {
  model::ModelConfig cfg;
  cfg.max_filters = static_cast<std::size_t>(state.range(0));
  auto m = model::build_model(cfg);
  const auto x = batch(32);
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
}
BENCHMARK(BM_ModelPredict)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FastIca(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(resp::extract_respiration(window().acc));
}
BENCHMARK(BM_FastIca)->Unit(benchmark::kMicrosecond);

void BM_Welch(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(spectral::welch(window().ppg, kAnalysisRate, 512));
}
BENCHMARK(BM_Welch)->Unit(benchmark::kMicrosecond);

void BM_DominantPeak(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(gt::rr_fft_axis(window().acc.x, kAnalysisRate));
}
BENCHMARK(BM_DominantPeak)->Unit(benchmark::kMicrosecond);

void BM_ChestLabel(benchmark::State& state) {
  for (auto _ : state) {
    gt::GroundTruthExtractor labeller;
    benchmark::DoNotOptimize(labeller.next(*window().chest));
  }
}
BENCHMARK(BM_ChestLabel)->Unit(benchmark::kMicrosecond);

void BM_QualityFeatures(benchmark::State& state) {
  const auto ppg = minmax_normalize(window().ppg);
  for (auto _ : state) benchmark::DoNotOptimize(quality::extract_quality_features(ppg, kAnalysisRate));
}
BENCHMARK(BM_QualityFeatures)->Unit(benchmark::kMicrosecond);

void BM_OneClassSvmTrain(benchmark::State& state) {
  std::vector<quality::QualityFeatures> rows(static_cast<std::size_t>(state.range(0)));
  const auto noise = testing::gaussian(rows.size() * quality::kFeatureCount, 1.0, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {noise[5 * i], noise[5 * i + 1], noise[5 * i + 2], noise[5 * i + 3], noise[5 * i + 4]};
  }
  for (auto _ : state) benchmark::DoNotOptimize(quality::train_quality_model(rows));
}
BENCHMARK(BM_OneClassSvmTrain)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Baseline(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(baseline::baseline_rr(window().ppg, window().acc, kAnalysisRate));
}
BENCHMARK(BM_Baseline)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
