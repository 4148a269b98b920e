#include <benchmark/benchmark.h>

#include "emobias/corpus.hpp"
#include "emobias/entropy.hpp"
#include "emobias/probe.hpp"
#include "emobias/synthkit.hpp"

namespace {

using namespace emobias;

const EmotionHierarchy& parrott() {
  static const EmotionHierarchy h = build_parrott_hierarchy();
  return h;
}

const SynthData& bench_data() {
  static const SynthSuite suite = [] {
    SynthSpec spec;
    spec.dim = 128;
    spec.samples_per_leaf = 200;
    return generate_synthetic_suite(spec, parrott(), 1);
  }();
  return suite.datasets.front();
}

void BM_Forward(benchmark::State& state) {
  const auto view = bench_data().view();
  const auto rows = feature_rows(view);
  std::vector<std::size_t> hidden;
  if (state.range(0) > 0) hidden.push_back(static_cast<std::size_t>(state.range(0)));
  const auto model = init_model(view.dim(), hidden, level_space(parrott(), 3), 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, rows));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(64)->Arg(256);

void BM_TrainEpoch(benchmark::State& state) {
  const auto view = bench_data().view();
  const auto set = level_training_set(view, parrott(), 3);
  std::vector<std::size_t> hidden;
  if (state.range(0) > 0) hidden.push_back(static_cast<std::size_t>(state.range(0)));
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) {
    auto model = init_model(view.dim(), hidden, level_space(parrott(), 3), 1);
    benchmark::DoNotOptimize(train_sgd(model, set, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Dedup(benchmark::State& state) {
  DatasetManifest m = bench_data().manifest;
  const std::size_t n = m.records.size();
  for (std::size_t i = 0; i < n / 10; ++i) m.records.push_back(m.records[i * 7 % n]);
  for (auto _ : state) benchmark::DoNotOptimize(dedup_by_metadata(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.records.size()));
}
BENCHMARK(BM_Dedup)->Unit(benchmark::kMillisecond);

void BM_ConditionalEntropy(benchmark::State& state) {
  const auto& records = bench_data().manifest.records;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        conditional_entropy_analysis(std::span(records), parrott(), "sadness", ConceptKind::kObjects));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_ConditionalEntropy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
