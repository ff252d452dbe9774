#include <benchmark/benchmark.h>

#include "amoc/datagen.hpp"
#include "amoc/kernels.hpp"
#include "amoc/random.hpp"

namespace {

using namespace amoc;

struct Fixture {
  LayerStackModel base;
  LayerStackModel candidate;
  std::vector<Example> corpus;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const ModelDims dims{2000, 32, 2, 6};
    auto base = LayerStackModel::initialize(dims, 1);
    auto candidate = LayerStackModel::initialize(dims, 2);
    ShiftSpec spec;
    spec.n_domains = 1;
    spec.sizes = {0, 4000, 0, 0};
    spec.seed = 3;
    auto corpus = generate(spec).front().unlabeled;
    return Fixture{std::move(base), std::move(candidate), std::move(corpus)};
  }();
  return f;
}

void BM_PredictAllSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::predict_all(f.base, f.corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.corpus.size()));
}

void BM_PredictAllOmp(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::predict_all(f.base, f.corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.corpus.size()));
}

void BM_ExampleDistancesSerial(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::serial::example_distances(f.base, f.candidate, f.corpus, DistanceMetric::total_variation));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.corpus.size()));
}

void BM_ExampleDistancesOmp(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::omp::example_distances(f.base, f.candidate, f.corpus, DistanceMetric::total_variation));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.corpus.size()));
}

}  // namespace

BENCHMARK(BM_PredictAllSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictAllOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExampleDistancesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExampleDistancesOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
