#include <benchmark/benchmark.h>

#include <vector>

#include "unitsel/dataset.hpp"
#include "unitsel/metrics.hpp"
#include "unitsel/synthetic.hpp"

namespace {

using namespace unitsel;

// a single random-scenario unit at the given scale, 10 classes
std::pair<UnitActivations, ClassIndex> bench_unit(uint32_t n_images) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::Random;
    spec.n_classes = 10;
    spec.n_per_class = n_images / 10;
    spec.seed = 1;
    auto [dataset, labels] = generate(spec);
    UnitActivations acts{0, std::vector<float>(dataset.unit(0).begin(), dataset.unit(0).end())};
    return {std::move(acts), std::move(labels)};
}

void BM_BuildSweep(benchmark::State& state) {
    const auto [acts, labels] = bench_unit(static_cast<uint32_t>(state.range(0)));
    for (auto _ : state) {
        auto sweep = build_sweep(acts, labels);
        benchmark::DoNotOptimize(sweep.sorted_values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildSweep)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_MaxInformedness(benchmark::State& state) {
    const auto [acts, labels] = bench_unit(static_cast<uint32_t>(state.range(0)));
    const auto sweep = build_sweep(acts, labels);
    for (auto _ : state) {
        auto point = max_informedness(sweep, labels);
        benchmark::DoNotOptimize(point);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MaxInformedness)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_RecallAtPrecision(benchmark::State& state) {
    const auto [acts, labels] = bench_unit(static_cast<uint32_t>(state.range(0)));
    const auto sweep = build_sweep(acts, labels);
    for (auto _ : state) {
        auto r = recall_at_precision(sweep, labels, 0.95);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RecallAtPrecision)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_AnalyzeUnit(benchmark::State& state) {
    const auto [acts, labels] = bench_unit(static_cast<uint32_t>(state.range(0)));
    MetricsConfig config;
    config.precision_k = 100;
    for (auto _ : state) {
        auto metrics = analyze_unit(acts, labels, config);
        benchmark::DoNotOptimize(metrics);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AnalyzeUnit)->Arg(1000)->Arg(10000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
