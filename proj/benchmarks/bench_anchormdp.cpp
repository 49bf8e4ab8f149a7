#include "anchormdp/harness.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace anchormdp;

namespace {

const SimplexModel& model(Index states) {
    static std::map<Index, SimplexModel> cache;
    auto it = cache.find(states);
    if (it == cache.end()) it = cache.emplace(states, random_simplex_model(states, 5, 10, 0.9, 1)).first;
    return it->second;
}

void BM_SampleAnchors(benchmark::State& state) {
    const SimplexModel& m = model(200);
    const std::int64_t n = state.range(0);
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_anchor_transitions(m.model.base(), m.anchors, n, seed++));
    state.SetItemsProcessed(state.iterations() * n * static_cast<std::int64_t>(m.anchors.size()));
}
BENCHMARK(BM_SampleAnchors)->RangeMultiplier(4)->Range(1 << 8, 1 << 14);

void BM_PlanOnKernel(benchmark::State& state) {
    const SimplexModel& m = model(state.range(0));
    const EmpiricalKernel kernel = exact_anchor_kernel(m.model.base(), m.anchors);
    for (auto _ : state) benchmark::DoNotOptimize(plan_on_kernel(m.model.base(), m.anchors, kernel, 1e-6, 0));
}
BENCHMARK(BM_PlanOnKernel)->Arg(100)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_OptimalQ(benchmark::State& state) {
    const SimplexModel& m = model(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(optimal_q(m.model.base(), 1e-10));
}
BENCHMARK(BM_OptimalQ)->Arg(100)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_QLearning(benchmark::State& state) {
    const SimplexModel& m = model(100);
    const std::int64_t horizon = state.range(0);
    const LearningRateSchedule schedule{ScheduleKind::linearly_rescaled, 1.0, 1.0, horizon, 0.9};
    QLearningOptions options;
    options.checkpoints = {horizon};
    for (auto _ : state)
        benchmark::DoNotOptimize(
            run_q_learning(m.model.base(), m.anchors, horizon, schedule, QFunction(100, 5), 1, options));
    state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(BM_QLearning)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ModelBasedSweepCell(benchmark::State& state) {
    ExperimentConfig config;
    config.states = 200;
    config.actions = 5;
    config.feature_dim = 10;
    config.grid = {state.range(0)};
    const Experiment experiment = prepare_experiment(config);
    int trial = 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_cell(experiment, config, state.range(0), trial++));
}
BENCHMARK(BM_ModelBasedSweepCell)->Arg(1 << 10)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
