#include <benchmark/benchmark.h>

#include <string>

#include "pflow/case_io.hpp"
#include "pflow/epds.hpp"
#include "pflow/epts.hpp"

namespace {

pflow::NetworkCase load(const char* stem) {
    return pflow::load_case(std::string(PFLOW_BENCH_DATA_DIR) + "/" + stem + ".json");
}

const char* const kFeeders[] = {"epds14", "epds33", "epds69"};
const char* const kGrids[] = {"epts3_1", "epts3_2", "epts4"};

void BM_Sweep(benchmark::State& st) {
    const auto net = load(kFeeders[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(pflow::bfs_sweep_solve(net));
    st.SetLabel(kFeeders[st.range(0)]);
}

void BM_FeederGradient(benchmark::State& st) {
    const auto net = load(kFeeders[st.range(0)]);
    const auto ord = pflow::make_bfs_ordering(net);
    pflow::Vector x = pflow::epds_flat_start(net);
    x[0] -= 0.01;
    for (auto _ : st) benchmark::DoNotOptimize(pflow::bfs_cost_gradient(x, net, ord));
    st.SetLabel(kFeeders[st.range(0)]);
}

void BM_SolveEpds(benchmark::State& st) {
    const auto net = load(kFeeders[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(pflow::solve_epds(net));
    st.SetLabel(kFeeders[st.range(0)]);
}

void BM_SolveEpdsTrustRegion(benchmark::State& st) {
    const auto net = load(kFeeders[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(pflow::solve_epds_trust_region(net));
    st.SetLabel(kFeeders[st.range(0)]);
}

void BM_NewtonRaphson(benchmark::State& st) {
    const auto net = load(kGrids[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(pflow::newton_raphson_solve(net));
    st.SetLabel(kGrids[st.range(0)]);
}

void BM_SolveEpts(benchmark::State& st) {
    const auto net = load(kGrids[st.range(0)]);
    for (auto _ : st) benchmark::DoNotOptimize(pflow::solve_epts(net));
    st.SetLabel(kGrids[st.range(0)]);
}

}  // namespace

BENCHMARK(BM_Sweep)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FeederGradient)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SolveEpds)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveEpdsTrustRegion)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NewtonRaphson)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SolveEpts)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
