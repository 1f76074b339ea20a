#include <benchmark/benchmark.h>

#include "narrowcap/asymptotics.hpp"
#include "narrowcap/greens.hpp"

using namespace narrowcap;

static void BM_DiskG(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(disk_G({0.2, -0.1}, {0.3, 0.4}));
}
BENCHMARK(BM_DiskG);

static void BM_RectG(benchmark::State& state) {
    const Rectangle rect{1.0, 0.8};
    for (auto _ : state) benchmark::DoNotOptimize(rect_G({0.3, 0.6}, {0.7, 0.2}, rect));
}
BENCHMARK(BM_RectG);

static void BM_EllipseG(benchmark::State& state) {
    const Ellipse ell{1.5, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(ellipse_G({0.2, 0.1}, {-0.3, 0.4}, ell));
}
BENCHMARK(BM_EllipseG);

// FD source terms: one R_self plus the stencil evaluations
static void BM_SourceTerms(benchmark::State& state) {
    const Domain doms[] = {Domain::unit_disk(), Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)};
    const GreensFunction g(doms[state.range(0)]);
    for (auto _ : state) benchmark::DoNotOptimize(g.source_terms({0.3, 0.4}));
}
BENCHMARK(BM_SourceTerms)->DenseRange(0, 2);

static void BM_DiskTau(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(disk_tau({0.3, 0.4}, 3, 1, 0.5, 0.05, 1.0));
}
BENCHMARK(BM_DiskTau);
