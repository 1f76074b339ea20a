#include <benchmark/benchmark.h>

#include "narrowcap/montecarlo.hpp"

using namespace narrowcap;

static void BM_Walkers(benchmark::State& state) {
    const Domain doms[] = {Domain::unit_disk(), Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)};
    const Domain& d = doms[state.range(0)];
    const Trap trap({0.3, 0.4}, 2, 1, 0.05, 0.3);
    WalkerConfig cfg;
    cfg.n_walkers = 200;
    cfg.threads = 1;
    std::int64_t steps = 0;
    for (auto _ : state) {
        const FptEstimate e = simulate_gmfpt(d, trap, 1.0, cfg);
        steps += e.total_steps;
        ++cfg.seed;
    }
    state.counters["sec_per_step"] =
        benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate | benchmark::Counter::kInvert);
    state.SetItemsProcessed(state.iterations() * cfg.n_walkers);
}
BENCHMARK(BM_Walkers)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
