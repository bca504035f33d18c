#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "impactdp/analysis.hpp"
#include "impactdp/market.hpp"
#include "impactdp/oracle.hpp"
#include "impactdp/scenario_tree.hpp"
#include "impactdp/solver.hpp"

using namespace impactdp;

static void BM_TerminalWealth(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(0.5, 2.0);
    std::vector<double> price(T + 1), res(T), depth(T), trades(T);
    for (auto& x : price) x = d(rng);
    for (auto& x : res) x = d(rng);
    for (auto& x : depth) x = d(rng);
    for (auto& x : trades) x = d(rng) - 1.25;
    const MarketPath path(0.1, price, res, depth);
    for (auto _ : state) benchmark::DoNotOptimize(terminal_wealth_explicit(path, trades));
}
BENCHMARK(BM_TerminalWealth)->Arg(3)->Arg(6)->Arg(24);

static void BM_BackwardInduce(benchmark::State& state) {
    const ScenarioTree tree = generate(preset("binomial"));
    const Utility u = Utility::exponential(1.0);
    SolveConfig config;
    config.cash_points = static_cast<int>(state.range(0));
    config.spread_points = config.position_points = static_cast<int>(state.range(0)) / 2 + 1;
    config.action_points = 101;
    for (auto _ : state) benchmark::DoNotOptimize(backward_induce(tree, u, 0.0, config).root_value);
}
BENCHMARK(BM_BackwardInduce)->Arg(11)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

static void BM_BruteForce(benchmark::State& state) {
    const ScenarioTree tree = generate(preset("binomial"));
    const Utility u = Utility::exponential(1.0);
    const ActionGrid grid({-1.0, -0.5, 0.0, 0.5, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(brute_force_solve(tree, u, 0.0, grid).value);
}
BENCHMARK(BM_BruteForce)->Unit(benchmark::kMillisecond);

static void BM_HistoryDp(benchmark::State& state) {
    const ScenarioTree tree = generate(preset("binomial"));
    const Utility u = Utility::exponential(1.0);
    const ActionGrid grid({-1.0, -0.5, 0.0, 0.5, 1.0});
    for (auto _ : state) benchmark::DoNotOptimize(history_dp(tree, u, 0.0, grid).value);
}
BENCHMARK(BM_HistoryDp)->Unit(benchmark::kMillisecond);

static void BM_MonteCarlo(benchmark::State& state) {
    const ScenarioTree tree = generate(preset("binomial"));
    PredictableAssignment s(tree);
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (tree.node(i).time < tree.horizon()) s.set(i, 0.0);
    const Utility u = Utility::exponential(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_eval(tree, s, u, 0.0, state.range(0), 7).estimate);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarlo)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
