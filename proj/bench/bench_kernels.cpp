#include "etm/equilibrium.hpp"
#include "etm/kernels.hpp"
#include "etm/sim.hpp"

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>
#include <vector>

namespace {

using namespace etm;

std::vector<double> samples(std::size_t n) {
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> d(1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

void BM_EmpiricalGainSerial(benchmark::State& state) {
    const auto s = samples(static_cast<std::size_t>(state.range(0)));
    const auto pi = RiskProfile::exp_concave(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::empirical_gain_serial(pi, s, 0.5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EmpiricalGainParallel(benchmark::State& state) {
    const auto s = samples(static_cast<std::size_t>(state.range(0)));
    const auto pi = RiskProfile::exp_concave(1.0);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::empirical_gain(pi, s, 0.5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

const std::vector<MevModel> kBuyers{MevModel::exponential(2.0), MevModel::uniform(0.0, 5.0), MevModel::point_mass(0.0)};
const std::vector<MevModel> kOthers{MevModel::exponential(3.0), MevModel::lognormal(0.5, 0.7)};

void BM_PbsDrawsSerial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::draw_pbs_payoffs_serial(kBuyers, kOthers, GammaRule::second_max(), false, n, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PbsDrawsParallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::draw_pbs_payoffs(kBuyers, kOthers, GammaRule::second_max(), false, n, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

MarketParams sim_market() {
    MarketParams m;
    m.tickets = 50;
    m.buyers = {{"a", 0.001, RiskProfile::neutral(), MevModel::exponential(1.0)},
                {"b", 0.002, RiskProfile::neutral(), MevModel::exponential(1.0)},
                {"c", 0.003, RiskProfile::neutral(), MevModel::lognormal(0.0, 0.5)}};
    return m;
}

void BM_SlotBatchSerial(benchmark::State& state) {
    const auto m = sim_market();
    const auto eq = solve_equilibrium(m);
    std::vector<std::uint64_t> seeds(8);
    std::iota(seeds.begin(), seeds.end(), 1);
    for (auto _ : state) benchmark::DoNotOptimize(run_slots_batch_serial(m, eq, 20'000, seeds));
}

void BM_SlotBatchParallel(benchmark::State& state) {
    const auto m = sim_market();
    const auto eq = solve_equilibrium(m);
    std::vector<std::uint64_t> seeds(8);
    std::iota(seeds.begin(), seeds.end(), 1);
    for (auto _ : state) benchmark::DoNotOptimize(run_slots_batch(m, eq, 20'000, seeds));
}

} // namespace

BENCHMARK(BM_EmpiricalGainSerial)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_EmpiricalGainParallel)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_PbsDrawsSerial)->Arg(1 << 16)->Arg(200'000);
BENCHMARK(BM_PbsDrawsParallel)->Arg(1 << 16)->Arg(200'000);
BENCHMARK(BM_SlotBatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SlotBatchParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
