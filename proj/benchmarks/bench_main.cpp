#include <benchmark/benchmark.h>

#include "glab/coupling.hpp"
#include "glab/gheat.hpp"
#include "glab/rng.hpp"
#include "glab/scenario.hpp"

using namespace glab;

namespace {

ModelCoefficients model4() {
    return {Expression::affine(-1, 0), Expression::sine(0, 0.05), Expression::tanh(0.95, 0.05), 1.1, 0.9, 1.0};
}

void BM_GHeat(benchmark::State& state) {
    PdeConfig cfg;
    cfg.n_space = static_cast<int>(state.range(0));
    const auto f = make_payoff(Expression::bump(0.1, 1, 0, 1), {cfg.x_min, cfg.x_max});
    const VolatilityBand band(0.8, 1.2);
    for (auto _ : state) benchmark::DoNotOptimize(solve_g_heat(f, band, 1.0, cfg).u0.at(0.0));
}
BENCHMARK(BM_GHeat)->Arg(201)->Arg(401)->Arg(801)->Arg(1601)->Unit(benchmark::kMillisecond);

void BM_GHjb(benchmark::State& state) {
    PdeConfig cfg;
    cfg.n_space = static_cast<int>(state.range(0));
    const auto f = make_payoff(Expression::bump(0.1, 1, 0, 1), {cfg.x_min, cfg.x_max});
    const auto coeffs = model4();
    const VolatilityBand band(0.9, 1.1);
    for (auto _ : state) benchmark::DoNotOptimize(solve_g_hjb(coeffs, band, f, 1.0, cfg).u0.at(0.0));
}
BENCHMARK(BM_GHjb)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);

void BM_NormalSource(benchmark::State& state) {
    const NormalSource rng(42);
    std::uint32_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(rng({i++, 0, 0}));
}
BENCHMARK(BM_NormalSource);

void BM_GbmPath(benchmark::State& state) {
    const TimeGrid grid(1.0, static_cast<int>(state.range(0)));
    const auto control = ScenarioControl::constant(grid, 1.0, VolatilityBand(0.8, 1.2));
    std::uint64_t path = 0;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_gbm(control, 1, path++).terminal());
}
BENCHMARK(BM_GbmPath)->Arg(200)->Arg(1000);

void BM_CoupledPath(benchmark::State& state) {
    const VolatilityBand band(0.9, 1.1);
    const TimeGrid grid(1.0, static_cast<int>(state.range(0)));
    const auto coeffs = model4();
    const auto schedule = make_schedule(0.81, coeffs, band, 1.0);
    const auto control = ScenarioControl::constant(grid, 1.0, band);
    const CouplingOptions options;
    std::uint64_t path = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_coupled(coeffs, schedule, 0.0, 0.5, control, 1, path++, options).log_m_path);
    }
}
BENCHMARK(BM_CoupledPath)->Arg(200)->Arg(500);

}  // namespace
BENCHMARK_MAIN();
