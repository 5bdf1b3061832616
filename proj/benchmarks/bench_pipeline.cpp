#include <benchmark/benchmark.h>

#include "mmrisk/mmrisk.hpp"

namespace {

const mmrisk::ValidatedModel& two_state_model() {
    static mmrisk::ValidatedModel model =
        mmrisk::validate_spec(mmrisk::read_model(std::string(MMRISK_EXAMPLES_DIR) + "/two_state.json"));
    return model;
}

void BM_cumulant_matrix(benchmark::State& state) {
    const auto& model = two_state_model();
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::cumulant_matrix(model, 0.1));
}
BENCHMARK(BM_cumulant_matrix);

void BM_lundberg_certificate(benchmark::State& state) {
    const auto& model = two_state_model();
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::lundberg_certificate(model));
}
BENCHMARK(BM_lundberg_certificate);

void BM_build_wiener_hopf(benchmark::State& state) {
    const auto& model = two_state_model();
    auto dual = mmrisk::dual_spec(model);
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::build_G_rational(dual));
}
BENCHMARK(BM_build_wiener_hopf);

void BM_find_poles(benchmark::State& state) {
    const auto& model = two_state_model();
    auto G = mmrisk::build_G_rational(mmrisk::dual_spec(model));
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::find_poles(G.den));
}
BENCHMARK(BM_find_poles);

void BM_full_factorization(benchmark::State& state) {
    const auto& model = two_state_model();
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::run_factorization(model));
}
BENCHMARK(BM_full_factorization);

void BM_stationary_crossing_kernel(benchmark::State& state) {
    const auto& model = two_state_model();
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::xi_bar_limit(model));
}
BENCHMARK(BM_stationary_crossing_kernel);

void BM_overshoot_tail(benchmark::State& state) {
    const auto& model = two_state_model();
    mmrisk::OvershootAnalysis analysis(model);
    for (auto _ : state)
        benchmark::DoNotOptimize(analysis.tail(mmrisk::OvershootKind::gamma_total, 0.5));
}
BENCHMARK(BM_overshoot_tail);

void BM_ladder_series_ruin(benchmark::State& state) {
    const auto& model = two_state_model();
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::pk_series(model, 0, 1.0, 1e-4));
}
BENCHMARK(BM_ladder_series_ruin);

void BM_simulate_path(benchmark::State& state) {
    const auto& model = two_state_model();
    mmrisk::StopRule stop;
    stop.level = 1.0;
    stop.horizon = 500.0;
    stop.kill_depth = 300.0;
    std::uint64_t rep = 0, jumps = 0;
    for (auto _ : state) {
        auto rng = mmrisk::RngStream::for_replication(99, rep++);
        auto path = mmrisk::simulate_path(model, 0, rng, stop);
        jumps += path.n_jumps;
        benchmark::DoNotOptimize(path);
    }
    state.SetItemsProcessed(static_cast<int64_t>(jumps));
}
BENCHMARK(BM_simulate_path);

void BM_estimate_ruin_10k(benchmark::State& state) {
    const auto& model = two_state_model();
    mmrisk::SimConfig cfg;
    cfg.n_paths = 10000;
    cfg.seed = 5;
    for (auto _ : state) benchmark::DoNotOptimize(mmrisk::estimate_ruin(model, 0, 1.0, cfg));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 10000);
}
BENCHMARK(BM_estimate_ruin_10k);

} // namespace

BENCHMARK_MAIN();
