#include <benchmark/benchmark.h>

#include "muonkit/newton_schulz.hpp"
#include "muonkit/optimizers.hpp"
#include "muonkit/rng.hpp"

namespace {

muonkit::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    muonkit::SplitMix64 rng(seed);
    std::vector<double> data(rows * cols);
    for (double& x : data) x = rng.normal();
    return muonkit::Matrix(rows, cols, std::move(data));
}

muonkit::Vector random_vector(std::size_t len, std::uint64_t seed) {
    muonkit::SplitMix64 rng(seed);
    std::vector<double> data(len);
    for (double& x : data) x = rng.normal();
    return muonkit::Vector(std::move(data));
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 1);
    const auto b = random_matrix(n, n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(muonkit::matmul(a, b));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(16, 256);

void BM_Gram(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, n, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(muonkit::gram(a));
    }
}
BENCHMARK(BM_Gram)->RangeMultiplier(4)->Range(16, 256);

void BM_NsOrthogonalize(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const auto cols = static_cast<std::size_t>(state.range(1));
    const auto g = random_matrix(rows, cols, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(muonkit::ns_orthogonalize(g));
    }
}
BENCHMARK(BM_NsOrthogonalize)->Args({64, 64})->Args({64, 256})->Args({256, 64})->Args({256, 256});

void BM_NsDiagonal(benchmark::State& state) {
    const auto v = random_vector(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(muonkit::ns_diagonal(v));
    }
}
BENCHMARK(BM_NsDiagonal)->Range(64, 4096);

// One step over a 256x256 matrix and a 256-vector.
template <class Opt>
void run_step(benchmark::State& state, Opt& opt) {
    std::vector<muonkit::ParamTensor> params{
        {"W", muonkit::Role::hidden_matrix, random_matrix(256, 256, 6)},
        {"b", muonkit::Role::bias, random_vector(256, 7)}};
    const std::vector<muonkit::Tensor> grads{random_matrix(256, 256, 8), random_vector(256, 9)};
    for (auto _ : state) {
        opt.step(params, grads, {1e-4, 1e-4});
    }
}

void BM_StepAdamW(benchmark::State& state) {
    muonkit::AdamW opt(muonkit::AdamHyper{});
    run_step(state, opt);
}
BENCHMARK(BM_StepAdamW);

void BM_StepMuon(benchmark::State& state) {
    muonkit::Muon opt(muonkit::MuonHyper{});
    run_step(state, opt);
}
BENCHMARK(BM_StepMuon);

void BM_StepMuonAll(benchmark::State& state) {
    muonkit::MuonAll opt(muonkit::MuonHyper{});
    run_step(state, opt);
}
BENCHMARK(BM_StepMuonAll);

}    // namespace

BENCHMARK_MAIN();
