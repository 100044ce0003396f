// Serial reference loops against the OpenMP kernels.
// Usage: bench_kernels [--benchmark_filter=...]; OMP_NUM_THREADS sets the thread count.

#include <benchmark/benchmark.h>

#include <vector>

#include "easycache/kernels.hpp"
#include "easycache/rng.hpp"

namespace k = easycache::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    easycache::Xoshiro256 rng(seed);
    std::vector<double> v(n);
    for (double& e : v) e = rng.normal();
    return v;
}

std::vector<std::vector<double>> random_anchors(std::size_t count, std::size_t dim) {
    std::vector<std::vector<double>> a;
    for (std::size_t i = 0; i < count; ++i) a.push_back(random_vector(dim, 100 + i));
    return a;
}

template <bool Parallel>
void bm_abs_diff_sum(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vector(n, 1), b = random_vector(n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(Parallel ? k::abs_diff_sum(a, b) : k::serial::abs_diff_sum(a, b));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * n * 2 * sizeof(double)));
}

template <bool Parallel>
void bm_axpy(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = random_vector(n, 1), v = random_vector(n, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        if (Parallel) k::axpy(out, x, v, 0.02);
        else k::serial::axpy(out, x, v, 0.02);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * n * 3 * sizeof(double)));
}

template <bool Parallel>
void bm_scaled_sq_distances(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto anchors = random_anchors(64, dim);
    const auto x = random_vector(dim, 3);
    std::vector<double> out(anchors.size());
    for (auto _ : state) {
        if (Parallel) k::scaled_sq_distances(x, anchors, 0.7, out);
        else k::serial::scaled_sq_distances(x, anchors, 0.7, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void bm_weighted_combination(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto anchors = random_anchors(64, dim);
    const std::vector<double> w(anchors.size(), 1.0 / 64);
    std::vector<double> out(dim);
    for (auto _ : state) {
        if (Parallel) k::weighted_combination(anchors, w, out);
        else k::serial::weighted_combination(anchors, w, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(bm_abs_diff_sum<false>)->Name("abs_diff_sum/serial")->RangeMultiplier(16)->Range(256, 1 << 22);
BENCHMARK(bm_abs_diff_sum<true>)->Name("abs_diff_sum/openmp")->RangeMultiplier(16)->Range(256, 1 << 22);
BENCHMARK(bm_axpy<false>)->Name("axpy/serial")->RangeMultiplier(16)->Range(256, 1 << 22);
BENCHMARK(bm_axpy<true>)->Name("axpy/openmp")->RangeMultiplier(16)->Range(256, 1 << 22);
BENCHMARK(bm_scaled_sq_distances<false>)->Name("scaled_sq_distances/serial")->RangeMultiplier(8)->Range(256, 1 << 16);
BENCHMARK(bm_scaled_sq_distances<true>)->Name("scaled_sq_distances/openmp")->RangeMultiplier(8)->Range(256, 1 << 16);
BENCHMARK(bm_weighted_combination<false>)->Name("weighted_combination/serial")->RangeMultiplier(8)->Range(256, 1 << 16);
BENCHMARK(bm_weighted_combination<true>)->Name("weighted_combination/openmp")->RangeMultiplier(8)->Range(256, 1 << 16);

BENCHMARK_MAIN();
