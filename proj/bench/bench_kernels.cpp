// Serial reference kernels against their OpenMP versions.
//
//   ttvrs_bench --benchmark_filter=gemm
//
// OMP_NUM_THREADS (or TTVRS_THREADS) sets the thread count of the omp:: runs.

#include "ttvrs/kernels.hpp"
#include "ttvrs/rng.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <cstdlib>
#include <vector>

namespace k = ttvrs::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed)
{
    ttvrs::Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

std::vector<std::uint8_t> random_mask(std::size_t n, std::uint64_t seed)
{
    ttvrs::Rng rng(seed);
    std::vector<std::uint8_t> v(n);
    for (auto& x : v) x = rng.uniform() < 0.3 ? 1 : 0;
    return v;
}

template <bool Parallel>
void bm_gemm(benchmark::State& state)
{
    const int m = static_cast<int>(state.range(0)), kk = static_cast<int>(state.range(1)),
              n = static_cast<int>(state.range(2));
    const auto a = random_values(static_cast<std::size_t>(m) * kk, 1);
    const auto b = random_values(static_cast<std::size_t>(kk) * n, 2);
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    for (auto _ : state) {
        std::fill(c.begin(), c.end(), 0.0);
        if constexpr (Parallel) k::omp::gemm(a, b, c, m, kk, n);
        else k::serial::gemm(a, b, c, m, kk, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * 2LL * m * kk * n);
}

template <bool Parallel>
void bm_im2col(benchmark::State& state)
{
    k::ConvGeometry g{static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                      static_cast<int>(state.range(1)), 3, 1, 1};
    const auto image = random_values(static_cast<std::size_t>(g.channels) * g.height * g.width, 3);
    std::vector<double> cols(static_cast<std::size_t>(g.col_rows()) * g.col_cols());
    for (auto _ : state) {
        if constexpr (Parallel) k::omp::im2col(image, g, cols);
        else k::serial::im2col(image, g, cols);
        benchmark::DoNotOptimize(cols.data());
    }
}

template <bool Parallel>
void bm_dilate(benchmark::State& state)
{
    const int size = static_cast<int>(state.range(0)), r = static_cast<int>(state.range(1));
    const auto mask = random_mask(static_cast<std::size_t>(size) * size, 4);
    std::vector<std::uint8_t> out(mask.size());
    for (auto _ : state) {
        if constexpr (Parallel) k::omp::dilate_chebyshev(mask, out, size, size, r);
        else k::serial::dilate_chebyshev(mask, out, size, size, r);
        benchmark::DoNotOptimize(out.data());
    }
}

// Shapes: the encoder's second convolution as a GEMM at 64x64 input, then two larger squares.
#define GEMM_ARGS Args({32, 144, 256})->Args({128, 128, 128})->Args({256, 256, 256})

BENCHMARK(bm_gemm<false>)->Name("gemm/serial")->GEMM_ARGS;
BENCHMARK(bm_gemm<true>)->Name("gemm/omp")->GEMM_ARGS;
BENCHMARK(bm_im2col<false>)->Name("im2col/serial")->Args({16, 32})->Args({32, 128});
BENCHMARK(bm_im2col<true>)->Name("im2col/omp")->Args({16, 32})->Args({32, 128});
BENCHMARK(bm_dilate<false>)->Name("dilate/serial")->Args({64, 1})->Args({512, 3});
BENCHMARK(bm_dilate<true>)->Name("dilate/omp")->Args({64, 1})->Args({512, 3});

} // namespace

int main(int argc, char** argv)
{
    if (const char* t = std::getenv("TTVRS_THREADS")) omp_set_num_threads(std::atoi(t));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
