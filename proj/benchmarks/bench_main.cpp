#include <random>

#include <benchmark/benchmark.h>

#include "co2/linalg.hpp"
#include "co2/pca.hpp"
#include "co2/reporting.hpp"
#include "co2/stationarity.hpp"
#include "co2/svr.hpp"

namespace {

using co2::linalg::Matrix;

Matrix gaussian(std::size_t n, std::size_t p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> v(n * p);
    for (auto& e : v) e = z(rng);
    return Matrix(n, p, std::move(v));
}

void BM_KernelRbf(benchmark::State& state) {
    const auto x = gaussian(2, 10, 1);
    const co2::svr::KernelConfig k{co2::svr::KernelKind::Rbf};
    for (auto _ : state) benchmark::DoNotOptimize(co2::svr::kernel_eval(k, 0.1, x.row(0), x.row(1)));
}
BENCHMARK(BM_KernelRbf);

void BM_Eigh(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = gaussian(n, n, 2);
    Matrix c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = a(i, j) + a(j, i);
    for (auto _ : state) benchmark::DoNotOptimize(co2::linalg::eigh(c));
}
BENCHMARK(BM_Eigh)->Arg(10)->Arg(50);

void BM_SvrFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = gaussian(n, 10, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = x(i, 0) + 0.5 * x(i, 1) * x(i, 1);
    co2::svr::SvrConfig cfg;
    cfg.c = 10;
    for (auto _ : state) benchmark::DoNotOptimize(co2::svr::fit(x, y, cfg));
}
BENCHMARK(BM_SvrFit)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_PcrFit(benchmark::State& state) {
    const auto x = gaussian(1400, 10, 4);
    std::vector<double> y(x.rows());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x(i, 0);
    for (auto _ : state) benchmark::DoNotOptimize(co2::pca::fit_pcr(x, y, 3));
}
BENCHMARK(BM_PcrFit);

void BM_AdfPanel(benchmark::State& state) {
    const auto panel = co2::reporting::generate_synthetic({});
    for (auto _ : state) benchmark::DoNotOptimize(co2::stationarity::test_all_features(panel));
}
BENCHMARK(BM_AdfPanel)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
