// Serial reference vs OpenMP kernels. Set PCBIAS_THREADS to cap the workers.

#include "pcbias/kernels.hpp"

#include <benchmark/benchmark.h>

#include <cstdlib>
#include <random>
#include <string>
#include <vector>

using namespace pcbias;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c) {
    Rng rng = make_rng(42);
    std::normal_distribution<double> g;
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = g(rng);
    return M;
}

std::vector<int> labels(Eigen::Index n) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
    return y;
}

std::vector<std::uint8_t> bits(std::size_t n) {
    Rng rng = make_rng(7);
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() & 1);
    return b;
}

template <Matrix (*F)(const Matrix&)>
void BM_gram(benchmark::State& st) {
    const Matrix X = random_matrix(st.range(0), 4000);
    for (auto _ : st) benchmark::DoNotOptimize(F(X));
    st.SetItemsProcessed(st.iterations() * X.cols());
}

template <Vector (*F)(const Matrix&, std::span<const int>, int)>
void BM_knn(benchmark::State& st) {
    const Matrix X = random_matrix(2, st.range(0));
    const auto y = labels(X.cols());
    for (auto _ : st) benchmark::DoNotOptimize(F(X, y, 20));
    st.SetItemsProcessed(st.iterations() * X.cols());
}

template <Vector (*F)(std::span<const std::uint8_t>, std::size_t, std::size_t, std::size_t)>
void BM_mean(benchmark::State& st) {
    const std::size_t members = 10, epochs = 100, examples = static_cast<std::size_t>(st.range(0));
    const auto b = bits(members * epochs * examples);
    for (auto _ : st) benchmark::DoNotOptimize(F(b, members, epochs, examples));
    st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(b.size()));
}

}  // namespace

BENCHMARK(BM_gram<kernels::serial::gram>)->Name("gram/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gram<kernels::omp::gram>)->Name("gram/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_knn<kernels::serial::knn_agreement>)->Name("knn_agreement/serial")->Arg(2000)->Arg(5000);
BENCHMARK(BM_knn<kernels::omp::knn_agreement>)->Name("knn_agreement/omp")->Arg(2000)->Arg(5000);
BENCHMARK(BM_mean<kernels::serial::example_mean>)->Name("example_mean/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_mean<kernels::omp::example_mean>)->Name("example_mean/omp")->Arg(2000)->Arg(20000);

int main(int argc, char** argv) {
    if (const char* t = std::getenv("PCBIAS_THREADS")) kernels::set_thread_cap(std::stoi(t));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
