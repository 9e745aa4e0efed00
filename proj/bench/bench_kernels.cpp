#include <benchmark/benchmark.h>

#include "halrp/kernels.hpp"
#include "halrp/random.hpp"

using namespace halrp;
using kernels::Trans;

namespace {

Matrix filled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(-1.0, 1.0);
  return m;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = filled(n, n, 1), b = filled(n, n, 2);
  for (auto _ : state) {
    Matrix c = Parallel ? kernels::gemm(a, Trans::No, b, Trans::Yes) : kernels::serial::gemm(a, Trans::No, b, Trans::Yes);
    benchmark::DoNotOptimize(c.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <bool Parallel>
void BM_Im2col(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const kernels::ConvGeometry g{6, 28, 28, 5, 1, 2};
  const Matrix x = filled(batch, g.input_size(), 3);
  for (auto _ : state) {
    Matrix cols = Parallel ? kernels::im2col(x, g) : kernels::serial::im2col(x, g);
    benchmark::DoNotOptimize(cols.data().data());
  }
}

template <bool Parallel>
void BM_Col2im(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const kernels::ConvGeometry g{6, 28, 28, 5, 1, 2};
  const Matrix cols = filled(batch * g.positions(), g.patch(), 4);
  for (auto _ : state) {
    Matrix x = Parallel ? kernels::col2im(cols, batch, g) : kernels::serial::col2im(cols, batch, g);
    benchmark::DoNotOptimize(x.data().data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Im2col<false>)->Name("im2col/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_Im2col<true>)->Name("im2col/omp")->Arg(16)->Arg(64);
BENCHMARK(BM_Col2im<false>)->Name("col2im/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_Col2im<true>)->Name("col2im/omp")->Arg(16)->Arg(64);

BENCHMARK_MAIN();
