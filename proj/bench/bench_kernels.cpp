#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "chipgate/collider2d.hpp"
#include "chipgate/kernels.hpp"

namespace {

using chipgate::kernels::ComplexArray;
using chipgate::kernels::cplx;
using chipgate::kernels::Dispatch;
using chipgate::kernels::Execution;
using chipgate::kernels::RowFft;

ComplexArray field(std::size_t n) {
  ComplexArray a(n * n);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = {std::sin(0.37 * k), std::cos(0.11 * k)};
  return a;
}

std::vector<cplx> phases(std::size_t m, double rate) {
  std::vector<cplx> f(m);
  for (std::size_t k = 0; k < m; ++k) f[k] = std::polar(1.0 / static_cast<double>(m), rate * k);
  return f;
}

template <Execution E>
void BM_row_filter(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dispatch d{E};
  RowFft fft(n);
  auto data = field(n);
  const auto factor = phases(n, 0.3);
  for (auto _ : state) {
    d.row_filter(data, n, fft, factor);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}

template <Execution E>
void BM_row_filter_after(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dispatch d{E};
  RowFft fft(n);
  auto data = field(n);
  const auto factor = phases(n, 0.3);
  const auto pointwise = phases(n * n, 1e-3);
  for (auto _ : state) {
    d.row_filter_after(data, pointwise, n, fft, factor);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n));
}

template <Execution E>
void BM_transpose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Dispatch d{E};
  auto in = field(n);
  ComplexArray out(n * n);
  for (auto _ : state) {
    d.transpose(in, out, n);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(2 * n * n * sizeof(cplx)));
}

// One Strang step of the two-atom propagator on a harmonic well.
template <Execution E>
void BM_advance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto grid = std::make_shared<chipgate::Grid1D>();
  grid->mass = 1.44e-25;
  grid->spacing = 3e-6 / static_cast<double>(n);
  grid->origin = -1.5e-6;
  grid->values.resize(n);
  const double w = 2.0 * M_PI * 10e3;
  for (std::size_t i = 0; i < n; ++i) grid->values[i] = 0.5 * grid->mass * w * w * grid->x(i) * grid->x(i);

  chipgate::collider::Psi2D psi{ComplexArray(n * n), grid};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x1 = grid->x(i) / 1e-7, x2 = grid->x(j) / 1e-7;
      psi.amplitudes[i * n + j] = std::exp(-0.5 * (x1 * x1 + x2 * x2)) / grid->spacing;
    }
  }
  chipgate::collider::SplitOperator op(*grid, 1.5e-36, 0.1e-6, chipgate::collider::ContactModel::grid_delta, E);
  for (auto _ : state) {
    op.advance(psi, 1);
    benchmark::DoNotOptimize(psi.amplitudes.data());
  }
}

}  // namespace

BENCHMARK(BM_row_filter<Execution::serial>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_row_filter<Execution::parallel>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_row_filter_after<Execution::serial>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_row_filter_after<Execution::parallel>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_transpose<Execution::serial>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_transpose<Execution::parallel>)->Arg(128)->Arg(256)->Arg(512);
BENCHMARK(BM_advance<Execution::serial>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_advance<Execution::parallel>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
