#include "chipgate/kernels.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>
#include <vector>

namespace chipgate::kernels {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

constexpr std::size_t kTile = 32;

// Shared row bodies so the serial and parallel variants cannot drift apart.
inline void filter_row(cplx* row, std::size_t n, const RowFft& fft, const cplx* factor) {
  fft.forward(row);
  for (std::size_t k = 0; k < n; ++k) row[k] = mul(row[k], factor[k]);
  fft.backward(row);
}

inline void filter_row_after(cplx* row, const cplx* pointwise, std::size_t n, const RowFft& fft,
                             const cplx* factor) {
  for (std::size_t k = 0; k < n; ++k) row[k] = mul(row[k], pointwise[k]);
  filter_row(row, n, fft, factor);
}

inline cplx inner_row(const cplx* a, const cplx* b, std::size_t n) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += mul(std::conj(a[k]), b[k]);
  return s;
}

inline double norm_row(const cplx* a, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::norm(a[k]) * w[k];
  return s;
}

inline double spectral_row(const cplx* a, std::size_t n, const RowFft& fft, const double* w,
                           ComplexArray& scratch) {
  scratch.assign(a, a + n);
  fft.forward(scratch.data());
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::norm(scratch[k]) * w[k];
  return s;
}

inline void transpose_tile(const cplx* in, cplx* out, std::size_t n, std::size_t ib,
                           std::size_t jb) {
  const std::size_t ie = std::min(ib + kTile, n);
  const std::size_t je = std::min(jb + kTile, n);
  for (std::size_t i = ib; i < ie; ++i) {
    for (std::size_t j = jb; j < je; ++j) out[j * n + i] = in[i * n + j];
  }
}

template <typename T>
T ordered_sum(const std::vector<T>& partial) {
  T s{};
  for (const auto& p : partial) s += p;
  return s;
}

}  // namespace

RowFft::RowFft(std::size_t n) : n_(n), aligned_(n % 4 == 0) {
  if (n == 0) throw std::invalid_argument("RowFft needs a positive length");
  std::lock_guard lock(planner_mutex());
  ComplexArray buf(n);
  const unsigned flags = aligned_ ? FFTW_ESTIMATE : FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(buf.data()), as_fftw(buf.data()),
                                   FFTW_FORWARD, flags);
  backward_plan_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(buf.data()),
                                    as_fftw(buf.data()), FFTW_BACKWARD, flags);
}

RowFft::~RowFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void RowFft::forward(cplx* row) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(row), as_fftw(row));
}

void RowFft::backward(cplx* row) const {
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(row), as_fftw(row));
}

namespace serial {

void multiply(std::span<cplx> data, std::span<const cplx> factors) {
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = mul(data[k], factors[k]);
}

void row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                std::span<const cplx> factor) {
  for (std::size_t i = 0; i < n; ++i) filter_row(data.data() + i * n, n, fft, factor.data());
}

void row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise, std::size_t n,
                      const RowFft& fft, std::span<const cplx> factor) {
  for (std::size_t i = 0; i < n; ++i) {
    filter_row_after(data.data() + i * n, pointwise.data() + i * n, n, fft, factor.data());
  }
}

void transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n) {
  for (std::size_t ib = 0; ib < n; ib += kTile) {
    for (std::size_t jb = 0; jb < n; jb += kTile) transpose_tile(in.data(), out.data(), n, ib, jb);
  }
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n) {
  std::vector<cplx> partial(n);
  for (std::size_t i = 0; i < n; ++i) partial[i] = inner_row(a.data() + i * n, b.data() + i * n, n);
  return ordered_sum(partial);
}

double weighted_norm(std::span<const cplx> data, std::size_t n, std::span<const double> weight) {
  std::vector<double> partial(n);
  for (std::size_t i = 0; i < n; ++i) {
    partial[i] = norm_row(data.data() + i * n, weight.data() + i * n, n);
  }
  return ordered_sum(partial);
}

double row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                        std::span<const double> weight) {
  std::vector<double> partial(n);
  ComplexArray scratch;
  for (std::size_t i = 0; i < n; ++i) {
    partial[i] = spectral_row(data.data() + i * n, n, fft, weight.data(), scratch);
  }
  return ordered_sum(partial);
}

}  // namespace serial

namespace parallel {

void multiply(std::span<cplx> data, std::span<const cplx> factors) {
  const auto size = static_cast<std::ptrdiff_t>(data.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < size; ++k) data[k] = mul(data[k], factors[k]);
}

void row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                std::span<const cplx> factor) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    filter_row(data.data() + i * static_cast<std::ptrdiff_t>(n), n, fft, factor.data());
  }
}

void row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise, std::size_t n,
                      const RowFft& fft, std::span<const cplx> factor) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto off = static_cast<std::size_t>(i) * n;
    filter_row_after(data.data() + off, pointwise.data() + off, n, fft, factor.data());
  }
}

void transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n) {
  const auto tiles = static_cast<std::ptrdiff_t>((n + kTile - 1) / kTile);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t bi = 0; bi < tiles; ++bi) {
    for (std::ptrdiff_t bj = 0; bj < tiles; ++bj) {
      transpose_tile(in.data(), out.data(), n, static_cast<std::size_t>(bi) * kTile,
                     static_cast<std::size_t>(bj) * kTile);
    }
  }
}

cplx inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n) {
  std::vector<cplx> partial(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto off = static_cast<std::size_t>(i) * n;
    partial[static_cast<std::size_t>(i)] = inner_row(a.data() + off, b.data() + off, n);
  }
  return ordered_sum(partial);
}

double weighted_norm(std::span<const cplx> data, std::size_t n, std::span<const double> weight) {
  std::vector<double> partial(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const auto off = static_cast<std::size_t>(i) * n;
    partial[static_cast<std::size_t>(i)] = norm_row(data.data() + off, weight.data() + off, n);
  }
  return ordered_sum(partial);
}

double row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                        std::span<const double> weight) {
  std::vector<double> partial(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    ComplexArray scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const auto off = static_cast<std::size_t>(i) * n;
      partial[static_cast<std::size_t>(i)] =
          spectral_row(data.data() + off, n, fft, weight.data(), scratch);
    }
  }
  return ordered_sum(partial);
}

}  // namespace parallel

void Dispatch::multiply(std::span<cplx> data, std::span<const cplx> factors) const {
  execution == Execution::serial ? serial::multiply(data, factors)
                                 : parallel::multiply(data, factors);
}

void Dispatch::row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                          std::span<const cplx> factor) const {
  execution == Execution::serial ? serial::row_filter(data, n, fft, factor)
                                 : parallel::row_filter(data, n, fft, factor);
}

void Dispatch::row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise,
                                std::size_t n, const RowFft& fft,
                                std::span<const cplx> factor) const {
  execution == Execution::serial ? serial::row_filter_after(data, pointwise, n, fft, factor)
                                 : parallel::row_filter_after(data, pointwise, n, fft, factor);
}

void Dispatch::transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n) const {
  execution == Execution::serial ? serial::transpose(in, out, n) : parallel::transpose(in, out, n);
}

cplx Dispatch::inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n) const {
  return execution == Execution::serial ? serial::inner(a, b, n) : parallel::inner(a, b, n);
}

double Dispatch::weighted_norm(std::span<const cplx> data, std::size_t n,
                               std::span<const double> weight) const {
  return execution == Execution::serial ? serial::weighted_norm(data, n, weight)
                                        : parallel::weighted_norm(data, n, weight);
}

double Dispatch::row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                                  std::span<const double> weight) const {
  return execution == Execution::serial ? serial::row_spectral_sum(data, n, fft, weight)
                                        : parallel::row_spectral_sum(data, n, fft, weight);
}

}  // namespace chipgate::kernels
