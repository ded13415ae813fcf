#pragma once

// Square-grid kernels for the two-particle propagator. Each kernel exists as a
// serial reference and an OpenMP row-parallel version. Reductions go through
// per-row partial sums added in row order, so both versions return bitwise
// identical results for any thread count.

#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

namespace chipgate::kernels {

using cplx = std::complex<double>;

inline constexpr std::size_t kAlignment = 64;

template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
  T* allocate(std::size_t count) {
    return static_cast<T*>(::operator new(count * sizeof(T), std::align_val_t{kAlignment}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kAlignment}); }
  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

/// Row-major n x n complex array whose rows start on SIMD boundaries when
/// n is a multiple of 4.
using ComplexArray = std::vector<cplx, AlignedAllocator<cplx>>;

/// (a * b) without the C99 Annex G special-value handling of operator*.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// In-place FFTW transforms of one contiguous row of length n. Planned with
/// FFTW_ESTIMATE so the algorithm, and hence the rounding, never depends on
/// timing. For n divisible by 4 the plan assumes rows of a ComplexArray
/// (SIMD-aligned); otherwise it accepts any alignment. Executing is
/// thread-safe; construction is serialized internally.
class RowFft {
 public:
  explicit RowFft(std::size_t n);
  ~RowFft();
  RowFft(const RowFft&) = delete;
  RowFft& operator=(const RowFft&) = delete;

  std::size_t size() const { return n_; }
  bool aligned() const { return aligned_; }
  void forward(cplx* row) const;
  void backward(cplx* row) const;

 private:
  std::size_t n_;
  bool aligned_;
  void* forward_plan_;
  void* backward_plan_;
};

namespace serial {

/// data[k] *= factors[k].
void multiply(std::span<cplx> data, std::span<const cplx> factors);

/// For every row: forward FFT, multiply by factor[k], backward FFT. The
/// factor carries the 1/n normalization.
void row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                std::span<const cplx> factor);

/// row_filter preceded by data *= pointwise, fused into one sweep.
void row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise, std::size_t n,
                      const RowFft& fft, std::span<const cplx> factor);

void transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n);

/// sum conj(a) b.
cplx inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n);

/// sum |data|^2 weight.
double weighted_norm(std::span<const cplx> data, std::size_t n, std::span<const double> weight);

/// sum over rows and wavenumbers |FFT(row)_k|^2 weight[k].
double row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                        std::span<const double> weight);

}  // namespace serial

namespace parallel {

void multiply(std::span<cplx> data, std::span<const cplx> factors);
void row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                std::span<const cplx> factor);
void row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise, std::size_t n,
                      const RowFft& fft, std::span<const cplx> factor);
void transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n);
cplx inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n);
double weighted_norm(std::span<const cplx> data, std::size_t n, std::span<const double> weight);
double row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                        std::span<const double> weight);

}  // namespace parallel

enum class Execution { serial, parallel };

/// Dispatches to the serial or parallel variant.
struct Dispatch {
  Execution execution = Execution::parallel;

  void multiply(std::span<cplx> data, std::span<const cplx> factors) const;
  void row_filter(std::span<cplx> data, std::size_t n, const RowFft& fft,
                  std::span<const cplx> factor) const;
  void row_filter_after(std::span<cplx> data, std::span<const cplx> pointwise, std::size_t n,
                        const RowFft& fft, std::span<const cplx> factor) const;
  void transpose(std::span<const cplx> in, std::span<cplx> out, std::size_t n) const;
  cplx inner(std::span<const cplx> a, std::span<const cplx> b, std::size_t n) const;
  double weighted_norm(std::span<const cplx> data, std::size_t n,
                       std::span<const double> weight) const;
  double row_spectral_sum(std::span<const cplx> data, std::size_t n, const RowFft& fft,
                          std::span<const double> weight) const;
};

}  // namespace chipgate::kernels
