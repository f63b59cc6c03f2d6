#include "bsdelab/kernels.hpp"

// AVX2+FMA backend.  Compiled with -mavx2 -mfma (see CMakeLists); entered
// only after a runtime CPU check.  Each kernel performs exactly the same
// floating point operations as its scalar twin: one 4-lane accumulator,
// the (l0+l1)+(l2+l3) combine, then a sequential fused tail.  Inputs are
// assumed finite (no NaN ordering games between max_pd and fmax).

#if BSDELAB_BUILD_AVX2

#include <immintrin.h>

#include <cmath>

namespace bsdelab::kernels::avx2 {

namespace {

inline double combine_sum(__m256d acc) {
  alignas(32) double l[4];
  _mm256_store_pd(l, acc);
  return (l[0] + l[1]) + (l[2] + l[3]);
}

inline double combine_max(__m256d acc) {
  alignas(32) double l[4];
  _mm256_store_pd(l, acc);
  return std::fmax(std::fmax(l[0], l[1]), std::fmax(l[2], l[3]));
}

inline __m256d abs_pd(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(v, mask);
}

}  // namespace

double sum(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + 4 * k));
  double total = combine_sum(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) total += x[i];
  return total;
}

double sum_abs(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k)
    acc = _mm256_add_pd(acc, abs_pd(_mm256_loadu_pd(x.data() + 4 * k)));
  double total = combine_sum(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) total += std::fabs(x[i]);
  return total;
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x.data() + 4 * k),
                          _mm256_loadu_pd(y.data() + 4 * k), acc);
  double total = combine_sum(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) total = std::fma(x[i], y[i], total);
  return total;
}

double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k) {
    const __m256d xy = _mm256_mul_pd(_mm256_loadu_pd(x.data() + 4 * k),
                                     _mm256_loadu_pd(y.data() + 4 * k));
    acc = _mm256_fmadd_pd(xy, _mm256_loadu_pd(z.data() + 4 * k), acc);
  }
  double total = combine_sum(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fma(x[i] * y[i], z[i], total);
  return total;
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + 4 * k),
                                    _mm256_loadu_pd(y.data() + 4 * k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = combine_sum(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i) {
    const double d = x[i] - y[i];
    total = std::fma(d, d, total);
  }
  return total;
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k)
    acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(x.data() + 4 * k)));
  double total = combine_max(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fmax(total, std::fabs(x[i]));
  return total;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t k = 0; k < blocks; ++k) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x.data() + 4 * k),
                                    _mm256_loadu_pd(y.data() + 4 * k));
    acc = _mm256_max_pd(acc, abs_pd(d));
  }
  double total = combine_max(acc);
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fmax(total, std::fabs(x[i] - y[i]));
  return total;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  const __m256d va = _mm256_set1_pd(a);
  for (std::size_t k = 0; k < blocks; ++k) {
    const __m256d r = _mm256_fmadd_pd(va, _mm256_loadu_pd(x.data() + 4 * k),
                                      _mm256_loadu_pd(y.data() + 4 * k));
    _mm256_storeu_pd(y.data() + 4 * k, r);
  }
  for (std::size_t i = 4 * blocks; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

}  // namespace bsdelab::kernels::avx2

#else  // scalar-only build: keep the symbols, reject calls

#include <stdexcept>

namespace bsdelab::kernels::avx2 {

namespace {
[[noreturn]] void unavailable() {
  throw std::runtime_error("kernels: binary built without AVX2 support");
}
}  // namespace

double sum(std::span<const double>) { unavailable(); }
double sum_abs(std::span<const double>) { unavailable(); }
double dot(std::span<const double>, std::span<const double>) { unavailable(); }
double dot3(std::span<const double>, std::span<const double>,
            std::span<const double>) { unavailable(); }
double sum_sq_diff(std::span<const double>, std::span<const double>) { unavailable(); }
double max_abs(std::span<const double>) { unavailable(); }
double max_abs_diff(std::span<const double>, std::span<const double>) { unavailable(); }
void axpy(double, std::span<const double>, std::span<double>) { unavailable(); }

}  // namespace bsdelab::kernels::avx2

#endif
