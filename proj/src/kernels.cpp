#include "bsdelab/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace bsdelab::kernels {

// ---------------------------------------------------------------------------
// Scalar backend.  The four-lane structure mirrors one 256-bit register so
// the AVX2 backend produces the same bits; see kernels.hpp.
// ---------------------------------------------------------------------------
namespace scalar {

double sum(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 += x[4 * k + 0];
    l1 += x[4 * k + 1];
    l2 += x[4 * k + 2];
    l3 += x[4 * k + 3];
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = 4 * blocks; i < n; ++i) total += x[i];
  return total;
}

double sum_abs(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 += std::fabs(x[4 * k + 0]);
    l1 += std::fabs(x[4 * k + 1]);
    l2 += std::fabs(x[4 * k + 2]);
    l3 += std::fabs(x[4 * k + 3]);
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = 4 * blocks; i < n; ++i) total += std::fabs(x[i]);
  return total;
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 = std::fma(x[4 * k + 0], y[4 * k + 0], l0);
    l1 = std::fma(x[4 * k + 1], y[4 * k + 1], l1);
    l2 = std::fma(x[4 * k + 2], y[4 * k + 2], l2);
    l3 = std::fma(x[4 * k + 3], y[4 * k + 3], l3);
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = 4 * blocks; i < n; ++i) total = std::fma(x[i], y[i], total);
  return total;
}

double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 = std::fma(x[4 * k + 0] * y[4 * k + 0], z[4 * k + 0], l0);
    l1 = std::fma(x[4 * k + 1] * y[4 * k + 1], z[4 * k + 1], l1);
    l2 = std::fma(x[4 * k + 2] * y[4 * k + 2], z[4 * k + 2], l2);
    l3 = std::fma(x[4 * k + 3] * y[4 * k + 3], z[4 * k + 3], l3);
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fma(x[i] * y[i], z[i], total);
  return total;
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    const double d0 = x[4 * k + 0] - y[4 * k + 0];
    const double d1 = x[4 * k + 1] - y[4 * k + 1];
    const double d2 = x[4 * k + 2] - y[4 * k + 2];
    const double d3 = x[4 * k + 3] - y[4 * k + 3];
    l0 = std::fma(d0, d0, l0);
    l1 = std::fma(d1, d1, l1);
    l2 = std::fma(d2, d2, l2);
    l3 = std::fma(d3, d3, l3);
  }
  double total = (l0 + l1) + (l2 + l3);
  for (std::size_t i = 4 * blocks; i < n; ++i) {
    const double d = x[i] - y[i];
    total = std::fma(d, d, total);
  }
  return total;
}

double max_abs(std::span<const double> x) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 = std::fmax(l0, std::fabs(x[4 * k + 0]));
    l1 = std::fmax(l1, std::fabs(x[4 * k + 1]));
    l2 = std::fmax(l2, std::fabs(x[4 * k + 2]));
    l3 = std::fmax(l3, std::fabs(x[4 * k + 3]));
  }
  double total = std::fmax(std::fmax(l0, l1), std::fmax(l2, l3));
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fmax(total, std::fabs(x[i]));
  return total;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size(), blocks = n / 4;
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  for (std::size_t k = 0; k < blocks; ++k) {
    l0 = std::fmax(l0, std::fabs(x[4 * k + 0] - y[4 * k + 0]));
    l1 = std::fmax(l1, std::fabs(x[4 * k + 1] - y[4 * k + 1]));
    l2 = std::fmax(l2, std::fabs(x[4 * k + 2] - y[4 * k + 2]));
    l3 = std::fmax(l3, std::fabs(x[4 * k + 3] - y[4 * k + 3]));
  }
  double total = std::fmax(std::fmax(l0, l1), std::fmax(l2, l3));
  for (std::size_t i = 4 * blocks; i < n; ++i)
    total = std::fmax(total, std::fabs(x[i] - y[i]));
  return total;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

}  // namespace scalar

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------
namespace {

struct Vtable {
  double (*sum)(std::span<const double>);
  double (*sum_abs)(std::span<const double>);
  double (*dot)(std::span<const double>, std::span<const double>);
  double (*dot3)(std::span<const double>, std::span<const double>,
                 std::span<const double>);
  double (*sum_sq_diff)(std::span<const double>, std::span<const double>);
  double (*max_abs)(std::span<const double>);
  double (*max_abs_diff)(std::span<const double>, std::span<const double>);
  void (*axpy)(double, std::span<const double>, std::span<double>);
};

constexpr Vtable kScalarTable{scalar::sum,         scalar::sum_abs,
                              scalar::dot,         scalar::dot3,
                              scalar::sum_sq_diff, scalar::max_abs,
                              scalar::max_abs_diff, scalar::axpy};

#if BSDELAB_BUILD_AVX2
constexpr Vtable kAvx2Table{avx2::sum,         avx2::sum_abs,
                            avx2::dot,         avx2::dot3,
                            avx2::sum_sq_diff, avx2::max_abs,
                            avx2::max_abs_diff, avx2::axpy};
#endif

Backend g_backend = Backend::scalar;

Backend pick_initial_backend() {
  Backend b = avx2_available() ? Backend::avx2 : Backend::scalar;
  if (const char* env = std::getenv("BSDELAB_ISA")) {
    if (std::strcmp(env, "scalar") == 0) b = Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) b = Backend::avx2;
  }
  return b;
}

const Vtable& table() {
  static bool init = [] {
    g_backend = pick_initial_backend();
    return true;
  }();
  (void)init;
#if BSDELAB_BUILD_AVX2
  if (g_backend == Backend::avx2) return kAvx2Table;
#endif
  return kScalarTable;
}

}  // namespace

bool avx2_available() {
#if BSDELAB_BUILD_AVX2
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  table();  // ensure init
  return g_backend;
}

void force_backend(Backend b) {
  table();  // ensure init
  if (b == Backend::avx2 && !avx2_available())
    throw std::invalid_argument("kernels: AVX2 backend not available");
  g_backend = b;
}

namespace {
void require_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernels: span lengths differ");
}
}  // namespace

double sum(std::span<const double> x) { return table().sum(x); }
double sum_abs(std::span<const double> x) { return table().sum_abs(x); }
double dot(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size());
  return table().dot(x, y);
}
double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z) {
  require_same_size(x.size(), y.size());
  require_same_size(x.size(), z.size());
  return table().dot3(x, y, z);
}
double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size());
  return table().sum_sq_diff(x, y);
}
double max_abs(std::span<const double> x) { return table().max_abs(x); }
double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size());
  return table().max_abs_diff(x, y);
}
void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size());
  table().axpy(a, x, y);
}

}  // namespace bsdelab::kernels
