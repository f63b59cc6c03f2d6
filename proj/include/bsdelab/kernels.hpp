#pragma once

#include <cstddef>
#include <span>

// ===========================================================================
// Reduction kernels with runtime ISA dispatch.
//
// Every ensemble-wide reduction in the library (regression Gram products,
// distance tables, Monte Carlo means) funnels through these entry points.
// Two backends exist: a portable scalar one and an AVX2+FMA one.  They are
// written to be *bit-identical*: both accumulate in four independent lanes
// (lane l sees elements 4k+l), combine lanes as (l0+l1)+(l2+l3), and fold
// the remainder sequentially with the same fused-multiply-add operations.
// Because the arithmetic is identical op for op, results do not depend on
// which backend the dispatcher picks, and exported numbers stay stable
// across machines with and without AVX2.
//
// Backend selection: AVX2 is chosen automatically when the CPU supports
// avx2+fma.  Setting the environment variable BSDELAB_ISA=scalar (or avx2)
// before first use, or calling force_backend(), overrides the choice.
// ===========================================================================

namespace bsdelab::kernels {

enum class Backend { scalar, avx2 };

/// True when this binary carries an AVX2 build *and* the CPU supports it.
bool avx2_available();

/// Backend the dispatcher is currently routing to.
Backend active_backend();

/// Pin the backend explicitly; throws std::invalid_argument when asked for
/// an unavailable one.
void force_backend(Backend b);

// --- dispatched entry points ----------------------------------------------

double sum(std::span<const double> x);
double sum_abs(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
/// sum_i x[i]*y[i]*z[i]; the x*y product rounds once before the fused add.
double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
/// y[i] += a*x[i] with a single rounding (fma).
void axpy(double a, std::span<const double> x, std::span<double> y);

// --- direct backend access (for equivalence tests) ------------------------

namespace scalar {
double sum(std::span<const double> x);
double sum_abs(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
}  // namespace scalar

namespace avx2 {
// Defined only when the binary was built with AVX2 support; call behind
// avx2_available().
double sum(std::span<const double> x);
double sum_abs(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
double dot3(std::span<const double> x, std::span<const double> y,
            std::span<const double> z);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
double max_abs(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
}  // namespace avx2

}  // namespace bsdelab::kernels
