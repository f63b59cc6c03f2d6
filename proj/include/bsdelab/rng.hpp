#pragma once

#include <cstdint>

// ===========================================================================
// Deterministic random number generation.
//
// Brownian ensembles must reproduce bit-for-bit from (seed, shape) alone,
// on any platform.  The standard library distributions are implementation
// defined, so we fix the whole pipeline explicitly:
//
//   * pcg32 (XSH-RR 64/32, "setseq" variant): one generator per path, with
//     the path index folded into both the state seed and the stream
//     increment via splitmix64.
//   * uniforms: two 32-bit outputs form 53 mantissa bits; (bits + 0.5)/2^53
//     lies strictly inside (0,1).
//   * Gaussians: Wichura's PPND16 rational approximation of the inverse
//     normal CDF applied to those uniforms (|error| < 1e-15, and only
//     +,-,*,/,sqrt,log — no trig, so libm variance is not a concern).
// ===========================================================================

namespace bsdelab {

/// splitmix64 mixing step; used for seed derivation only.
std::uint64_t splitmix64(std::uint64_t x);

/// Minimal pcg32 engine (64-bit state, 32-bit output, per-stream increment).
class Pcg32 {
 public:
  Pcg32(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();

  /// Uniform draw strictly inside (0,1) with 53-bit resolution.
  double next_uniform();

  /// Standard normal draw via the inverse CDF.
  double next_normal();

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Inverse of the standard normal CDF (PPND16).  Requires p in (0,1).
double normal_inv_cdf(double p);

}  // namespace bsdelab
