#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

// ===========================================================================
// Continuity moduli.  A modulus is a nondecreasing continuous function on
// [0, inf) with Phi(0) = 0 and declared linear growth Phi(x) <= K(1+x).
// Whether 1/Phi diverges at 0 (the condition separating drivers that admit
// solutions from ones that may not) is probed numerically by osgood_check,
// and the Lipschitz regularization Phi_k(x) = sup_y { Phi(y) - k|x-y| }
// turns any such modulus into a k-Lipschitz dominating envelope.
// ===========================================================================

namespace bsdelab {

struct Modulus {
  std::function<double(double)> fn;
  double growth_K = 0.0;
  bool osgood_declared = false;
  std::string name;

  double operator()(double x) const { return fn(x); }
};

/// Uniform probe lattice on [lo, hi] with count points.
struct ProbeGrid {
  double lo = 0.0;
  double hi = 1.0;
  int count = 1001;

  double point(int i) const {
    return lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  }
};

/// Check the modulus axioms (zero at zero, nondecreasing, growth bound) on
/// a probe lattice; throws std::invalid_argument on violation.  Catalog
/// factories run this at construction.
void validate_modulus(const Modulus& m, const ProbeGrid& probes);

// --- catalog moduli --------------------------------------------------------

Modulus zero_modulus();
/// Phi(x) = c*x.
Modulus linear_modulus(double c);
Modulus identity_modulus();
/// sqrt(x) on [0,1], linear continuation above (value and slope matched).
/// The divergence integral converges: this is the standard non-example.
Modulus sqrt_modulus();
/// x*(1 - ln(x)/2) on (0,1], linear continuation above.  Not Lipschitz at
/// 0, yet 1/Phi diverges there, so the backward comparison equation still
/// collapses: the canonical "merely uniformly continuous" modulus.
Modulus osgood_modulus();

// --- divergence probe ------------------------------------------------------

struct OsgoodReport {
  bool diverges = false;
  double integral = 0.0;        // I(delta_floor)
  double last_increment = 0.0;  // I gained over the final decade
  /// (delta, I(delta)) pairs, delta decreasing by decades from 1.
  std::vector<std::pair<double, double>> curve;
};

/// Numerically probes I(delta) = integral of 1/Phi over [delta, 1] on a
/// decade ladder down to delta_floor.  Verdict: the integral exceeded
/// tolerance_growth and was still gaining at least 1% per decade at the
/// floor (no plateau).  Phi must be strictly positive at the probe points.
OsgoodReport osgood_check(const Modulus& m, double delta_floor,
                          double tolerance_growth);

// --- Lipschitz regularization ---------------------------------------------

/// Phi_k(x) = sup_y { Phi(y) - k|x-y| }, evaluated by brute force with y
/// swept over the probe lattice.  Needs k > growth_K, which makes the
/// beyond-window candidates decay linearly, so a generous window recovers
/// the full-line envelope.  Values are exact on the lattice (the returned
/// function accepts x in [lo, hi] only); note Phi_k(0) may be positive --
/// the envelope is k-Lipschitz and dominates Phi but is not itself a
/// modulus until k exceeds every local slope.
Modulus lipschitz_regularize(const Modulus& phi, double k,
                             const ProbeGrid& y_grid);

}  // namespace bsdelab
