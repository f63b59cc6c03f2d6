#pragma once

#include <span>
#include <vector>

#include "bsdelab/backward_ode.hpp"
#include "bsdelab/stochastic.hpp"

// ===========================================================================
// Envelope of a process at a stopping time: the smallest terminal seed
// gamma whose backward comparison solution dominates X at tau on every
// path of the ensemble, found by bisection (the feasible set is an upward
// closed half line by ODE comparison).  theta = u^{gamma0}(tau) is the
// dominating envelope value; by flow uniqueness the same curve u^{gamma0}
// also dominates inside observation windows ending at tau, which is what
// the measure-change stage checks.
// ===========================================================================

namespace bsdelab {

struct Envelope {
  double gamma0 = 0.0;
  std::vector<double> theta;  // u^{gamma0}(tau_p) per path
  OdeSolution dominator;      // u^{gamma0} on the ensemble grid over [0,1]
  double bound_C = 0.0;
  int binding_path = -1;  // path with the smallest feasibility slack
};

/// Envelope of the scalar process X at tau.  base supplies phi, epsilon
/// and the multiplier; its gamma and terminal time are ignored (the
/// comparison equation always runs over [0,1] on the ensemble grid).
/// Throws when even gamma = bound_C fails to dominate.  Bisection is run
/// to absolute tolerance 1e-10 and returns the feasible endpoint.
Envelope envelope_at(const AdaptedProcess& X, const StoppingTime& tau,
                     const BackwardOdeProblem& base, double bound_C);

// ---------------------------------------------------------------------------

struct ScalingRow {
  double alpha = 0.0;
  double gamma0 = 0.0;
  double sup_diff_scaled = 0.0;  // sup_p |theta_alpha - alpha*theta|
  double sup_diff_base = 0.0;    // sup_p |theta_alpha - theta|
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  /// Exact proportionality theta_alpha = alpha*theta is only guaranteed
  /// for the identity modulus with epsilon = 0 (linear comparison
  /// equation); otherwise only continuity in alpha is claimed.
  bool homogeneous_case = false;
};

ScalingReport envelope_scaling_probe(const AdaptedProcess& X,
                                     const StoppingTime& tau,
                                     const BackwardOdeProblem& base,
                                     double bound_C,
                                     std::span<const double> alphas);

}  // namespace bsdelab
