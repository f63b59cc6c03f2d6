// Measure-change toolkit for comparing two coupled solutions.
//
// From two solution pairs on one ensemble we form the signed combination
//   z_mn(t) = sum_i sgn(Y_A^i - Y_B^i) (Z_A^i-row - Z_B^i-row),
// an m-vector per path and time (sgn(0) = 0, so coordinate cancellation is
// possible and meaningful).  Windows are the stretches where |z_mn| stays
// above a floor eps0 while the raw ||Z_A - Z_B|| stays below the cap 1/eps0;
// on such a stretch the drift
//   eta = multiplier * psi / |z_mn|^2 * z_mn
// is bounded by multiplier * psi / eps0, which makes the exponential density
// exp(int eta dB - 1/2 int |eta|^2 dt) integrable.  Densities are accumulated
// in log space and exponentiated once per path.
//
// eta is implemented as the m-vector aligned with z_mn rather than a bare
// scalar quotient: for m > 1 that is the only shape for which eta·dB against
// the signed combination reproduces the intended integrand.
#pragma once

#include <string>
#include <vector>

#include "bsdelab/backward_ode.hpp"
#include "bsdelab/bsde_solver.hpp"
#include "bsdelab/stochastic.hpp"

namespace bsdelab {

/// z_mn with its pointwise magnitude and the cumulative clock int |z_mn| dt.
struct SignedCombination {
  AdaptedProcess z_mn;       // 1 x m per path/time
  AdaptedProcess magnitude;  // scalar Euclidean norm of z_mn
  AdaptedProcess clock;      // running integral of magnitude (left rule)
};

/// Pathwise index window [left, right) on which the Novikov sandwich
/// eps0 <= |z_mn| and ||Z_A - Z_B|| <= 1/eps0 holds.
struct GirsanovWindow {
  double eps0 = 0.0;
  int horizon = 0;
  std::vector<int> left;   // entry index, clipped to the interval
  std::vector<int> right;  // exit index, left == right means degenerate
  double active_fraction = 0.0;  // share of paths with a non-empty window

  bool active(int path, int j) const {
    return left[static_cast<std::size_t>(path)] <= j &&
           j < right[static_cast<std::size_t>(path)];
  }
};

struct DensityReport {
  std::vector<double> log_density;  // per path, over that path's window
  std::vector<double> density;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  // density-weighted means of the drift-corrected window increments
  // sum_{j in window} (dB_k - eta_k dt); one entry per Brownian coordinate,
  // each should vanish within its standard error
  std::vector<double> corrected_mean;
  std::vector<double> corrected_stderr;
};

struct DominationViolation {
  int path = 0;
  int index = 0;
  double lhs = 0.0;
  double bound = 0.0;
};

struct DominationReport {
  double slack = 0.0;
  long checked_points = 0;
  double worst_margin = 0.0;  // max over window of lhs - u - slack (<= 0 passes)
  std::vector<DominationViolation> violations;
  bool passed = false;
};

/// Rowwise signed difference combination of two solutions on one ensemble.
SignedCombination signed_z_combination(const SolutionPair& a, const SolutionPair& b);

/// Frobenius norm of Z_A - Z_B as a scalar process.
AdaptedProcess z_norm_diff(const SolutionPair& a, const SolutionPair& b);

/// Entry/exit scan per path over [interval_left, interval_right]:
/// entry = first time |z_mn| >= eps0, exit = first later time the sandwich
/// breaks, both clipped.  magnitude and cap are scalar processes.
GirsanovWindow novikov_window(const AdaptedProcess& magnitude,
                              const AdaptedProcess& cap_norm,
                              const StoppingTime& interval_left,
                              const StoppingTime& interval_right, double eps0);

/// multiplier * psi / |z_mn|^2 * z_mn inside the window, zero outside.
/// psi is a scalar process (modulus of the raw z-difference).  A magnitude
/// below eps0 inside a window is a broken upstream invariant -> hard error.
AdaptedProcess drift_eta(const AdaptedProcess& psi, const SignedCombination& comb,
                         const GirsanovWindow& window, double multiplier);

/// Exponential densities over each path's window plus the drift-corrected
/// increment check; log-space accumulation, overflow-free.
DensityReport density(const AdaptedProcess& eta, const PathEnsemble& ens,
                      const GirsanovWindow& window);

/// Checks sum_i w_i |Y_A^i - Y_B^i| <= u + slack at every in-window grid
/// point.  u must be solved on the same step count and horizon as the grid.
DominationReport domination_check(const SolutionPair& a, const SolutionPair& b,
                                  const OdeSolution& u, const GirsanovWindow& window,
                                  double slack,
                                  const std::vector<double>& weights = {});

}  // namespace bsdelab
