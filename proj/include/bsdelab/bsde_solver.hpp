#pragma once

#include <vector>

#include "bsdelab/backward_ode.hpp"
#include "bsdelab/driver.hpp"
#include "bsdelab/stochastic.hpp"

// ===========================================================================
// Least-squares Monte Carlo solver for the backward equation
//
//   Y_t = xi + int_t^1 f(s, Y_s, Z_s) ds - int_t^1 Z_s dB_s
//
// on a fixed ensemble.  Backward induction per grid step: project Y(t_j+1)
// onto a polynomial basis in the time-j Brownian state to get the
// conditional mean, read Z off the regression of the *centered* next value
// times the Brownian increment over the step, then resolve the implicit
// Y(t_j) = E_j[Y(t_j+1)] + step * f(t_j, Y(t_j), Z(t_j)) with a few Picard
// sweeps.  Centering by the fitted mean is what makes constant terminal
// data reproduce Z = 0 to regularizer precision rather than Monte Carlo
// noise.  Only Lipschitz drivers are accepted: mollify first.
// ===========================================================================

namespace bsdelab {

struct RegressionConfig {
  int degree = 3;       // total polynomial degree in the m Brownian coords
  double ridge = 1e-10; // diagonal regularizer on the normal equations
  int picard = 3;       // implicit-step fixed point sweeps
};

struct SolverMeta {
  std::vector<double> y0;         // Y(0) per coordinate (same on all paths)
  std::vector<double> y0_stderr;  // MC standard error of the final projection
  double contraction = 0.0;       // step * Lipschitz constant; < 1 wanted
  int basis_size = 0;
  int ridge_bumps = 0;  // times the regularizer had to be raised
};

struct SolutionPair {
  AdaptedProcess Y;  // d x 1 per (time, path)
  AdaptedProcess Z;  // d x m per (time, path); final slice identically 0
  SolverMeta meta;
};

SolutionPair solve_bsde(const Driver& f, const TerminalCondition& xi,
                        const PathEnsemble& ens, const RegressionConfig& reg);

/// Deterministic special case f = phi(y) + epsilon with constant terminal
/// value a >= 0: Y is the backward comparison solution broadcast over
/// `paths` copies, Z identically zero.  No regression involved.
SolutionPair solve_deterministic(const Modulus& phi, double epsilon, double a,
                                 const TimeGrid& grid, int paths = 1);

// ---------------------------------------------------------------------------

struct ResidualStats {
  double rms = 0.0;      // root mean square defect over paths and times
  double max_abs = 0.0;  // worst pathwise defect
  std::vector<double> per_time_rms;
};

/// Pathwise defect of the discrete dynamics: for every grid point, Y(t_j)
/// minus [xi + sum of driver terms - sum of Z dB terms over [t_j, 1)].
ResidualStats residual_check(const SolutionPair& sol, const Driver& f,
                             const TerminalCondition& xi,
                             const PathEnsemble& ens);

// ---------------------------------------------------------------------------

struct Step1Report {
  double bound = 0.0;            // (eps^2 + 4K^2) * exp(K^2 + 2K + 2)
  double sup_y_sq = 0.0;         // sup over (t, path) of |Y_a - Y_b|^2
  double mean_z_integral = 0.0;  // ensemble mean of sum ||Z_a-Z_b||_F^2 step
  bool holds = false;
  double slack_factor = 0.0;     // bound / max(observed)
};

/// A priori uniform bound on a pair of solutions whose drivers are
/// eps_pair-close with common growth constant K.  Both solutions must live
/// on the same ensemble shape.
Step1Report step1_uniform_bound(const SolutionPair& a, const SolutionPair& b,
                                double eps_pair, double K);

}  // namespace bsdelab
