#pragma once

#include <span>
#include <vector>

#include "bsdelab/modulus.hpp"

// ===========================================================================
// The scalar backward comparison equation
//
//     u(t) = gamma + multiplier * int_t^T ( phi(u(s)) + epsilon ) ds,
//
// the workhorse that dominates solution differences.  Solved by classical
// RK4 marching backward from the terminal value on a uniform grid.  Because
// phi >= 0 the solution grows leftward; as gamma, then epsilon, shrink the
// whole curve collapses to zero exactly when the divergence integral of
// 1/phi blows up at 0 -- the vanishing-limit dichotomy probed below.
// ===========================================================================

namespace bsdelab {

struct BackwardOdeProblem {
  Modulus phi;
  double epsilon = 0.0;
  double gamma = 0.0;       // terminal value u(T)
  double multiplier = 1.0;  // >= 1
  double terminal_time = 1.0;
};

struct OdeSolution {
  BackwardOdeProblem problem;
  std::vector<double> t;  // ascending, 0 .. terminal_time
  std::vector<double> u;  // same length, non-increasing in t

  int steps() const { return static_cast<int>(t.size()) - 1; }
  double value(int j) const { return u[static_cast<std::size_t>(j)]; }
  /// Grid index of a time that must sit on the solution grid (1e-9 slack).
  int index_at(double time) const;
};

/// March RK4 from u(T) = gamma backward with the given number of uniform
/// steps over [0, T].
OdeSolution solve_backward(const BackwardOdeProblem& problem, int steps);

// ---------------------------------------------------------------------------

struct VanishRow {
  double gamma = 0.0;
  double epsilon = 0.0;
  double u0 = 0.0;  // u(0)
};

struct VanishReport {
  std::vector<VanishRow> table;  // epsilon-major, gamma decreasing inside
  bool monotone = false;         // u0 non-increasing along both ladders
  double final_u0 = 0.0;         // smallest gamma and epsilon
  bool vanished = false;         // final_u0 <= threshold
};

/// Tabulate u(0) over decreasing gamma and epsilon ladders and test whether
/// the double limit is collapsing below the threshold.  Ladders must be
/// positive and strictly decreasing.
VanishReport vanish_limit_check(const Modulus& phi, double multiplier,
                                std::span<const double> gamma_seq,
                                std::span<const double> eps_seq, int steps,
                                double threshold);

/// Global difference dominator: gamma = 0, multiplier = dim + 1, horizon
/// [0,1].  V(0) is the a priori sup-norm gap bound at closeness epsilon.
OdeSolution global_dominator(const Modulus& phi, double epsilon, int dim,
                             int steps);

}  // namespace bsdelab
