#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bsdelab/modulus.hpp"
#include "bsdelab/stochastic.hpp"

// ===========================================================================
// Driver models: the generator f(t, y, z) of the backward equation, with
// declared continuity moduli in y and z, plus the machinery that turns a
// merely uniformly continuous driver into a Lipschitz ladder: convolution
// against a shrinking smooth bump (mollification).
// ===========================================================================

namespace bsdelab {

/// Generator f: [0,1] x R^d x R^{d x m} -> R^d.  The moduli bound
/// |f(t,y1,z) - f(t,y2,z)| <= Phi(|y1-y2|) and |f(t,y,z1) - f(t,y,z2)| <=
/// Psi(||z1-z2||_F).  lipschitz < 0 means no Lipschitz constant is
/// declared; the regression solver refuses such drivers (mollify first).
struct Driver {
  std::string name;
  int dim_y = 1;  // d
  int dim_b = 1;  // m
  bool depends_y = true;
  bool depends_z = true;
  std::function<void(double t, std::span<const double> y,
                     std::span<const double> z, std::span<double> out)>
      eval;
  Modulus mod_y;
  Modulus mod_z;
  double lipschitz = -1.0;
  /// For mollified drivers: guaranteed sup distance to the source driver,
  /// Phi(r/n) + Psi(r/n); negative otherwise.
  double closeness = -1.0;
  int mollify_level = 0;  // n of the ladder, 0 = not mollified

  bool has_lipschitz() const { return lipschitz >= 0.0; }
  void operator()(double t, std::span<const double> y, std::span<const double> z,
                  std::span<double> out) const {
    eval(t, y, z, out);
  }
};

/// Terminal payoff xi per path (may read the whole trajectory).
struct TerminalCondition {
  std::string name;
  int dims = 1;  // d
  bool markovian = true;
  std::function<void(const PathEnsemble&, int path, std::span<double> out)> eval;
};

// --- moduli verification ---------------------------------------------------

struct ModuliReport {
  double worst_ratio_y = 0.0;  // sup over probes of |df| / Phi(|dy|)
  double worst_ratio_z = 0.0;
  int violations_y = 0;  // probes with ratio above 1 (+1e-9 slack)
  int violations_z = 0;
  bool passed() const { return violations_y == 0 && violations_z == 0; }
};

/// Monte Carlo audit of the declared moduli on random argument tuples in
/// [-range, range]; deterministic in the seed.  A ratio above one means
/// the declared modulus understates the driver's variation.
ModuliReport verify_moduli(const Driver& f, int probes, std::uint64_t seed,
                           double range = 2.0);

/// Sup distance between two drivers of equal shape over a deterministic
/// probe cloud; used for ladder closeness tables.
double driver_distance(const Driver& a, const Driver& b, int probes,
                       std::uint64_t seed, double range = 2.0);

// --- mollification ---------------------------------------------------------

/// Smooth bump kernel description: the profile exp(-1/(1-s^2)) on the unit
/// ball of the arguments the driver actually depends on, support scaled to
/// support_radius/n at ladder level n, discretized by a tensor midpoint
/// rule with nodes_per_axis points per axis.  Node weights are normalized
/// so the discrete rule has total mass exactly one (constants mollify to
/// themselves, and the symmetric node set preserves affine drivers up to
/// quadrature error).
struct MollifierKernel {
  double support_radius = 1.0;
  int nodes_per_axis = 9;
};

/// Convolve the driver with the level-n kernel.  The result is smooth,
/// carries an analytic Lipschitz bound, inherits the moduli, and records
/// closeness = Phi(r/n) + Psi(r/n) over the dependent arguments.
Driver mollify(const Driver& f, const MollifierKernel& kernel, int n);

// --- catalog ----------------------------------------------------------------

/// Built-in drivers addressable from config files.  Names: "zero",
/// "linear" (a*y_i + b*row_sum(z_i)), "sine" (c*sin(y_i + row_sum(z_i))),
/// "osgood" (Phi_osg(|y|) * unit vector), "abs" (c*|y_i|), "sqrt"
/// (sqrt modulus of |y|, the divergence-integral non-example).  Params:
/// d, m, a, b, c (defaults 1, 1, 0.5, 0.3, 1).  Unknown names rejected.
Driver builtin_driver(const std::string& name,
                      const std::map<std::string, double>& params = {});

TerminalCondition terminal_constant(int dims, double value);
/// xi_i = B_1^{(i mod m)}.
TerminalCondition terminal_brownian(int dims);
/// xi_i = sin(B_1^{(i mod m)} + i/2): smooth, bounded, Markovian.
TerminalCondition terminal_sin(int dims);
TerminalCondition builtin_terminal(const std::string& name, int dims,
                                   double value = 0.0);

}  // namespace bsdelab
