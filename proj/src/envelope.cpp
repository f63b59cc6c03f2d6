#include "bsdelab/envelope.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bsdelab {

namespace {

constexpr double kBisectTol = 1e-10;

struct Feasibility {
  bool ok = false;
  double min_slack = 0.0;
  int tightest_path = -1;
};

Feasibility dominates(const OdeSolution& u, const AdaptedProcess& X,
                      const StoppingTime& tau) {
  Feasibility r;
  r.ok = true;
  r.min_slack = std::numeric_limits<double>::infinity();
  for (int p = 0; p < X.paths; ++p) {
    const int j = tau.at(p);
    const double slack = u.value(j) - X.at(j, p);
    if (slack < r.min_slack) {
      r.min_slack = slack;
      r.tightest_path = p;
    }
    if (slack < 0.0) r.ok = false;
  }
  return r;
}

}  // namespace

Envelope envelope_at(const AdaptedProcess& X, const StoppingTime& tau,
                     const BackwardOdeProblem& base, double bound_C) {
  if (X.rows != 1 || X.cols != 1)
    throw std::invalid_argument("envelope_at: X must be scalar");
  if (static_cast<int>(tau.index.size()) != X.paths ||
      tau.horizon != X.grid.steps())
    throw std::invalid_argument("envelope_at: stopping time does not match X");
  if (bound_C < 0.0)
    throw std::invalid_argument("envelope_at: bound_C must be >= 0");

  const int steps = X.grid.steps();
  auto solve_gamma = [&base, steps](double gamma) {
    BackwardOdeProblem p = base;
    p.gamma = gamma;
    p.terminal_time = 1.0;
    return solve_backward(p, steps);
  };

  Envelope env;
  env.bound_C = bound_C;

  // gamma = 0 first: X <= 0 (or a vanishing comparison curve) needs no seed.
  OdeSolution at_zero = solve_gamma(0.0);
  Feasibility f0 = dominates(at_zero, X, tau);
  if (f0.ok) {
    env.gamma0 = 0.0;
    env.dominator = std::move(at_zero);
    env.binding_path = f0.tightest_path;
  } else {
    OdeSolution at_cap = solve_gamma(bound_C);
    if (!dominates(at_cap, X, tau).ok)
      throw std::invalid_argument(
          "envelope_at: candidate set empty under bound_C (bound too small)");
    double lo = 0.0, hi = bound_C;
    while (hi - lo > kBisectTol) {
      const double mid = 0.5 * (lo + hi);
      if (dominates(solve_gamma(mid), X, tau).ok)
        hi = mid;
      else
        lo = mid;
    }
    env.gamma0 = hi;
    env.dominator = solve_gamma(hi);
    env.binding_path = dominates(env.dominator, X, tau).tightest_path;
  }

  env.theta.resize(static_cast<std::size_t>(X.paths));
  for (int p = 0; p < X.paths; ++p)
    env.theta[static_cast<std::size_t>(p)] = env.dominator.value(tau.at(p));
  return env;
}

ScalingReport envelope_scaling_probe(const AdaptedProcess& X,
                                     const StoppingTime& tau,
                                     const BackwardOdeProblem& base,
                                     double bound_C,
                                     std::span<const double> alphas) {
  ScalingReport rep;
  rep.homogeneous_case =
      base.phi.name == "identity" && base.epsilon == 0.0;

  const Envelope ref = envelope_at(X, tau, base, bound_C);
  for (double alpha : alphas) {
    if (!(alpha > 0.0))
      throw std::invalid_argument("envelope_scaling_probe: alpha must be > 0");
    AdaptedProcess scaled = X;
    for (double& v : scaled.values) v *= alpha;
    const Envelope ea =
        envelope_at(scaled, tau, base, std::max(1.0, alpha) * bound_C);
    ScalingRow row;
    row.alpha = alpha;
    row.gamma0 = ea.gamma0;
    for (int p = 0; p < X.paths; ++p) {
      const double th = ea.theta[static_cast<std::size_t>(p)];
      const double base_th = ref.theta[static_cast<std::size_t>(p)];
      row.sup_diff_scaled =
          std::max(row.sup_diff_scaled, std::fabs(th - alpha * base_th));
      row.sup_diff_base = std::max(row.sup_diff_base, std::fabs(th - base_th));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace bsdelab
