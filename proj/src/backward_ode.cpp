#include "bsdelab/backward_ode.hpp"

#include <cmath>
#include <stdexcept>

namespace bsdelab {

int OdeSolution::index_at(double time) const {
  const double T = t.back();
  const double pos = time / T * steps();
  const int j = static_cast<int>(std::lround(pos));
  if (j < 0 || j > steps() || std::fabs(pos - j) > 1e-9 * steps())
    throw std::invalid_argument("OdeSolution: time not on the solution grid");
  return j;
}

OdeSolution solve_backward(const BackwardOdeProblem& problem, int steps) {
  if (steps < 1) throw std::invalid_argument("solve_backward: steps must be >= 1");
  if (problem.gamma < 0.0 || problem.epsilon < 0.0)
    throw std::invalid_argument("solve_backward: gamma and epsilon must be >= 0");
  if (problem.multiplier < 1.0)
    throw std::invalid_argument("solve_backward: multiplier must be >= 1");
  if (!(problem.terminal_time > 0.0) || problem.terminal_time > 1.0)
    throw std::invalid_argument("solve_backward: terminal time must lie in (0,1]");
  if (!problem.phi.fn) throw std::invalid_argument("solve_backward: empty modulus");

  const double T = problem.terminal_time;
  const double h = T / steps;
  auto rhs = [&problem](double v) {
    return problem.multiplier * (problem.phi(v) + problem.epsilon);
  };

  OdeSolution sol;
  sol.problem = problem;
  sol.t.resize(static_cast<std::size_t>(steps) + 1);
  sol.u.resize(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j)
    sol.t[static_cast<std::size_t>(j)] = T * static_cast<double>(j) / steps;

  // March v(s) = u(T - s) forward from v(0) = gamma.
  double v = problem.gamma;
  sol.u[static_cast<std::size_t>(steps)] = v;
  for (int i = 0; i < steps; ++i) {
    const double k1 = rhs(v);
    const double k2 = rhs(v + 0.5 * h * k1);
    const double k3 = rhs(v + 0.5 * h * k2);
    const double k4 = rhs(v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sol.u[static_cast<std::size_t>(steps - 1 - i)] = v;
  }

  for (int j = 0; j < steps; ++j)  // backward growth sanity
    if (sol.u[static_cast<std::size_t>(j)] < sol.u[static_cast<std::size_t>(j) + 1] - 1e-12)
      throw std::runtime_error("solve_backward: lost monotonicity (bad modulus?)");
  return sol;
}

VanishReport vanish_limit_check(const Modulus& phi, double multiplier,
                                std::span<const double> gamma_seq,
                                std::span<const double> eps_seq, int steps,
                                double threshold) {
  auto check_ladder = [](std::span<const double> seq, const char* what) {
    if (seq.empty()) throw std::invalid_argument(std::string("vanish_limit_check: empty ") + what);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (!(seq[i] > 0.0))
        throw std::invalid_argument(std::string("vanish_limit_check: nonpositive ") + what);
      if (i > 0 && !(seq[i] < seq[i - 1]))
        throw std::invalid_argument(std::string("vanish_limit_check: ") + what +
                                    " must decrease strictly");
    }
  };
  check_ladder(gamma_seq, "gamma ladder");
  check_ladder(eps_seq, "epsilon ladder");

  VanishReport rep;
  rep.monotone = true;
  std::vector<double> gamma_limit_column;
  for (double eps : eps_seq) {
    double prev = -1.0;
    for (double gamma : gamma_seq) {
      BackwardOdeProblem p{phi, eps, gamma, multiplier, 1.0};
      const double u0 = solve_backward(p, steps).u.front();
      rep.table.push_back({gamma, eps, u0});
      if (prev >= 0.0 && u0 > prev + 1e-12) rep.monotone = false;
      prev = u0;
    }
    if (!gamma_limit_column.empty() && prev > gamma_limit_column.back() + 1e-12)
      rep.monotone = false;
    gamma_limit_column.push_back(prev);
  }
  rep.final_u0 = gamma_limit_column.back();
  rep.vanished = rep.final_u0 <= threshold;
  return rep;
}

OdeSolution global_dominator(const Modulus& phi, double epsilon, int dim,
                             int steps) {
  if (dim < 1) throw std::invalid_argument("global_dominator: dim must be >= 1");
  BackwardOdeProblem p{phi, epsilon, 0.0, static_cast<double>(dim) + 1.0, 1.0};
  return solve_backward(p, steps);
}

}  // namespace bsdelab
