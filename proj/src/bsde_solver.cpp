#include "bsdelab/bsde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "bsdelab/kernels.hpp"

namespace bsdelab {

namespace {

// --- multivariate monomial basis -------------------------------------------

/// Exponent tuples for m variables with total degree <= deg, graded lex.
std::vector<std::vector<int>> monomial_exponents(int m, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(static_cast<std::size_t>(m), 0);
  for (int total = 0; total <= deg; ++total) {
    // enumerate compositions of `total` into m parts
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == m - 1) {
        e[static_cast<std::size_t>(pos)] = left;
        out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[static_cast<std::size_t>(pos)] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, total);
  }
  return out;
}

// --- small SPD solver -------------------------------------------------------

/// In-place Cholesky of G + ridge*I; returns false when a pivot degenerates.
bool cholesky(std::vector<double>& G, int n, double ridge) {
  for (int i = 0; i < n; ++i) G[static_cast<std::size_t>(i) * n + i] += ridge;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = G[static_cast<std::size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        s -= G[static_cast<std::size_t>(i) * n + k] * G[static_cast<std::size_t>(j) * n + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        G[static_cast<std::size_t>(i) * n + i] = std::sqrt(s);
      } else {
        G[static_cast<std::size_t>(i) * n + j] = s / G[static_cast<std::size_t>(j) * n + j];
      }
    }
  }
  return true;
}

void cholesky_solve(const std::vector<double>& L, int n, std::vector<double>& b) {
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= L[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / L[static_cast<std::size_t>(i) * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= L[static_cast<std::size_t>(k) * n + i] * b[static_cast<std::size_t>(k)];
    b[static_cast<std::size_t>(i)] = s / L[static_cast<std::size_t>(i) * n + i];
  }
}

// --- per-step cross-sectional regression ------------------------------------

/// Basis columns and factored normal equations at one grid time, shared by
/// every projection performed at that time.
class StateRegression {
 public:
  StateRegression(int dims, int degree, double ridge)
      : exps_(monomial_exponents(dims, degree)), dims_(dims), ridge_(ridge) {}

  int basis_size() const { return static_cast<int>(exps_.size()); }
  int ridge_bumps() const { return bumps_; }

  void build(const PathEnsemble& ens, int j) {
    const int nb = basis_size(), M = ens.paths;
    paths_ = M;
    cols_.assign(static_cast<std::size_t>(nb) * M, 0.0);
    for (int p = 0; p < M; ++p) {
      for (int b = 0; b < nb; ++b) {
        double v = 1.0;
        for (int k = 0; k < dims_; ++k) {
          const int e = exps_[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
          const double x = ens.value(j, p, k);
          for (int r = 0; r < e; ++r) v *= x;
        }
        cols_[static_cast<std::size_t>(b) * M + p] = v;
      }
    }
    // normal equations, factored once per time step
    gram_.assign(static_cast<std::size_t>(nb) * nb, 0.0);
    for (int a = 0; a < nb; ++a)
      for (int b = 0; b <= a; ++b) {
        const double g = kernels::dot(column(a), column(b));
        gram_[static_cast<std::size_t>(a) * nb + b] = g;
        gram_[static_cast<std::size_t>(b) * nb + a] = g;
      }
    double ridge = ridge_;
    factor_ = gram_;
    while (!cholesky(factor_, nb, ridge)) {
      ridge *= 100.0;
      ++bumps_;
      factor_ = gram_;
      if (ridge > 1e6)
        throw std::runtime_error("solve_bsde: regression irrecoverably singular");
    }
  }

  std::span<const double> column(int b) const {
    return {cols_.data() + static_cast<std::size_t>(b) * paths_,
            static_cast<std::size_t>(paths_)};
  }

  /// Project `target` and write the fitted values (one per path).
  void fit(std::span<const double> target, std::span<double> fitted) {
    const int nb = basis_size();
    coef_.resize(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) coef_[static_cast<std::size_t>(b)] = kernels::dot(column(b), target);
    cholesky_solve(factor_, nb, coef_);
    for (double& v : fitted) v = 0.0;
    for (int b = 0; b < nb; ++b) kernels::axpy(coef_[static_cast<std::size_t>(b)], column(b), fitted);
  }

  /// Same, with right-hand side sum_p col*resid*weight (saves a target
  /// materialization for the Z projections); result scaled by `scale`.
  void fit_product(std::span<const double> resid, std::span<const double> weight,
                   double scale, std::span<double> fitted) {
    const int nb = basis_size();
    coef_.resize(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b)
      coef_[static_cast<std::size_t>(b)] = scale * kernels::dot3(column(b), resid, weight);
    cholesky_solve(factor_, nb, coef_);
    for (double& v : fitted) v = 0.0;
    for (int b = 0; b < nb; ++b) kernels::axpy(coef_[static_cast<std::size_t>(b)], column(b), fitted);
  }

 private:
  std::vector<std::vector<int>> exps_;
  int dims_;
  double ridge_;
  int paths_ = 0;
  int bumps_ = 0;
  std::vector<double> cols_;
  std::vector<double> gram_;
  std::vector<double> factor_;
  std::vector<double> coef_;
};

double sample_sd(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = kernels::sum(x) / n;
  double acc = 0.0;
  for (double v : x) {
    const double d = v - mean;
    acc = std::fma(d, d, acc);
  }
  return n > 1.0 ? std::sqrt(acc / (n - 1.0)) : 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------

SolutionPair solve_bsde(const Driver& f, const TerminalCondition& xi,
                        const PathEnsemble& ens, const RegressionConfig& reg) {
  if (!f.has_lipschitz())
    throw std::invalid_argument(
        "solve_bsde: driver declares no Lipschitz constant; mollify first");
  if (xi.dims != f.dim_y)
    throw std::invalid_argument("solve_bsde: terminal dims do not match driver");
  if (ens.dims != f.dim_b)
    throw std::invalid_argument("solve_bsde: ensemble dims do not match driver");
  if (reg.degree < 0 || reg.ridge < 0.0 || reg.picard < 1)
    throw std::invalid_argument("solve_bsde: bad regression config");

  const int d = f.dim_y, m = f.dim_b, M = ens.paths, N = ens.grid.steps();
  const double dt = ens.grid.step;

  StateRegression regression(m, reg.degree, reg.ridge);
  if (M < regression.basis_size())
    throw std::invalid_argument("solve_bsde: fewer paths than basis functions");

  SolutionPair sol;
  sol.Y = AdaptedProcess(ens.grid, M, d, 1);
  sol.Z = AdaptedProcess(ens.grid, M, d, m);
  sol.meta.basis_size = regression.basis_size();
  sol.meta.contraction = dt * f.lipschitz;

  // terminal slice, pinned exactly
  {
    std::vector<double> buf(static_cast<std::size_t>(d));
    for (int p = 0; p < M; ++p) {
      xi.eval(ens, p, buf);
      for (int i = 0; i < d; ++i) sol.Y.at(N, p, i) = buf[static_cast<std::size_t>(i)];
    }
  }

  std::vector<double> ynext(static_cast<std::size_t>(d) * M);  // coordinate-major
  std::vector<double> ey(static_cast<std::size_t>(d) * M);
  std::vector<double> resid(static_cast<std::size_t>(M));
  std::vector<double> incs(static_cast<std::size_t>(m) * M);
  std::vector<double> fitted(static_cast<std::size_t>(M));
  std::vector<double> yv(static_cast<std::size_t>(d)), fout(static_cast<std::size_t>(d));
  std::vector<double> zv(static_cast<std::size_t>(d) * m);

  for (int j = N - 1; j >= 0; --j) {
    regression.build(ens, j);

    for (int i = 0; i < d; ++i)
      for (int p = 0; p < M; ++p)
        ynext[static_cast<std::size_t>(i) * M + p] = sol.Y.at(j + 1, p, i);
    for (int k = 0; k < m; ++k)
      for (int p = 0; p < M; ++p)
        incs[static_cast<std::size_t>(k) * M + p] = ens.increment(j, p, k);

    if (j == 0) {  // record the Monte Carlo error of the final projection
      sol.meta.y0_stderr.resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i)
        sol.meta.y0_stderr[static_cast<std::size_t>(i)] =
            sample_sd({ynext.data() + static_cast<std::size_t>(i) * M,
                       static_cast<std::size_t>(M)}) /
            std::sqrt(static_cast<double>(M));
    }

    for (int i = 0; i < d; ++i) {
      std::span<const double> yn{ynext.data() + static_cast<std::size_t>(i) * M,
                                 static_cast<std::size_t>(M)};
      std::span<double> eyi{ey.data() + static_cast<std::size_t>(i) * M,
                            static_cast<std::size_t>(M)};
      regression.fit(yn, eyi);
      for (int p = 0; p < M; ++p) resid[static_cast<std::size_t>(p)] = yn[static_cast<std::size_t>(p)] - eyi[static_cast<std::size_t>(p)];
      for (int k = 0; k < m; ++k) {
        regression.fit_product(
            resid,
            {incs.data() + static_cast<std::size_t>(k) * M, static_cast<std::size_t>(M)},
            1.0 / dt, fitted);
        for (int p = 0; p < M; ++p) sol.Z.at(j, p, i, k) = fitted[static_cast<std::size_t>(p)];
      }
    }

    const double t = ens.grid.time(j);
    for (int p = 0; p < M; ++p) {
      for (int i = 0; i < d; ++i) yv[static_cast<std::size_t>(i)] = ey[static_cast<std::size_t>(i) * M + p];
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < m; ++k) zv[static_cast<std::size_t>(i) * m + k] = sol.Z.at(j, p, i, k);
      for (int sweep = 0; sweep < reg.picard; ++sweep) {
        f(t, yv, zv, fout);
        for (int i = 0; i < d; ++i)
          yv[static_cast<std::size_t>(i)] = std::fma(dt, fout[static_cast<std::size_t>(i)], ey[static_cast<std::size_t>(i) * M + p]);
      }
      for (int i = 0; i < d; ++i) sol.Y.at(j, p, i) = yv[static_cast<std::size_t>(i)];
    }
  }

  sol.meta.ridge_bumps = regression.ridge_bumps();
  sol.meta.y0.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) sol.meta.y0[static_cast<std::size_t>(i)] = sol.Y.at(0, 0, i);
  return sol;
}

// ---------------------------------------------------------------------------

SolutionPair solve_deterministic(const Modulus& phi, double epsilon, double a,
                                 const TimeGrid& grid, int paths) {
  if (a < 0.0) throw std::invalid_argument("solve_deterministic: a must be >= 0");
  if (paths < 1) throw std::invalid_argument("solve_deterministic: paths must be >= 1");
  BackwardOdeProblem p{phi, epsilon, a, 1.0, 1.0};
  const OdeSolution ode = solve_backward(p, grid.steps());

  SolutionPair sol;
  sol.Y = AdaptedProcess(grid, paths, 1, 1);
  sol.Z = AdaptedProcess(grid, paths, 1, 1);
  for (int j = 0; j <= grid.steps(); ++j)
    for (int q = 0; q < paths; ++q) sol.Y.at(j, q) = ode.value(j);
  sol.meta.y0 = {ode.u.front()};
  sol.meta.y0_stderr = {0.0};
  sol.meta.basis_size = 0;
  return sol;
}

// ---------------------------------------------------------------------------

ResidualStats residual_check(const SolutionPair& sol, const Driver& f,
                             const TerminalCondition& xi,
                             const PathEnsemble& ens) {
  const int d = sol.Y.rows, m = sol.Z.cols, M = sol.Y.paths, N = sol.Y.grid.steps();
  if (sol.Y.paths != ens.paths || !same_grid(sol.Y.grid, ens.grid))
    throw std::invalid_argument("residual_check: solution does not match ensemble");
  if (f.dim_y != d || f.dim_b != m || xi.dims != d)
    throw std::invalid_argument("residual_check: driver/terminal shape mismatch");
  const double dt = ens.grid.step;

  ResidualStats stats;
  stats.per_time_rms.assign(static_cast<std::size_t>(N) + 1, 0.0);

  std::vector<double> fval(static_cast<std::size_t>(N) * d);  // step driver terms
  std::vector<double> yv(static_cast<std::size_t>(d)), zv(static_cast<std::size_t>(d) * m),
      fout(static_cast<std::size_t>(d)), xiv(static_cast<std::size_t>(d)),
      acc(static_cast<std::size_t>(d));

  for (int p = 0; p < M; ++p) {
    xi.eval(ens, p, xiv);
    for (int l = 0; l < N; ++l) {
      for (int i = 0; i < d; ++i) yv[static_cast<std::size_t>(i)] = sol.Y.at(l, p, i);
      for (int i = 0; i < d; ++i)
        for (int k = 0; k < m; ++k) zv[static_cast<std::size_t>(i) * m + k] = sol.Z.at(l, p, i, k);
      f(ens.grid.time(l), yv, zv, fout);
      for (int i = 0; i < d; ++i) fval[static_cast<std::size_t>(l) * d + i] = fout[static_cast<std::size_t>(i)];
    }

    for (int j = 0; j <= N; ++j) {
      // martingale part accumulated forward from Y(t_j): for an exact
      // discrete pair this telescopes to xi bit for bit
      for (int i = 0; i < d; ++i) acc[static_cast<std::size_t>(i)] = sol.Y.at(j, p, i);
      for (int l = j; l < N; ++l)
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < m; ++k)
            acc[static_cast<std::size_t>(i)] =
                std::fma(sol.Z.at(l, p, i, k), ens.increment(l, p, k), acc[static_cast<std::size_t>(i)]);
      double sq = 0.0;
      for (int i = 0; i < d; ++i) {
        double sf = 0.0;
        for (int l = j; l < N; ++l) sf = std::fma(dt, fval[static_cast<std::size_t>(l) * d + i], sf);
        const double defect = acc[static_cast<std::size_t>(i)] - xiv[static_cast<std::size_t>(i)] - sf;
        sq = std::fma(defect, defect, sq);
      }
      stats.per_time_rms[static_cast<std::size_t>(j)] += sq;
      stats.max_abs = std::max(stats.max_abs, std::sqrt(sq));
    }
  }

  double total = 0.0;
  for (int j = 0; j <= N; ++j) {
    total += stats.per_time_rms[static_cast<std::size_t>(j)];
    stats.per_time_rms[static_cast<std::size_t>(j)] =
        std::sqrt(stats.per_time_rms[static_cast<std::size_t>(j)] / M);
  }
  stats.rms = std::sqrt(total / (static_cast<double>(M) * (N + 1)));
  return stats;
}

// ---------------------------------------------------------------------------

Step1Report step1_uniform_bound(const SolutionPair& a, const SolutionPair& b,
                                double eps_pair, double K) {
  if (a.Y.paths != b.Y.paths || !same_grid(a.Y.grid, b.Y.grid) ||
      a.Y.rows != b.Y.rows || a.Z.cols != b.Z.cols)
    throw std::invalid_argument("step1_uniform_bound: solutions on different ensembles");
  if (eps_pair < 0.0 || K < 0.0)
    throw std::invalid_argument("step1_uniform_bound: bad constants");

  const int d = a.Y.rows, M = a.Y.paths, N = a.Y.grid.steps();
  const double dt = a.Y.grid.step;

  Step1Report rep;
  rep.bound = (eps_pair * eps_pair + 4.0 * K * K) * std::exp(K * K + 2.0 * K + 2.0);

  for (int j = 0; j <= N; ++j)
    for (int p = 0; p < M; ++p) {
      double sq = 0.0;
      for (int i = 0; i < d; ++i) {
        const double diff = a.Y.at(j, p, i) - b.Y.at(j, p, i);
        sq = std::fma(diff, diff, sq);
      }
      rep.sup_y_sq = std::max(rep.sup_y_sq, sq);
    }

  double zacc = 0.0;
  for (int j = 0; j < N; ++j)
    zacc += kernels::sum_sq_diff(a.Z.slice(j), b.Z.slice(j));
  rep.mean_z_integral = zacc * dt / M;

  rep.holds = rep.sup_y_sq <= rep.bound && rep.mean_z_integral <= rep.bound;
  const double worst = std::max(rep.sup_y_sq, rep.mean_z_integral);
  rep.slack_factor = rep.bound / std::max(worst, 1e-300);
  return rep;
}

}  // namespace bsdelab
