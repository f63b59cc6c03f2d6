#include "bsdelab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bsdelab/kernels.hpp"

namespace bsdelab {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_same_shape(const SolutionPair& a, const SolutionPair& b) {
  if (a.Y.paths != b.Y.paths || !same_grid(a.Y.grid, b.Y.grid) ||
      a.Y.rows != b.Y.rows || a.Z.cols != b.Z.cols)
    throw std::invalid_argument("girsanov: solutions on different ensembles");
}

void require_scalar_match(const AdaptedProcess& x, const AdaptedProcess& ref,
                          const char* what) {
  if (x.rows != 1 || x.cols != 1)
    throw std::invalid_argument(std::string("girsanov: ") + what + " must be scalar");
  if (x.paths != ref.paths || !same_grid(x.grid, ref.grid))
    throw std::invalid_argument(std::string("girsanov: ") + what + " shape mismatch");
}

}  // namespace

SignedCombination signed_z_combination(const SolutionPair& a, const SolutionPair& b) {
  require_same_shape(a, b);
  const int d = a.Y.rows, m = a.Z.cols, M = a.Y.paths, N = a.Y.grid.steps();

  SignedCombination out{AdaptedProcess(a.Y.grid, M, 1, m),
                        AdaptedProcess(a.Y.grid, M, 1, 1),
                        AdaptedProcess(a.Y.grid, M, 1, 1)};
  for (int j = 0; j <= N; ++j)
    for (int p = 0; p < M; ++p) {
      double sq = 0.0;
      for (int k = 0; k < m; ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) {
          const double sign = sgn(a.Y.at(j, p, i) - b.Y.at(j, p, i));
          s = std::fma(sign, a.Z.at(j, p, i, k) - b.Z.at(j, p, i, k), s);
        }
        out.z_mn.at(j, p, 0, k) = s;
        sq = std::fma(s, s, sq);
      }
      out.magnitude.at(j, p) = std::sqrt(sq);
    }
  out.clock = integrate_abs(out.magnitude);
  return out;
}

AdaptedProcess z_norm_diff(const SolutionPair& a, const SolutionPair& b) {
  require_same_shape(a, b);
  const int M = a.Y.paths, N = a.Y.grid.steps();
  AdaptedProcess out(a.Y.grid, M, 1, 1);
  for (int j = 0; j <= N; ++j)
    for (int p = 0; p < M; ++p) {
      double sq = 0.0;
      for (int i = 0; i < a.Y.rows; ++i)
        for (int k = 0; k < a.Z.cols; ++k) {
          const double diff = a.Z.at(j, p, i, k) - b.Z.at(j, p, i, k);
          sq = std::fma(diff, diff, sq);
        }
      out.at(j, p) = std::sqrt(sq);
    }
  return out;
}

GirsanovWindow novikov_window(const AdaptedProcess& magnitude,
                              const AdaptedProcess& cap_norm,
                              const StoppingTime& interval_left,
                              const StoppingTime& interval_right, double eps0) {
  require_scalar_match(cap_norm, magnitude, "cap_norm");
  if (magnitude.rows != 1 || magnitude.cols != 1)
    throw std::invalid_argument("novikov_window: magnitude must be scalar");
  if (!(eps0 > 0.0 && eps0 < 1.0))
    throw std::invalid_argument("novikov_window: eps0 must lie in (0,1)");
  const int M = magnitude.paths, N = magnitude.grid.steps();
  if (static_cast<int>(interval_left.index.size()) != M ||
      static_cast<int>(interval_right.index.size()) != M ||
      interval_left.horizon != N || interval_right.horizon != N)
    throw std::invalid_argument("novikov_window: interval does not match process");

  GirsanovWindow w;
  w.eps0 = eps0;
  w.horizon = N;
  w.left.resize(static_cast<std::size_t>(M));
  w.right.resize(static_cast<std::size_t>(M));
  const double cap = 1.0 / eps0;
  int active = 0;
  for (int p = 0; p < M; ++p) {
    const int lo = interval_left.at(p), hi = interval_right.at(p);
    if (hi < lo) throw std::invalid_argument("novikov_window: interval inverted");
    int entry = hi;
    for (int j = lo; j < hi; ++j)
      if (magnitude.at(j, p) >= eps0) {
        entry = j;
        break;
      }
    int exit = hi;
    for (int j = entry; j < hi; ++j)
      if (magnitude.at(j, p) < eps0 || cap_norm.at(j, p) >= cap) {
        exit = j;
        break;
      }
    if (exit < entry) entry = exit;
    w.left[static_cast<std::size_t>(p)] = std::min(entry, exit);
    w.right[static_cast<std::size_t>(p)] = exit;
    if (w.left[static_cast<std::size_t>(p)] < w.right[static_cast<std::size_t>(p)]) ++active;
    // sandwich invariant over the emitted window
    for (int j = w.left[static_cast<std::size_t>(p)]; j < w.right[static_cast<std::size_t>(p)]; ++j)
      if (magnitude.at(j, p) < eps0 || cap_norm.at(j, p) >= cap)
        throw std::logic_error("novikov_window: sandwich violated inside window");
  }
  w.active_fraction = static_cast<double>(active) / M;
  return w;
}

AdaptedProcess drift_eta(const AdaptedProcess& psi, const SignedCombination& comb,
                         const GirsanovWindow& window, double multiplier) {
  require_scalar_match(psi, comb.magnitude, "psi");
  if (multiplier <= 0.0)
    throw std::invalid_argument("drift_eta: multiplier must be positive");
  const int M = comb.z_mn.paths, N = comb.z_mn.grid.steps(), m = comb.z_mn.cols;
  if (static_cast<int>(window.left.size()) != M || window.horizon != N)
    throw std::invalid_argument("drift_eta: window does not match process");

  AdaptedProcess eta(comb.z_mn.grid, M, 1, m);
  for (int p = 0; p < M; ++p)
    for (int j = 0; j <= N; ++j) {
      if (!window.active(p, j)) continue;  // slices start zero-filled
      const double mag = comb.magnitude.at(j, p);
      if (mag < window.eps0)
        throw std::logic_error("drift_eta: |z_mn| below eps0 inside window");
      const double scale = multiplier * psi.at(j, p) / (mag * mag);
      for (int k = 0; k < m; ++k)
        eta.at(j, p, 0, k) = scale * comb.z_mn.at(j, p, 0, k);
      const double norm = std::abs(scale) * mag;  // |eta| at this point
      if (norm > multiplier * psi.at(j, p) / window.eps0 * (1.0 + 1e-12))
        throw std::logic_error("drift_eta: magnitude bound violated");
    }
  return eta;
}

DensityReport density(const AdaptedProcess& eta, const PathEnsemble& ens,
                      const GirsanovWindow& window) {
  if (eta.rows != 1)
    throw std::invalid_argument("density: eta must be a 1 x m process");
  if (eta.cols != ens.dims || eta.paths != ens.paths || !same_grid(eta.grid, ens.grid))
    throw std::invalid_argument("density: eta does not match ensemble");
  const int M = ens.paths, N = ens.grid.steps(), m = ens.dims;
  if (static_cast<int>(window.left.size()) != M || window.horizon != N)
    throw std::invalid_argument("density: window does not match ensemble");
  const double dt = ens.grid.step;

  DensityReport rep;
  rep.log_density.assign(static_cast<std::size_t>(M), 0.0);
  rep.density.assign(static_cast<std::size_t>(M), 0.0);
  std::vector<double> corrected(static_cast<std::size_t>(m) * M, 0.0);

  for (int p = 0; p < M; ++p) {
    double logd = 0.0;
    for (int j = window.left[static_cast<std::size_t>(p)];
         j < window.right[static_cast<std::size_t>(p)]; ++j) {
      double esq = 0.0;
      for (int k = 0; k < m; ++k) {
        const double e = eta.at(j, p, 0, k);
        logd = std::fma(e, ens.increment(j, p, k), logd);
        esq = std::fma(e, e, esq);
        corrected[static_cast<std::size_t>(k) * M + p] +=
            ens.increment(j, p, k) - e * dt;
      }
      logd -= 0.5 * esq * dt;
    }
    if (!std::isfinite(logd))
      throw std::runtime_error("density: non-finite log density");
    rep.log_density[static_cast<std::size_t>(p)] = logd;
    rep.density[static_cast<std::size_t>(p)] = std::exp(logd);
  }

  const double n = static_cast<double>(M);
  rep.mean = kernels::sum(rep.density) / n;
  double var = 0.0;
  for (double v : rep.density) {
    const double dd = v - rep.mean;
    var = std::fma(dd, dd, var);
  }
  rep.stderr_of_mean = M > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;

  rep.corrected_mean.resize(static_cast<std::size_t>(m));
  rep.corrected_stderr.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    std::span<const double> col{corrected.data() + static_cast<std::size_t>(k) * M,
                                static_cast<std::size_t>(M)};
    const double wm = kernels::dot(rep.density, col) / n;
    double wv = 0.0;
    for (int p = 0; p < M; ++p) {
      const double term = rep.density[static_cast<std::size_t>(p)] * col[static_cast<std::size_t>(p)] - wm;
      wv = std::fma(term, term, wv);
    }
    rep.corrected_mean[static_cast<std::size_t>(k)] = wm;
    rep.corrected_stderr[static_cast<std::size_t>(k)] =
        M > 1 ? std::sqrt(wv / (n - 1.0) / n) : 0.0;
  }
  return rep;
}

DominationReport domination_check(const SolutionPair& a, const SolutionPair& b,
                                  const OdeSolution& u, const GirsanovWindow& window,
                                  double slack, const std::vector<double>& weights) {
  require_same_shape(a, b);
  const int d = a.Y.rows, M = a.Y.paths, N = a.Y.grid.steps();
  if (static_cast<int>(window.left.size()) != M || window.horizon != N)
    throw std::invalid_argument("domination_check: window does not match solutions");
  if (static_cast<int>(u.u.size()) != N + 1 ||
      std::abs(u.t.back() - a.Y.grid.time(N)) > 1e-12 ||
      std::abs(u.t.front() - a.Y.grid.time(0)) > 1e-12)
    throw std::invalid_argument("domination_check: dominator solved on a different grid");
  if (slack < 0.0) throw std::invalid_argument("domination_check: slack must be >= 0");
  std::vector<double> w = weights;
  if (w.empty()) w.assign(static_cast<std::size_t>(d), 1.0);
  if (static_cast<int>(w.size()) != d)
    throw std::invalid_argument("domination_check: weight vector has wrong length");

  DominationReport rep;
  rep.slack = slack;
  rep.worst_margin = -std::numeric_limits<double>::infinity();
  for (int p = 0; p < M; ++p) {
    const int lo = window.left[static_cast<std::size_t>(p)];
    const int hi = window.right[static_cast<std::size_t>(p)];
    if (lo >= hi) continue;
    for (int j = lo; j <= hi; ++j) {  // inclusive right end
      double lhs = 0.0;
      for (int i = 0; i < d; ++i)
        lhs = std::fma(w[static_cast<std::size_t>(i)],
                       std::abs(a.Y.at(j, p, i) - b.Y.at(j, p, i)), lhs);
      const double bound = u.value(j) + slack;
      ++rep.checked_points;
      rep.worst_margin = std::max(rep.worst_margin, lhs - bound);
      if (lhs > bound)
        rep.violations.push_back(DominationViolation{p, j, lhs, bound});
    }
  }
  if (rep.checked_points == 0) rep.worst_margin = 0.0;
  rep.passed = rep.violations.empty();
  return rep;
}

}  // namespace bsdelab
