#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// ===========================================================================
// Stochastic core: uniform time grids on [0,1], Brownian path ensembles,
// adapted processes sampled on the grid, and grid-valued stopping times.
//
// Conventions used throughout the library:
//   * grids are uniform with points j/steps; t=0 and t=1 are exact;
//   * storage is time-major: at a fixed grid index the per-path values are
//     contiguous, which is what the reduction kernels want;
//   * time integrals use the left endpoint rule, stochastic sums pair the
//     left value with the forward increment;
//   * stopping times live on grid indices, with the right end (index =
//     steps) standing in for "never reached".
//
// Ensembles keep the *increments* as primary data and derive the values as
// running prefix sums in the same order.  Summing the stored increments
// left to right therefore reproduces the stored terminal value bit for
// bit, which several telescoping identities in the tests rely on.
// ===========================================================================

namespace bsdelab {

struct TimeGrid {
  std::vector<double> points;  // steps+1 entries, 0 = first, 1 = last
  double step = 0.0;

  int steps() const { return static_cast<int>(points.size()) - 1; }
  double time(int j) const { return points[static_cast<std::size_t>(j)]; }
};

/// Uniform grid with the given number of steps (>= 1).
TimeGrid make_grid(int steps);

/// Same step count and step size.
bool same_grid(const TimeGrid& a, const TimeGrid& b);

// ---------------------------------------------------------------------------

struct PathEnsemble {
  TimeGrid grid;
  int dims = 0;   // Brownian dimension m
  int paths = 0;  // ensemble size M
  std::uint64_t seed = 0;
  bool antithetic = false;

  /// Brownian values, time-major: value(j,p,k) = values[(j*paths+p)*dims+k].
  std::vector<double> values;
  /// Increments over [t_j, t_{j+1}), same layout with steps slices.
  std::vector<double> increments;

  double value(int j, int path, int k) const {
    return values[(static_cast<std::size_t>(j) * paths + path) * dims + k];
  }
  double increment(int j, int path, int k) const {
    return increments[(static_cast<std::size_t>(j) * paths + path) * dims + k];
  }
  std::span<const double> value_slice(int j) const {
    return {values.data() + static_cast<std::size_t>(j) * paths * dims,
            static_cast<std::size_t>(paths) * dims};
  }
};

/// Sample a Brownian ensemble: independent N(0, step) increments per path
/// and coordinate, from the documented pcg32 + inverse-CDF pipeline.  With
/// antithetic on (count must be even), path p >= count/2 mirrors the
/// increments of path p - count/2.
PathEnsemble sample_brownian(const TimeGrid& grid, int dims, int count,
                             std::uint64_t seed, bool antithetic = false);

/// Copy of the ensemble whose increments at indices >= cut_index are
/// replaced by draws from alt_seed; values before and at cut_index are
/// untouched.  Used by the adaptedness checks: anything adapted must be
/// unchanged at indices <= cut_index.
PathEnsemble resample_after(const PathEnsemble& ens, int cut_index,
                            std::uint64_t alt_seed);

// ---------------------------------------------------------------------------

/// Process sampled on the grid, one rows-by-cols value block per (time,
/// path).  Scalars are 1x1, y-type values d-by-1, z-type values d-by-m.
struct AdaptedProcess {
  TimeGrid grid;
  int paths = 0;
  int rows = 1;
  int cols = 1;
  std::vector<double> values;  // time-major, value block row-major

  AdaptedProcess() = default;
  AdaptedProcess(const TimeGrid& g, int npaths, int r, int c);

  int comps() const { return rows * cols; }
  std::size_t offset(int j, int path, int r = 0, int c = 0) const {
    return (static_cast<std::size_t>(j) * paths + path) * comps() +
           static_cast<std::size_t>(r) * cols + c;
  }
  double& at(int j, int path, int r = 0, int c = 0) {
    return values[offset(j, path, r, c)];
  }
  double at(int j, int path, int r = 0, int c = 0) const {
    return values[offset(j, path, r, c)];
  }
  std::span<double> slice(int j) {
    return {values.data() + static_cast<std::size_t>(j) * paths * comps(),
            static_cast<std::size_t>(paths) * comps()};
  }
  std::span<const double> slice(int j) const {
    return {values.data() + static_cast<std::size_t>(j) * paths * comps(),
            static_cast<std::size_t>(paths) * comps()};
  }
};

// ---------------------------------------------------------------------------

/// Grid-valued stopping time; index[p] == grid steps means "not before the
/// horizon" (the wedge with the right endpoint).
struct StoppingTime {
  std::vector<int> index;
  int horizon = 0;

  int at(int path) const { return index[static_cast<std::size_t>(path)]; }
  bool right_end(int path) const { return at(path) == horizon; }
};

StoppingTime constant_stopping_time(const TimeGrid& grid, int j, int paths);

// ---------------------------------------------------------------------------

/// Running clock H(t) = integral of |h| ds per path (left rule): scalar in,
/// scalar out, H(0) = 0, nondecreasing.
AdaptedProcess integrate_abs(const AdaptedProcess& h);

/// Left-point stochastic sums  sum_{j in [from,to)} Z(t_j) * dB_j  per
/// path; integrand is d-by-m, the result d entries per path.  Windows with
/// from > to are rejected.
std::vector<double> ito_sum(const AdaptedProcess& integrand,
                            const PathEnsemble& ens, const StoppingTime& from,
                            const StoppingTime& to);

// ---------------------------------------------------------------------------

/// Debug snapshot, path-major and time-minor: one CSV row per path with the
/// Brownian values at every grid point (coordinates flattened per time).
void write_ensemble_csv(const PathEnsemble& ens, const std::string& path);

}  // namespace bsdelab
