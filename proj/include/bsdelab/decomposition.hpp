// Pathwise segmentation of a non-decreasing clock H(t) = \int_0^t |h_s| ds
// into alternating flat and strictly-increasing stretches.
//
// A grid interval is "flat" when its H-increment is at most flat_tol * step,
// i.e. the local |h| is below flat_tol; otherwise it is "increasing".
// Consecutive intervals with the same label merge, so each path ends up with
// an alternating list of segments whose boundaries are the stopping times of
// interest.  Exact equality of H across an interval never survives floating
// point off trivial cases, hence the tolerance.
//
// `pathological_h` builds a test integrand that switches on over a nested
// sequence of dyadic bands accumulating at t = 0, so segment boundaries pile
// up toward the origin; a grid that cannot resolve the innermost band is
// rejected with the minimal usable resolution in the message.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsdelab/stochastic.hpp"

namespace bsdelab {

enum class SegmentLabel { flat, increasing };

/// One labeled stretch [grid index left, grid index right] of a single path.
struct Segment {
  int left = 0;
  int right = 0;
  SegmentLabel label = SegmentLabel::flat;
  double h_increment = 0.0;  // H(right) - H(left)
};

/// First grid time at which a path's clock reaches a level, horizon if never.
struct LevelHit {
  double level = 0.0;
  StoppingTime time;
};

struct DecompositionReport {
  TimeGrid grid;
  int paths = 0;
  double base_level = 0.0;
  double flat_tol = 0.0;
  std::vector<std::vector<Segment>> segments;   // per path, alternating labels
  std::vector<double> coverage_fraction;        // labeled measure / scanned window

  /// Segment boundaries of one path as grid times (first = scan start).
  std::vector<double> boundary_times(int path) const;
};

struct CoverageReport {
  double tolerance = 0.0;
  std::vector<double> residual;  // per path, uncovered measure of [0, 1]
  double max_residual = 0.0;
  bool passed = false;
};

/// Scale-aware default tolerance: 1e-12 of the largest mean slope of H.
double default_flat_tol(const AdaptedProcess& H);

/// First grid index with H >= r per path ("never" maps to the right end).
/// H must be a scalar pathwise non-decreasing process.
LevelHit level_hitting(const AdaptedProcess& H, double r);

/// Alternating flat/increasing scan of each path from `start` to `end`
/// (horizon when absent).  Every interval in the window is labeled, so
/// coverage_fraction is 1 whenever the window is non-empty.
DecompositionReport decompose(const AdaptedProcess& H, const StoppingTime& start,
                              double flat_tol,
                              const std::optional<StoppingTime>& end = std::nullopt,
                              double base_level = 0.0);

/// Integrand |B_t| + 1 on the nested bands [2^-(2n-1), 2^-(2n-2)], n = 1..depth,
/// and 0 between them.  Throws when the grid step exceeds 2^-(2 depth).
AdaptedProcess pathological_h(const PathEnsemble& ens, int depth);

/// Union of labeled intervals across several reports on one ensemble; the
/// uncovered measure of [0, 1] per path must stay within `tolerance`.
CoverageReport coverage_check(const std::vector<DecompositionReport>& reports,
                              double tolerance);

}  // namespace bsdelab
