#include "bsdelab/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsdelab {

namespace {

void require_scalar_nondecreasing(const AdaptedProcess& H) {
  if (H.rows != 1 || H.cols != 1)
    throw std::invalid_argument("decomposition: clock process must be scalar");
  for (int p = 0; p < H.paths; ++p)
    for (int j = 0; j < H.grid.steps(); ++j)
      if (H.at(j + 1, p) < H.at(j, p))
        throw std::invalid_argument("decomposition: clock process decreases");
}

}  // namespace

std::vector<double> DecompositionReport::boundary_times(int path) const {
  const auto& segs = segments.at(static_cast<std::size_t>(path));
  std::vector<double> out;
  if (segs.empty()) return out;
  out.push_back(grid.time(segs.front().left));
  for (const Segment& s : segs) out.push_back(grid.time(s.right));
  return out;
}

double default_flat_tol(const AdaptedProcess& H) {
  double slope = 0.0;
  const int N = H.grid.steps();
  const double T = H.grid.time(N) - H.grid.time(0);
  for (int p = 0; p < H.paths; ++p)
    slope = std::max(slope, (H.at(N, p) - H.at(0, p)) / T);
  return 1e-12 * slope;
}

LevelHit level_hitting(const AdaptedProcess& H, double r) {
  require_scalar_nondecreasing(H);
  if (r < 0.0) throw std::invalid_argument("level_hitting: level must be >= 0");
  LevelHit hit;
  hit.level = r;
  hit.time.horizon = H.grid.steps();
  hit.time.index.assign(static_cast<std::size_t>(H.paths), H.grid.steps());
  for (int p = 0; p < H.paths; ++p)
    for (int j = 0; j <= H.grid.steps(); ++j)
      if (H.at(j, p) >= r) {
        hit.time.index[static_cast<std::size_t>(p)] = j;
        break;
      }
  return hit;
}

DecompositionReport decompose(const AdaptedProcess& H, const StoppingTime& start,
                              double flat_tol,
                              const std::optional<StoppingTime>& end,
                              double base_level) {
  require_scalar_nondecreasing(H);
  if (flat_tol < 0.0) throw std::invalid_argument("decompose: flat_tol must be >= 0");
  if (static_cast<int>(start.index.size()) != H.paths ||
      start.horizon != H.grid.steps())
    throw std::invalid_argument("decompose: start time does not match process");
  if (end && (static_cast<int>(end->index.size()) != H.paths ||
              end->horizon != H.grid.steps()))
    throw std::invalid_argument("decompose: end time does not match process");

  DecompositionReport rep;
  rep.grid = H.grid;
  rep.paths = H.paths;
  rep.base_level = base_level;
  rep.flat_tol = flat_tol;
  rep.segments.resize(static_cast<std::size_t>(H.paths));
  rep.coverage_fraction.assign(static_cast<std::size_t>(H.paths), 1.0);

  const double dt = H.grid.step;
  for (int p = 0; p < H.paths; ++p) {
    const int lo = start.at(p);
    const int hi = end ? end->at(p) : H.grid.steps();
    if (hi < lo) throw std::invalid_argument("decompose: window inverted");
    auto& segs = rep.segments[static_cast<std::size_t>(p)];
    for (int j = lo; j < hi; ++j) {
      const double dH = H.at(j + 1, p) - H.at(j, p);
      const SegmentLabel label =
          dH <= flat_tol * dt ? SegmentLabel::flat : SegmentLabel::increasing;
      if (!segs.empty() && segs.back().label == label) {
        segs.back().right = j + 1;
        segs.back().h_increment += dH;
      } else {
        segs.push_back(Segment{j, j + 1, label, dH});
      }
    }
    // internal consistency: each emitted segment obeys its own label
    for (const Segment& s : segs) {
      for (int j = s.left; j < s.right; ++j) {
        const double dH = H.at(j + 1, p) - H.at(j, p);
        const bool flat_step = dH <= flat_tol * dt;
        if (flat_step != (s.label == SegmentLabel::flat))
          throw std::logic_error("decompose: segment label violated by sub-step");
      }
    }
  }
  return rep;
}

AdaptedProcess pathological_h(const PathEnsemble& ens, int depth) {
  if (depth < 1 || depth > 15)
    throw std::invalid_argument("pathological_h: depth must be in [1, 15]");
  const double finest = std::ldexp(1.0, -2 * depth);
  if (ens.grid.step > finest * (1.0 + 1e-12)) {
    const long min_steps = 1L << (2 * depth);
    throw std::invalid_argument(
        "pathological_h: grid too coarse for depth " + std::to_string(depth) +
        "; need at least " + std::to_string(min_steps) + " steps");
  }

  AdaptedProcess h(ens.grid, ens.paths, 1, 1);
  const double slack = 1e-12;
  for (int j = 0; j <= ens.grid.steps(); ++j) {
    const double t = ens.grid.time(j);
    bool in_band = false;
    for (int n = 1; n <= depth && !in_band; ++n) {
      const double lo = std::ldexp(1.0, -(2 * n - 1));
      const double hi = std::ldexp(1.0, -(2 * n - 2));
      in_band = t >= lo - slack && t <= hi + slack;
    }
    for (int p = 0; p < ens.paths; ++p) {
      if (!in_band) {
        h.at(j, p) = 0.0;
        continue;
      }
      double sq = 0.0;
      for (int k = 0; k < ens.dims; ++k) {
        const double b = ens.value(j, p, k);
        sq = std::fma(b, b, sq);
      }
      h.at(j, p) = std::sqrt(sq) + 1.0;
    }
  }
  return h;
}

CoverageReport coverage_check(const std::vector<DecompositionReport>& reports,
                              double tolerance) {
  if (reports.empty())
    throw std::invalid_argument("coverage_check: no reports");
  const TimeGrid& grid = reports.front().grid;
  const int paths = reports.front().paths;
  for (const auto& r : reports)
    if (r.paths != paths || !same_grid(r.grid, grid))
      throw std::invalid_argument("coverage_check: reports on different ensembles");

  CoverageReport out;
  out.tolerance = tolerance;
  out.residual.assign(static_cast<std::size_t>(paths), 0.0);
  std::vector<char> covered(static_cast<std::size_t>(grid.steps()));
  for (int p = 0; p < paths; ++p) {
    std::fill(covered.begin(), covered.end(), 0);
    for (const auto& r : reports)
      for (const Segment& s : r.segments[static_cast<std::size_t>(p)])
        for (int j = s.left; j < s.right; ++j) covered[static_cast<std::size_t>(j)] = 1;
    int miss = 0;
    for (char c : covered) miss += c == 0;
    out.residual[static_cast<std::size_t>(p)] = miss * grid.step;
    out.max_residual = std::max(out.max_residual, out.residual[static_cast<std::size_t>(p)]);
  }
  out.passed = out.max_residual <= tolerance;
  return out;
}

}  // namespace bsdelab
