#include "bsdelab/stochastic.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "bsdelab/rng.hpp"

namespace bsdelab {

TimeGrid make_grid(int steps) {
  if (steps < 1) throw std::invalid_argument("make_grid: steps must be >= 1");
  TimeGrid g;
  g.points.resize(static_cast<std::size_t>(steps) + 1);
  for (int j = 0; j <= steps; ++j)
    g.points[static_cast<std::size_t>(j)] = static_cast<double>(j) / steps;
  g.step = 1.0 / steps;
  return g;
}

bool same_grid(const TimeGrid& a, const TimeGrid& b) {
  return a.steps() == b.steps() && a.step == b.step;
}

// ---------------------------------------------------------------------------

namespace {

// One pcg32 stream per path: the path index is folded into the state seed
// and doubles as the stream selector, so streams differ in both.
Pcg32 path_engine(std::uint64_t seed, int path) {
  const auto p = static_cast<std::uint64_t>(path);
  return Pcg32(splitmix64(seed ^ splitmix64(p)), p);
}

}  // namespace

PathEnsemble sample_brownian(const TimeGrid& grid, int dims, int count,
                             std::uint64_t seed, bool antithetic) {
  if (dims < 1) throw std::invalid_argument("sample_brownian: dims must be >= 1");
  if (count < 1) throw std::invalid_argument("sample_brownian: count must be >= 1");
  if (antithetic && count % 2 != 0)
    throw std::invalid_argument("sample_brownian: antithetic needs an even count");

  PathEnsemble ens;
  ens.grid = grid;
  ens.dims = dims;
  ens.paths = count;
  ens.seed = seed;
  ens.antithetic = antithetic;

  const int steps = grid.steps();
  const std::size_t slice = static_cast<std::size_t>(count) * dims;
  ens.increments.assign(static_cast<std::size_t>(steps) * slice, 0.0);
  ens.values.assign(static_cast<std::size_t>(steps + 1) * slice, 0.0);

  const int direct = antithetic ? count / 2 : count;
  const double sqrt_step = std::sqrt(grid.step);
  for (int p = 0; p < direct; ++p) {
    Pcg32 gen = path_engine(seed, p);
    for (int j = 0; j < steps; ++j)
      for (int k = 0; k < dims; ++k)
        ens.increments[(static_cast<std::size_t>(j) * count + p) * dims + k] =
            sqrt_step * gen.next_normal();
  }
  for (int p = direct; p < count; ++p)  // mirrored half
    for (int j = 0; j < steps; ++j)
      for (int k = 0; k < dims; ++k)
        ens.increments[(static_cast<std::size_t>(j) * count + p) * dims + k] =
            -ens.increments[(static_cast<std::size_t>(j) * count + p - direct) * dims + k];

  for (int j = 0; j < steps; ++j) {
    const std::size_t at = static_cast<std::size_t>(j) * slice;
    for (std::size_t i = 0; i < slice; ++i)
      ens.values[at + slice + i] = ens.values[at + i] + ens.increments[at + i];
  }
  return ens;
}

PathEnsemble resample_after(const PathEnsemble& ens, int cut_index,
                            std::uint64_t alt_seed) {
  const int steps = ens.grid.steps();
  if (cut_index < 0 || cut_index > steps)
    throw std::invalid_argument("resample_after: cut index outside the grid");

  PathEnsemble out = ens;
  const std::size_t slice = static_cast<std::size_t>(ens.paths) * ens.dims;
  const double sqrt_step = std::sqrt(ens.grid.step);
  for (int p = 0; p < ens.paths; ++p) {
    Pcg32 gen = path_engine(alt_seed, p);
    for (int j = cut_index; j < steps; ++j)
      for (int k = 0; k < ens.dims; ++k)
        out.increments[(static_cast<std::size_t>(j) * ens.paths + p) * ens.dims + k] =
            sqrt_step * gen.next_normal();
  }
  for (int j = cut_index; j < steps; ++j) {
    const std::size_t at = static_cast<std::size_t>(j) * slice;
    for (std::size_t i = 0; i < slice; ++i)
      out.values[at + slice + i] = out.values[at + i] + out.increments[at + i];
  }
  return out;
}

// ---------------------------------------------------------------------------

AdaptedProcess::AdaptedProcess(const TimeGrid& g, int npaths, int r, int c)
    : grid(g), paths(npaths), rows(r), cols(c) {
  if (npaths < 1 || r < 1 || c < 1)
    throw std::invalid_argument("AdaptedProcess: bad shape");
  values.assign(static_cast<std::size_t>(g.steps() + 1) * npaths * r * c, 0.0);
}

StoppingTime constant_stopping_time(const TimeGrid& grid, int j, int paths) {
  if (j < 0 || j > grid.steps())
    throw std::invalid_argument("constant_stopping_time: index outside the grid");
  StoppingTime tau;
  tau.horizon = grid.steps();
  tau.index.assign(static_cast<std::size_t>(paths), j);
  return tau;
}

AdaptedProcess integrate_abs(const AdaptedProcess& h) {
  if (h.rows != 1 || h.cols != 1)
    throw std::invalid_argument("integrate_abs: integrand must be scalar");
  AdaptedProcess out(h.grid, h.paths, 1, 1);
  const double step = h.grid.step;
  for (int j = 0; j < h.grid.steps(); ++j)
    for (int p = 0; p < h.paths; ++p)
      out.at(j + 1, p) = out.at(j, p) + std::fabs(h.at(j, p)) * step;
  return out;
}

std::vector<double> ito_sum(const AdaptedProcess& integrand,
                            const PathEnsemble& ens, const StoppingTime& from,
                            const StoppingTime& to) {
  if (!same_grid(integrand.grid, ens.grid))
    throw std::invalid_argument("ito_sum: integrand and ensemble grids differ");
  if (integrand.paths != ens.paths)
    throw std::invalid_argument("ito_sum: path counts differ");
  if (integrand.cols != ens.dims)
    throw std::invalid_argument("ito_sum: integrand columns must match Brownian dims");
  if (static_cast<int>(from.index.size()) != ens.paths ||
      static_cast<int>(to.index.size()) != ens.paths)
    throw std::invalid_argument("ito_sum: stopping time sizes differ from ensemble");

  const int d = integrand.rows;
  std::vector<double> out(static_cast<std::size_t>(ens.paths) * d, 0.0);
  for (int p = 0; p < ens.paths; ++p) {
    const int a = from.at(p), b = to.at(p);
    if (a > b) throw std::invalid_argument("ito_sum: window inversion (from > to)");
    for (int j = a; j < b; ++j)
      for (int r = 0; r < d; ++r) {
        double acc = out[static_cast<std::size_t>(p) * d + r];
        for (int k = 0; k < ens.dims; ++k)
          acc = std::fma(integrand.at(j, p, r, k), ens.increment(j, p, k), acc);
        out[static_cast<std::size_t>(p) * d + r] = acc;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_ensemble_csv(const PathEnsemble& ens, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("write_ensemble_csv: cannot open " + path);
  std::fprintf(f, "path");
  for (int j = 0; j <= ens.grid.steps(); ++j)
    for (int k = 0; k < ens.dims; ++k) std::fprintf(f, ",t%d_d%d", j, k);
  std::fprintf(f, "\n");
  for (int p = 0; p < ens.paths; ++p) {
    std::fprintf(f, "%d", p);
    for (int j = 0; j <= ens.grid.steps(); ++j)
      for (int k = 0; k < ens.dims; ++k)
        std::fprintf(f, ",%.17g", ens.value(j, p, k));
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

}  // namespace bsdelab
