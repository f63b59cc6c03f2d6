#include "bsdelab/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bsdelab/rng.hpp"

namespace bsdelab {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s = std::fma(x, x, s);
  return std::sqrt(s);
}

double norm2_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s = std::fma(d, d, s);
  }
  return std::sqrt(s);
}

void fill_uniform(Pcg32& gen, std::span<double> v, double range) {
  for (double& x : v) x = range * (2.0 * gen.next_uniform() - 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------

ModuliReport verify_moduli(const Driver& f, int probes, std::uint64_t seed,
                           double range) {
  if (probes < 1) throw std::invalid_argument("verify_moduli: probes must be >= 1");
  const int d = f.dim_y, dm = f.dim_y * f.dim_b;
  std::vector<double> y1(d), y2(d), z1(dm), z2(dm), out1(d), out2(d);
  ModuliReport rep;
  Pcg32 gen(splitmix64(seed), 7);
  constexpr double kTinyDenom = 1e-14;
  constexpr double kSlack = 1e-9;

  for (int i = 0; i < probes; ++i) {
    const double t = gen.next_uniform();
    fill_uniform(gen, y1, range);
    fill_uniform(gen, y2, range);
    fill_uniform(gen, z1, range);
    fill_uniform(gen, z2, range);

    // y side, z held fixed
    f(t, y1, z1, out1);
    f(t, y2, z1, out2);
    double numer = norm2_diff(out1, out2);
    double denom = f.mod_y(norm2_diff(y1, y2));
    if (denom > kTinyDenom) {
      const double ratio = numer / denom;
      rep.worst_ratio_y = std::max(rep.worst_ratio_y, ratio);
      if (ratio > 1.0 + kSlack) ++rep.violations_y;
    } else if (numer > 1e-12) {
      rep.worst_ratio_y = std::numeric_limits<double>::infinity();
      ++rep.violations_y;
    }

    // z side, y held fixed
    f(t, y1, z1, out1);
    f(t, y1, z2, out2);
    numer = norm2_diff(out1, out2);
    denom = f.mod_z(norm2_diff(z1, z2));
    if (denom > kTinyDenom) {
      const double ratio = numer / denom;
      rep.worst_ratio_z = std::max(rep.worst_ratio_z, ratio);
      if (ratio > 1.0 + kSlack) ++rep.violations_z;
    } else if (numer > 1e-12) {
      rep.worst_ratio_z = std::numeric_limits<double>::infinity();
      ++rep.violations_z;
    }
  }
  return rep;
}

double driver_distance(const Driver& a, const Driver& b, int probes,
                       std::uint64_t seed, double range) {
  if (a.dim_y != b.dim_y || a.dim_b != b.dim_b)
    throw std::invalid_argument("driver_distance: shape mismatch");
  const int d = a.dim_y, dm = a.dim_y * a.dim_b;
  std::vector<double> y(d), z(dm), oa(d), ob(d);
  Pcg32 gen(splitmix64(seed), 11);
  double worst = 0.0;
  for (int i = 0; i < probes; ++i) {
    const double t = gen.next_uniform();
    fill_uniform(gen, y, range);
    fill_uniform(gen, z, range);
    a(t, y, z, oa);
    b(t, y, z, ob);
    worst = std::max(worst, norm2_diff(oa, ob));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Mollification
// ---------------------------------------------------------------------------

namespace {

double bump(double s) {  // C-infinity, supported on |s| < 1
  const double t = 1.0 - s * s;
  return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
}

}  // namespace

Driver mollify(const Driver& f, const MollifierKernel& kernel, int n) {
  if (n < 1) throw std::invalid_argument("mollify: level n must be >= 1");
  if (kernel.nodes_per_axis < 1 || kernel.support_radius <= 0.0)
    throw std::invalid_argument("mollify: bad kernel parameters");

  const int d = f.dim_y, m = f.dim_b;
  const int dy = f.depends_y ? d : 0;
  const int dz = f.depends_z ? d * m : 0;
  const int D = dy + dz;

  Driver out = f;
  out.name = f.name + "_m" + std::to_string(n);
  out.mollify_level = n;

  if (D == 0) {  // constant in (y,z): convolution is the identity
    out.closeness = 0.0;
    out.lipschitz = 0.0;
    return out;
  }

  const double R = kernel.support_radius / n;
  const int q = kernel.nodes_per_axis;
  double total_nodes = 1.0;
  for (int axis = 0; axis < D; ++axis) total_nodes *= q;
  if (total_nodes > 2e6)
    throw std::invalid_argument("mollify: quadrature rule too large (" +
                                std::to_string(static_cast<long long>(total_nodes)) +
                                " nodes)");

  // Tensor midpoint nodes inside the radius-R ball of the dependent
  // arguments; weights renormalized to unit discrete mass.
  std::vector<double> offsets;   // kept nodes, D coords each
  std::vector<double> weights;   // bump values, normalized below
  std::vector<double> span_s;    // |u|/R per kept node (for the grad bound)
  std::vector<int> idx(static_cast<std::size_t>(D), 0);
  std::vector<double> u(static_cast<std::size_t>(D));
  while (true) {
    double ss = 0.0;
    for (int c = 0; c < D; ++c) {
      u[static_cast<std::size_t>(c)] =
          -R + (idx[static_cast<std::size_t>(c)] + 0.5) * (2.0 * R / q);
      ss += u[static_cast<std::size_t>(c)] * u[static_cast<std::size_t>(c)];
    }
    const double s = std::sqrt(ss) / R;
    const double w = bump(s);
    if (w > 0.0) {
      offsets.insert(offsets.end(), u.begin(), u.end());
      weights.push_back(w);
      span_s.push_back(s);
    }
    int axis = 0;
    while (axis < D && ++idx[static_cast<std::size_t>(axis)] == q) {
      idx[static_cast<std::size_t>(axis)] = 0;
      ++axis;
    }
    if (axis == D) break;
  }
  double mass = 0.0;
  for (double w : weights) mass += w;
  for (double& w : weights) w /= mass;

  // Analytic Lipschitz bound: |grad f_n| <= (Phi(R)+Psi(R)) * int |grad
  // psi_n|, discretized on the same rule.  |grad psi_n|/psi_n = 2s/(1-s^2)^2
  // / R for the bump profile.
  const double osc = (f.depends_y ? f.mod_y(R) : 0.0) +
                     (f.depends_z ? f.mod_z(R) : 0.0);
  double grad_integral = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double s = span_s[i], t = 1.0 - s * s;
    grad_integral += weights[i] * (2.0 * s / (t * t)) / R;
  }
  out.closeness = osc;
  out.lipschitz = osc * grad_integral;

  auto base = f.eval;
  const bool dep_y = f.depends_y, dep_z = f.depends_z;
  out.eval = [base, offsets, weights, d, m, dy, dep_y, dep_z,
              ybuf = std::vector<double>(static_cast<std::size_t>(d)),
              zbuf = std::vector<double>(static_cast<std::size_t>(d) * m),
              tmp = std::vector<double>(static_cast<std::size_t>(d))](
                 double t, std::span<const double> y, std::span<const double> z,
                 std::span<double> outv) mutable {
    for (double& v : outv) v = 0.0;
    const int D = dy + (dep_z ? d * m : 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double* node = offsets.data() + i * static_cast<std::size_t>(D);
      std::span<const double> ya = y;
      std::span<const double> za = z;
      if (dep_y) {
        for (int c = 0; c < d; ++c) ybuf[static_cast<std::size_t>(c)] = y[static_cast<std::size_t>(c)] - node[c];
        ya = ybuf;
      }
      if (dep_z) {
        for (int c = 0; c < d * m; ++c) zbuf[static_cast<std::size_t>(c)] = z[static_cast<std::size_t>(c)] - node[dy + c];
        za = zbuf;
      }
      base(t, ya, za, tmp);
      for (int r = 0; r < d; ++r)
        outv[static_cast<std::size_t>(r)] =
            std::fma(weights[i], tmp[static_cast<std::size_t>(r)], outv[static_cast<std::size_t>(r)]);
    }
  };
  return out;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

double param(const std::map<std::string, double>& p, const std::string& key,
             double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

}  // namespace

Driver builtin_driver(const std::string& name,
                      const std::map<std::string, double>& params) {
  const int d = static_cast<int>(param(params, "d", 1.0));
  const int m = static_cast<int>(param(params, "m", 1.0));
  if (d < 1 || m < 1) throw std::invalid_argument("builtin_driver: bad dims");
  const double a = param(params, "a", 0.5);
  const double b = param(params, "b", 0.3);
  const double c = param(params, "c", 1.0);

  Driver f;
  f.name = name;
  f.dim_y = d;
  f.dim_b = m;

  if (name == "zero") {
    f.depends_y = f.depends_z = false;
    f.eval = [](double, std::span<const double>, std::span<const double>,
                std::span<double> out) {
      for (double& v : out) v = 0.0;
    };
    f.mod_y = zero_modulus();
    f.mod_z = zero_modulus();
    f.lipschitz = 0.0;
    return f;
  }
  if (name == "linear") {
    f.depends_y = a != 0.0;
    f.depends_z = b != 0.0;
    f.eval = [a, b, d, m](double, std::span<const double> y,
                          std::span<const double> z, std::span<double> out) {
      for (int i = 0; i < d; ++i) {
        double row = 0.0;
        for (int k = 0; k < m; ++k) row += z[static_cast<std::size_t>(i) * m + k];
        out[static_cast<std::size_t>(i)] = a * y[static_cast<std::size_t>(i)] + b * row;
      }
    };
    f.mod_y = a != 0.0 ? linear_modulus(a) : zero_modulus();
    f.mod_z = b != 0.0 ? linear_modulus(b * std::sqrt(double(m))) : zero_modulus();
    f.lipschitz = std::max(a, b * std::sqrt(double(m)));
    return f;
  }
  if (name == "sine") {
    f.eval = [c, d, m](double, std::span<const double> y,
                       std::span<const double> z, std::span<double> out) {
      for (int i = 0; i < d; ++i) {
        double row = 0.0;
        for (int k = 0; k < m; ++k) row += z[static_cast<std::size_t>(i) * m + k];
        out[static_cast<std::size_t>(i)] = c * std::sin(y[static_cast<std::size_t>(i)] + row);
      }
    };
    f.mod_y = linear_modulus(c);
    f.mod_z = linear_modulus(c * std::sqrt(double(m)));
    f.lipschitz = c * std::sqrt(1.0 + m);
    return f;
  }
  if (name == "abs") {
    f.depends_z = false;
    f.eval = [c, d](double, std::span<const double> y, std::span<const double>,
                    std::span<double> out) {
      for (int i = 0; i < d; ++i)
        out[static_cast<std::size_t>(i)] = c * std::fabs(y[static_cast<std::size_t>(i)]);
    };
    f.mod_y = linear_modulus(c);
    f.mod_z = zero_modulus();
    f.lipschitz = c;
    return f;
  }
  if (name == "osgood" || name == "sqrt") {
    // Phi(|y|) times the unit diagonal direction; merely uniformly
    // continuous (slope blows up at the origin), so no Lipschitz constant
    // is declared.
    const Modulus phi = name == "osgood" ? osgood_modulus() : sqrt_modulus();
    f.depends_z = false;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(d));
    f.eval = [phi, d, inv_sqrt_d](double, std::span<const double> y,
                                  std::span<const double>, std::span<double> out) {
      const double v = phi(norm2(y)) * inv_sqrt_d;
      for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = v;
    };
    f.mod_y = phi;
    f.mod_z = zero_modulus();
    f.lipschitz = -1.0;
    return f;
  }
  throw std::invalid_argument("builtin_driver: unknown name '" + name + "'");
}

TerminalCondition terminal_constant(int dims, double value) {
  TerminalCondition xi;
  xi.name = "constant";
  xi.dims = dims;
  xi.eval = [value](const PathEnsemble&, int, std::span<double> out) {
    for (double& v : out) v = value;
  };
  return xi;
}

TerminalCondition terminal_brownian(int dims) {
  TerminalCondition xi;
  xi.name = "brownian";
  xi.dims = dims;
  xi.eval = [dims](const PathEnsemble& ens, int p, std::span<double> out) {
    const int last = ens.grid.steps();
    for (int i = 0; i < dims; ++i)
      out[static_cast<std::size_t>(i)] = ens.value(last, p, i % ens.dims);
  };
  return xi;
}

TerminalCondition terminal_sin(int dims) {
  TerminalCondition xi;
  xi.name = "sin";
  xi.dims = dims;
  xi.eval = [dims](const PathEnsemble& ens, int p, std::span<double> out) {
    const int last = ens.grid.steps();
    for (int i = 0; i < dims; ++i)
      out[static_cast<std::size_t>(i)] =
          std::sin(ens.value(last, p, i % ens.dims) + 0.5 * i);
  };
  return xi;
}

TerminalCondition builtin_terminal(const std::string& name, int dims,
                                   double value) {
  if (dims < 1) throw std::invalid_argument("builtin_terminal: bad dims");
  if (name == "constant") return terminal_constant(dims, value);
  if (name == "brownian") return terminal_brownian(dims);
  if (name == "sin") return terminal_sin(dims);
  throw std::invalid_argument("builtin_terminal: unknown name '" + name + "'");
}

}  // namespace bsdelab
