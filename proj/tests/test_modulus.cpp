#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bsdelab/modulus.hpp"

using namespace bsdelab;

TEST_CASE("catalog moduli satisfy the axioms and their closed forms") {
  const Modulus id = identity_modulus();
  CHECK(id(0.0) == 0.0);
  CHECK(id(0.7) == 0.7);
  CHECK(id.growth_K >= 1.0);

  const Modulus lin = linear_modulus(2.5);
  CHECK(lin(2.0) == 5.0);

  const Modulus sq = sqrt_modulus();
  CHECK(sq(0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sq(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // linear continuation above 1 with matched slope 1/2
  CHECK(sq(3.0) == doctest::Approx(2.0).epsilon(1e-14));

  const Modulus os = osgood_modulus();
  CHECK(os(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double x = 0.01;
  CHECK(os(x) == doctest::Approx(x * (1.0 - 0.5 * std::log(x))).epsilon(1e-14));
  CHECK(os(3.0) == doctest::Approx(2.0).epsilon(1e-14));  // slope 1/2 above 1
  CHECK(os.osgood_declared);
  CHECK(!sq.osgood_declared);

  const Modulus z = zero_modulus();
  CHECK(z(5.0) == 0.0);
}

TEST_CASE("validate_modulus rejects broken declarations") {
  Modulus bad;
  bad.name = "decreasing";
  bad.growth_K = 1.0;
  bad.fn = [](double x) { return x < 0.5 ? x : 0.25; };
  CHECK_THROWS_AS(validate_modulus(bad, ProbeGrid{0.0, 2.0, 101}),
                  std::invalid_argument);

  Modulus off;
  off.name = "nonzero-at-zero";
  off.growth_K = 1.0;
  off.fn = [](double x) { return x + 0.1; };
  CHECK_THROWS_AS(validate_modulus(off, ProbeGrid{0.0, 2.0, 101}),
                  std::invalid_argument);

  Modulus fast;
  fast.name = "super-linear";
  fast.growth_K = 1.0;
  fast.fn = [](double x) { return x * x; };
  CHECK_THROWS_AS(validate_modulus(fast, ProbeGrid{0.0, 8.0, 101}),
                  std::invalid_argument);
}

TEST_CASE("divergence probe: identity modulus") {
  // integral of 1/x over [delta, 1] = -ln(delta) = 18.42 at delta = 1e-8
  const OsgoodReport rep = osgood_check(identity_modulus(), 1e-8, 10.0);
  CHECK(rep.diverges);
  CHECK(rep.integral == doctest::Approx(18.420680743952367).epsilon(1e-9));
  // every decade adds ln(10): no plateau
  CHECK(rep.last_increment == doctest::Approx(std::log(10.0)).epsilon(1e-9));
  CHECK(rep.curve.size() == 9);
  CHECK(rep.curve.front().first == 1.0);
  CHECK(rep.curve.back().first == doctest::Approx(1e-8).epsilon(1e-12));
}

TEST_CASE("divergence probe: square root converges to 2") {
  // integral of x^{-1/2} over [delta, 1] -> 2 - 2 sqrt(delta)
  const OsgoodReport rep = osgood_check(sqrt_modulus(), 1e-8, 2.5);
  CHECK(!rep.diverges);
  CHECK(rep.integral == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("divergence probe: catalog rough modulus diverges like 2 ln(1 + |ln x|/2)") {
  // substitution w = 1 - ln(x)/2 gives I(delta) = 2 ln(1 + |ln delta|/2)
  const double expected = 2.0 * std::log(1.0 + 0.5 * 18.420680743952367);
  const OsgoodReport rep = osgood_check(osgood_modulus(), 1e-8, 2.5);
  CHECK(rep.diverges);
  CHECK(rep.integral == doctest::Approx(expected).epsilon(1e-8));
  CHECK(rep.last_increment > 0.01 * rep.integral);
}

TEST_CASE("divergence probe: slow logarithmic growth is still flagged divergent") {
  Modulus mild;
  mild.name = "x(1-ln x)";
  mild.growth_K = 1.0;
  mild.osgood_declared = true;
  mild.fn = [](double x) {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return x * (1.0 - std::log(x));
    return 1.0;  // flat continuation is enough for the probe range
  };
  // I(1e-8) = ln(1 + 18.42) = 2.966
  const OsgoodReport rep = osgood_check(mild, 1e-8, 2.5);
  CHECK(rep.diverges);
  CHECK(rep.integral == doctest::Approx(std::log(19.420680743952367)).epsilon(1e-8));
}

TEST_CASE("divergence probe rejects vanishing integrands") {
  CHECK_THROWS_AS(osgood_check(zero_modulus(), 1e-6, 1.0), std::invalid_argument);
}

TEST_CASE("Lipschitz regularization: plateau fixture has positive value at 0") {
  Modulus plateau;
  plateau.name = "min(2x,1)";
  plateau.growth_K = 0.7;  // sup of min(2x,1)/(1+x) is 2/3 at x = 1/2
  plateau.fn = [](double x) { return std::min(2.0 * x, 1.0); };
  validate_modulus(plateau, ProbeGrid{0.0, 8.0, 4097});

  const ProbeGrid lattice{0.0, 8.0, 100001};
  const Modulus reg = lipschitz_regularize(plateau, 1.0, lattice);

  // brute-force oracle: sup_y { min(2y,1) - |0-y| } = 1 - 0.5 at y = 0.5
  double oracle = 0.0;
  for (int i = 0; i < lattice.count; ++i) {
    const double y = lattice.point(i);
    oracle = std::max(oracle, std::min(2.0 * y, 1.0) - y);
  }
  CHECK(oracle == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(reg(0.0) == doctest::Approx(0.5).epsilon(1e-6));

  // domination, k-Lipschitz continuity, monotone decrease in k; probe points
  // chosen on the regularization lattice, where the envelope is exact
  const Modulus reg2 = lipschitz_regularize(plateau, 2.5, lattice);
  const ProbeGrid probes{0.0, 8.0, 101};
  double prev_x = 0.0, prev_v = reg(0.0);
  for (int i = 0; i < probes.count; ++i) {
    const double x = probes.point(i);
    const double v = reg(x);
    CHECK(v >= plateau(x) - 1e-12);           // dominates
    CHECK(reg2(x) <= v + 1e-12);              // larger k, smaller envelope
    CHECK(std::abs(v - prev_v) <= 1.0 * (x - prev_x) + 1e-12);  // 1-Lipschitz
    prev_x = x;
    prev_v = v;
  }
  CHECK_THROWS_AS(reg(9.0), std::out_of_range);
  // k below the growth slope cannot produce a finite envelope
  CHECK_THROWS_AS(lipschitz_regularize(plateau, 0.5, lattice),
                  std::invalid_argument);
}

TEST_CASE("Lipschitz regularization is exact for already-Lipschitz inputs") {
  // for Phi(x) = x and k = 2 the sup is attained at y = x: Phi_k = Phi
  const Modulus reg =
      lipschitz_regularize(identity_modulus(), 2.0, ProbeGrid{0.0, 4.0, 40001});
  for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 3.9})
    CHECK(reg(x) == doctest::Approx(x).epsilon(1e-9));
}

TEST_CASE("Lipschitz envelopes collapse onto the modulus as k grows") {
  const ProbeGrid lattice{0.0, 8.0, 20001};
  for (const Modulus& phi : {osgood_modulus(), sqrt_modulus()}) {
    const Modulus reg = lipschitz_regularize(phi, 1e4, lattice);
    for (double x : {0.0, 0.25, 1.0, 4.0, 8.0}) {
      CHECK(reg(x) >= phi(x) - 1e-12);
      CHECK(reg(x) - phi(x) <= 1e-3);
    }
  }
}
