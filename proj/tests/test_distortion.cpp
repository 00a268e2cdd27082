#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drm/distortion.hpp"

using drm::Distortion;
using drm::EmpiricalDistribution;

namespace {

// Independent check of the analytic derivatives by central differences.
void check_derivatives_fd(const Distortion& g, double lo, double hi) {
  const double step = 1e-6;
  for (double t = lo; t <= hi + 1e-12; t += (hi - lo) / 16.0) {
    const double d1 = (g.h(t + step) - g.h(t - step)) / (2.0 * step);
    const double d2 = (g.h1(t + step) - g.h1(t - step)) / (2.0 * step);
    const double d3 = (g.h2(t + step) - g.h2(t - step)) / (2.0 * step);
    CHECK(d1 == doctest::Approx(g.h1(t)).epsilon(1e-6));
    CHECK(d2 == doctest::Approx(g.h2(t)).epsilon(1e-6));
    CHECK(d3 == doctest::Approx(g.h3(t)).epsilon(2e-5));
  }
}

// Brute-force Riemann integration of the defining integral on a fine grid.
double drm_value_by_grid(const std::vector<std::pair<double, double>>& atoms,
                         const Distortion& g, double m_r, int cells = 400000) {
  const double h1 = g.h(1.0);
  double total = 0.0;
  const double dx = 2.0 * m_r / cells;
  for (int i = 0; i < cells; ++i) {
    const double x = -m_r + (i + 0.5) * dx;
    double cdf = 0.0;
    for (const auto& [v, p] : atoms) {
      if (v <= x) cdf += p;
    }
    const double hv = g.h(1.0 - cdf);
    total += dx * (x < 0.0 ? hv - h1 : hv);
  }
  return total;
}

}  // namespace

TEST_CASE("catalog entries and their analytic derivatives") {
  const auto gini = Distortion::catalog("gini_deviation");
  CHECK(gini.h1(0.5) == doctest::Approx(0.0));
  CHECK(gini.h2(0.3) == doctest::Approx(-2.0));
  CHECK(gini.h3(0.9) == 0.0);
  CHECK(gini.smooth_enough_for_newton());

  const auto identity = Distortion::catalog("identity");
  CHECK(identity.h(0.7) == doctest::Approx(0.7));
  CHECK(identity.h1(0.2) == 1.0);
  CHECK(identity.h2(0.2) == 0.0);
  CHECK(identity.h3(0.2) == 0.0);

  const auto dual2 = Distortion::catalog("dual_power", {2.0});
  CHECK(dual2.h1(0.0) == doctest::Approx(2.0));
  CHECK(dual2.h2(0.4) == doctest::Approx(-2.0));
  CHECK(dual2.h3(0.4) == 0.0);
  CHECK(dual2.smooth_enough_for_newton());

  CHECK_FALSE(Distortion::catalog("cvar", {0.5}).smooth_enough_for_newton());
  CHECK_FALSE(Distortion::catalog("proportional_hazard", {0.5})
                  .smooth_enough_for_newton());
  CHECK_FALSE(Distortion::catalog("rdeu").smooth_enough_for_newton());
  CHECK(Distortion::catalog("proportional_hazard", {1.0})
            .smooth_enough_for_newton());
}

TEST_CASE("h(0) = 0 across the catalog") {
  for (const auto& name : {"identity", "gini_deviation", "rdeu"}) {
    CHECK(Distortion::catalog(name).h(0.0) == 0.0);
  }
  CHECK(Distortion::catalog("dual_power", {3.0}).h(0.0) == 0.0);
  CHECK(Distortion::catalog("exponential", {1.5}).h(0.0) == 0.0);
  CHECK(Distortion::catalog("cvar", {0.25}).h(0.0) == 0.0);
  CHECK(Distortion::catalog("proportional_hazard", {0.5}).h(0.0) == 0.0);
}

TEST_CASE("finite differences reproduce h', h'', h''' on interior grids") {
  check_derivatives_fd(Distortion::catalog("gini_deviation"), 0.05, 0.95);
  check_derivatives_fd(Distortion::catalog("dual_power", {2.0}), 0.05, 0.95);
  check_derivatives_fd(Distortion::catalog("dual_power", {3.5}), 0.05, 0.9);
  check_derivatives_fd(Distortion::catalog("exponential", {1.0}), 0.05, 0.95);
  check_derivatives_fd(Distortion::catalog("exponential", {2.5}), 0.05, 0.95);
  check_derivatives_fd(Distortion::catalog("proportional_hazard", {0.5}), 0.2,
                       0.9);
  check_derivatives_fd(Distortion::catalog("rdeu"), 0.1, 0.85);
}

TEST_CASE("rdeu matches frozen symbolic reference values") {
  const auto rdeu = Distortion::catalog("rdeu");
  CHECK(rdeu.h(0.2) == doctest::Approx(0.28121486964908365).epsilon(1e-12));
  CHECK(rdeu.h1(0.2) == doctest::Approx(0.5541676576014078).epsilon(1e-12));
  CHECK(rdeu.h2(0.2) == doctest::Approx(-0.817975083388709).epsilon(1e-12));
  CHECK(rdeu.h3(0.2) == doctest::Approx(9.66782407957862).epsilon(1e-10));
  CHECK(rdeu.h2(0.5) == doctest::Approx(0.33633815643222903).epsilon(1e-12));
  CHECK(rdeu.h3(0.8) == doctest::Approx(19.85113983737094).epsilon(1e-10));
  CHECK(rdeu.h(0.0) == 0.0);
  CHECK(rdeu.h(1.0) == 1.0);
}

TEST_CASE("catalog rejects bad names and parameters") {
  CHECK_THROWS_AS(Distortion::catalog("unknown"), drm::ConfigError);
  CHECK_THROWS_AS(Distortion::catalog("dual_power", {0.5}), drm::ConfigError);
  CHECK_THROWS_AS(Distortion::catalog("cvar", {1.0}), drm::ConfigError);
  CHECK_THROWS_AS(Distortion::catalog("exponential", {-1.0}), drm::ConfigError);
  CHECK_THROWS_AS(Distortion::catalog("identity", {1.0}), drm::ConfigError);
  CHECK_THROWS_AS(Distortion::parse("dual_power:abc"), drm::ConfigError);
  CHECK(Distortion::parse("dual_power:2.0").param() == 2.0);
  CHECK(Distortion::parse("gini_deviation").kind() ==
        Distortion::Kind::GiniDeviation);
}

TEST_CASE("empirical riskmetric: identity equals the sample mean") {
  EmpiricalDistribution dist({1.0, 2.0, 3.0}, 3.0);
  CHECK(drm_value(dist, Distortion::catalog("identity")) ==
        doctest::Approx(2.0).epsilon(1e-12));

  // Random sample sets, exact to 1e-12.
  drm::Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> xs;
    double mean = 0.0;
    const int n = 1 + static_cast<int>(rng.uniform01() * 30);
    for (int i = 0; i < n; ++i) {
      xs.push_back(rng.uniform(-5.0, 5.0));
      mean += xs.back();
    }
    mean /= n;
    EmpiricalDistribution d(xs, 6.0);
    CHECK(drm_value(d, Distortion::catalog("identity")) ==
          doctest::Approx(mean).epsilon(1e-12));
  }
}

TEST_CASE("gini deviation of a constant sample is zero") {
  EmpiricalDistribution dist({2.5, 2.5, 2.5, 2.5}, 5.0);
  CHECK(drm_value(dist, Distortion::catalog("gini_deviation")) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cvar(0.5) of {1,2,3,4} is the top-half mean") {
  EmpiricalDistribution dist({1.0, 2.0, 3.0, 4.0}, 4.0);
  CHECK(drm_value(dist, Distortion::catalog("cvar", {0.5})) ==
        doctest::Approx(3.5).epsilon(1e-9));
}

TEST_CASE("translation consistency for normalized monotone distortions") {
  drm::Rng rng(11);
  for (const auto* name : {"identity", "dual_power"}) {
    const Distortion g = std::string(name) == "identity"
                             ? Distortion::catalog("identity")
                             : Distortion::catalog("dual_power", {2.0});
    std::vector<double> xs;
    for (int i = 0; i < 12; ++i) xs.push_back(rng.uniform(-2.0, 2.0));
    const double c = 1.37;
    std::vector<double> shifted = xs;
    for (auto& x : shifted) x += c;
    EmpiricalDistribution d0(xs, 3.0);
    EmpiricalDistribution d1(shifted, 3.0 + c);
    CHECK(drm_value(d1, g) ==
          doctest::Approx(drm_value(d0, g) + c).epsilon(1e-9));
  }
}

TEST_CASE("exact atoms: degenerate and symmetric cases") {
  using Atoms = std::vector<std::pair<double, double>>;
  const Atoms zero = {{0.0, 1.0}};
  for (const auto* name : {"identity", "gini_deviation", "rdeu"}) {
    CHECK(drm::drm_value_exact(zero, Distortion::catalog(name), 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  const Atoms pm = {{-1.0, 0.5}, {1.0, 0.5}};
  CHECK(drm::drm_value_exact(pm, Distortion::catalog("identity"), 1.0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Gini deviation of the symmetric two-point law: 2 h(1/2) = 0.5.
  CHECK(drm::drm_value_exact(pm, Distortion::catalog("gini_deviation"), 1.0) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("segment sums agree with fine-grid integration of the definition") {
  using Atoms = std::vector<std::pair<double, double>>;
  const Atoms atoms = {{-1.3, 0.25}, {-0.2, 0.15}, {0.4, 0.35}, {2.1, 0.25}};
  const double m_r = 3.0;
  for (const auto* name : {"identity", "gini_deviation"}) {
    const Distortion g = Distortion::catalog(name);
    const double grid = drm_value_by_grid(atoms, g, m_r);
    CHECK(std::abs(drm::drm_value_exact(atoms, g, m_r) - grid) <= 1e-6 * m_r);
  }
  const Distortion cvar = Distortion::catalog("cvar", {0.5});
  CHECK(std::abs(drm::drm_value_exact(atoms, cvar, m_r) -
                 drm_value_by_grid(atoms, cvar, m_r)) <= 1e-5 * m_r);

  // Empirical path against the same grid oracle.
  std::vector<double> xs = {-1.3, -0.2, 0.4, 2.1};
  Atoms uniform;
  for (double x : xs) uniform.emplace_back(x, 0.25);
  EmpiricalDistribution dist(xs, m_r);
  for (const auto* name : {"identity", "gini_deviation"}) {
    const Distortion g = Distortion::catalog(name);
    CHECK(std::abs(drm_value(dist, g) - drm_value_by_grid(uniform, g, m_r)) <=
          1e-6 * m_r);
  }
}

TEST_CASE("EDF invariants") {
  EmpiricalDistribution dist({-0.5, 0.25, 0.25, 2.0}, 2.5);
  CHECK(dist.edf(-0.6) == 0.0);
  CHECK(dist.edf(-0.5) == doctest::Approx(0.25));
  CHECK(dist.edf(0.25) == doctest::Approx(0.75));
  CHECK(dist.edf(2.0) == 1.0);
  CHECK(dist.edf(2.4) == 1.0);
}

TEST_CASE("distribution construction rejects invalid inputs") {
  CHECK_THROWS_AS(EmpiricalDistribution({}, 1.0), drm::ConfigError);
  CHECK_THROWS_AS(EmpiricalDistribution({3.0}, 1.0), drm::ConfigError);
  using Atoms = std::vector<std::pair<double, double>>;
  CHECK_THROWS_AS(
      drm::drm_value_exact(Atoms{{0.0, 0.7}}, Distortion::catalog("identity"),
                           1.0),
      drm::ConfigError);
}
