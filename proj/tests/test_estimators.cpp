#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"
#include "drm/reference_forms.hpp"

using namespace drm;

namespace {

Vec rand_vec(int n, std::uint64_t seed) {
  Rng rng(seed);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

Mat rand_sym(int n, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      m(i, j) = rng.uniform(-0.5, 0.5);
      m(j, i) = m(i, j);
    }
  }
  return m;
}

SortedBatch make_batch(const std::vector<double>& returns, double m_r,
                       std::uint64_t seed, int dim = 3) {
  std::vector<Vec> grads;
  std::vector<Mat> hessians;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    grads.push_back(rand_vec(dim, derive_seed(seed, i)));
    hessians.push_back(rand_sym(dim, derive_seed(seed, i, 7)));
  }
  return SortedBatch::from_raw(returns, std::move(grads), std::move(hessians),
                               m_r);
}

}  // namespace

TEST_CASE("coefficient table on the worked two-sample example") {
  // Returns {1, 3}, Mr = 4, Gini deviation: c'_1 = (3-1) h'(1/2) = 0 and
  // c'_2 = (4-3) h'_+(0) = 1, so psi'_1 = 1.
  const SortedBatch batch = make_batch({1.0, 3.0}, 4.0, 11, 2);
  const Distortion gini = Distortion::catalog("gini_deviation");
  const CoefficientTable table = build_coefficients(batch, gini);
  CHECK(table.c1[0] == doctest::Approx(0.0));
  CHECK(table.c1[1] == doctest::Approx(1.0));
  CHECK(table.psi1[0] == doctest::Approx(1.0));
  CHECK(table.psi1[1] == doctest::Approx(1.0));
  // Second-derivative coefficients: c''_1 = 2 h''(1/2) = -4, boundary
  // c''_2 = 1 * h''_+(0) = -2.
  CHECK(table.c2[0] == doctest::Approx(-4.0));
  CHECK(table.c2[1] == doctest::Approx(-2.0));
}

TEST_CASE("psi suffix sums telescope") {
  const SortedBatch batch = make_batch({-1.0, 0.2, 0.5, 2.0, 2.7}, 3.5, 5);
  const Distortion g = Distortion::catalog("exponential", {1.0});
  const CoefficientTable table = build_coefficients(batch, g);
  for (int i = 0; i + 1 < batch.size(); ++i) {
    CHECK(table.psi1[i] - table.psi1[i + 1] == doctest::Approx(table.c1[i]));
  }
  CHECK(table.psi1[batch.size() - 1] ==
        doctest::Approx(table.c1[batch.size() - 1]));
}

TEST_CASE("identity distortion reduces both gradients to REINFORCE") {
  const SortedBatch batch = make_batch({-0.5, 0.3, 1.4, 2.2}, 2.2, 23);
  const Distortion identity = Distortion::catalog("identity");
  Vec reinforce = Vec::Zero(batch.dim());
  for (int i = 0; i < batch.size(); ++i) {
    reinforce += batch.ret(i) * batch.grad(i);
  }
  reinforce /= batch.size();
  CHECK((drm_gradient_vr(batch, identity) - reinforce)
            .lpNorm<Eigen::Infinity>() < 1e-12);
  // With Mr = batch max the boundary term vanishes and the full form also
  // collapses to REINFORCE up to the batch-mean score term, which the
  // telescoped psi' absorbs exactly: -(1/m) sum (Mr - R_(i)) grad l_(i).
  Vec full_expected = Vec::Zero(batch.dim());
  for (int i = 0; i < batch.size(); ++i) {
    full_expected -= (batch.m_r_eff() - batch.ret(i)) * batch.grad(i);
  }
  full_expected /= batch.size();
  CHECK((drm_gradient_full(batch, identity) - full_expected)
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("tied returns: only the boundary coefficient survives") {
  const SortedBatch batch = make_batch({1.5, 1.5, 1.5}, 2.5, 31);
  const Distortion gini = Distortion::catalog("gini_deviation");
  const CoefficientTable table = build_coefficients(batch, gini);
  CHECK(table.c1[0] == 0.0);
  CHECK(table.c1[1] == 0.0);
  CHECK(table.c1[2] == doctest::Approx(1.0));  // (2.5-1.5) h'_+(0)
  const Vec grad = drm_gradient_full(batch, gini);
  Vec expect = Vec::Zero(batch.dim());
  for (int i = 0; i < 3; ++i) expect -= table.psi1[i] * batch.grad(i);
  expect /= 3.0;
  CHECK((grad - expect).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("zero returns with batch-max bound give a zero Hessian") {
  std::vector<double> zeros(4, 0.0);
  SortedBatch batch = make_batch(zeros, 0.0, 47);
  const Distortion gini = Distortion::catalog("gini_deviation");
  CHECK(drm_hessian_vr(batch, gini).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(drm_gradient_vr(batch, gini).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("identity Hessian drops the h'' integral") {
  const SortedBatch batch = make_batch({-1.0, 0.0, 1.0, 2.0}, 2.0, 53);
  const Distortion identity = Distortion::catalog("identity");
  const Mat hess = drm_hessian_vr(batch, identity);
  Mat expect = Mat::Zero(batch.dim(), batch.dim());
  for (int i = 0; i < batch.size(); ++i) {
    expect += batch.ret(i) *
              (batch.hess_dense(i) + batch.grad(i) * batch.grad(i).transpose());
  }
  expect /= batch.size();
  expect = 0.5 * (expect + expect.transpose());
  CHECK((hess - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("estimator forms agree with the reference integrals") {
  const auto gini = Distortion::catalog("gini_deviation");
  const auto expo = Distortion::catalog("exponential", {2.0});
  for (int rep = 0; rep < 10; ++rep) {
    Rng rng(derive_seed(71, rep));
    std::vector<double> returns;
    const int n = 2 + static_cast<int>(rng.uniform01() * 20);
    for (int i = 0; i < n; ++i) returns.push_back(rng.uniform(-2.0, 2.0));
    const double m_r =
        *std::max_element(returns.begin(), returns.end()) + rng.uniform01();
    const SortedBatch batch = make_batch(returns, m_r, derive_seed(72, rep), 4);
    for (const Distortion* g : {&gini, &expo}) {
      CHECK((drm_gradient_full(batch, *g) -
             reference::gradient_by_segment_integration(batch, *g))
                .lpNorm<Eigen::Infinity>() < 1e-11);
      CHECK((drm_gradient_full(batch, *g) -
             reference::gradient_by_double_sum(batch, *g))
                .lpNorm<Eigen::Infinity>() < 1e-11);
      CHECK((drm_hessian_full(batch, *g) -
             reference::hessian_by_segment_integration(batch, *g))
                .lpNorm<Eigen::Infinity>() < 1e-11);
      CHECK((drm_hessian_full(batch, *g) -
             reference::hessian_by_double_sum(batch, *g))
                .lpNorm<Eigen::Infinity>() < 1e-11);
    }
  }
}

TEST_CASE("Hessian estimates are symmetric by construction") {
  const SortedBatch batch = make_batch({-1.2, 0.4, 0.9, 1.7, 2.4}, 3.0, 83);
  for (const char* name : {"gini_deviation", "identity"}) {
    const Mat h = drm_hessian_vr(batch, Distortion::catalog(name));
    CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("hvp: zero vector, linearity, and column reconstruction") {
  const SortedBatch batch = make_batch({-0.7, 0.1, 0.6, 1.2}, 1.9, 97, 5);
  const Distortion g = Distortion::catalog("dual_power", {2.0});
  const HvpOperator op(batch, g);
  CHECK(op.apply(Vec::Zero(5)).lpNorm<Eigen::Infinity>() == 0.0);

  const Vec v = rand_vec(5, 120), w = rand_vec(5, 121);
  const Vec lin = op.apply(2.0 * v + 3.0 * w);
  const Vec parts = 2.0 * op.apply(v) + 3.0 * op.apply(w);
  CHECK((lin - parts).lpNorm<Eigen::Infinity>() < 1e-10);

  const Mat dense = drm_hessian_vr(batch, g);
  Mat rebuilt(5, 5);
  for (int i = 0; i < 5; ++i) rebuilt.col(i) = op.apply(Vec::Unit(5, i));
  CHECK((rebuilt - dense).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("distortions without the needed derivatives are rejected") {
  const SortedBatch batch = make_batch({0.0, 1.0}, 2.0, 131);
  CHECK_THROWS_AS(
      drm_gradient_vr(batch, Distortion::catalog("proportional_hazard", {0.5})),
      DistortionRejected);
  CHECK_THROWS_AS(drm_hessian_vr(batch, Distortion::catalog("cvar", {0.5})),
                  DistortionRejected);
  CHECK_THROWS_AS(
      HvpOperator(batch, Distortion::catalog("rdeu")), DistortionRejected);
  // CVaR has bounded h', so the gradient path stays available.
  CHECK_NOTHROW(drm_gradient_vr(batch, Distortion::catalog("cvar", {0.25})));
}

TEST_CASE("theory constants match the printed formulas") {
  // C(2) = 4 (1 + 2 ln 4).
  const TheoryConstants c2 = mse_constants({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0},
                                           1.0, 1, 2);
  CHECK(c2.c_d == doctest::Approx(4.0 * (1.0 + 2.0 * std::log(4.0)))
                      .epsilon(1e-12));
  CHECK(c2.c_d == doctest::Approx(15.09).epsilon(1e-3));

  // All bounds = 1, T = 1, Mr = 1: kappa1 = 32 (e^2 + 1).
  CHECK(c2.kappa1 ==
        doctest::Approx(32.0 * (std::exp(2.0) + 1.0)).epsilon(1e-12));

  // G_H with unit bounds: 2 Mr T (Mh M1 + T Md^2 (M1 + M2)) = 2 (1 + 2) = 6.
  CHECK(c2.g_h == doctest::Approx(6.0).epsilon(1e-12));

  // Identity distortion kills the h'' and h''' terms of kappa2.
  const TheoryConstants ident = mse_constants({1.0, 1.0, 1.0}, {1.0, 0.0, 0.0},
                                              1.0, 1, 2);
  CHECK(ident.kappa2 == 0.0);
  CHECK(ident.kappa1 == doctest::Approx(32.0 * std::exp(2.0)).epsilon(1e-12));

  // nu = T Mh + T^2 Md^2 scales t1 quadratically.
  const TheoryConstants big = mse_constants({2.0, 3.0, 1.0}, {1.0, 1.0, 1.0},
                                            1.0, 2, 2);
  const double nu = 2.0 * 3.0 + 4.0 * 4.0;
  CHECK(big.t1 == doctest::Approx(32.0 * big.c_d * nu * nu).epsilon(1e-12));
}

TEST_CASE("dense materialization is capped") {
  const int d = kMaxDenseDim + 1;
  std::vector<double> returns = {0.0, 1.0};
  std::vector<Vec> grads = {Vec::Zero(d), Vec::Zero(d)};
  std::vector<Mat> hessians = {Mat::Zero(d, d), Mat::Zero(d, d)};
  const SortedBatch batch = SortedBatch::from_raw(
      returns, std::move(grads), std::move(hessians), 1.0);
  CHECK_THROWS_AS(drm_hessian_vr(batch, Distortion::catalog("gini_deviation")),
                  ConfigError);
  CHECK_NOTHROW(drm_hvp(batch, Distortion::catalog("gini_deviation"),
                        Vec::Zero(d)));
}

TEST_CASE("sorting is stable for tied returns") {
  std::vector<double> returns = {1.0, 0.5, 1.0};
  std::vector<Vec> grads = {Vec::Ones(2) * 1.0, Vec::Ones(2) * 2.0,
                            Vec::Ones(2) * 3.0};
  std::vector<Mat> hessians(3, Mat::Zero(2, 2));
  const SortedBatch batch =
      SortedBatch::from_raw(returns, std::move(grads), std::move(hessians), 1.0);
  CHECK(batch.ret(0) == 0.5);
  CHECK(batch.grad(0)[0] == 2.0);
  CHECK(batch.grad(1)[0] == 1.0);  // original order preserved among ties
  CHECK(batch.grad(2)[0] == 3.0);
}
