#include "drm/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"
#include "drm/oracle.hpp"
#include "drm/policies.hpp"
#include "drm/reference_forms.hpp"
#include "drm/solver.hpp"
#include "drm/suites.hpp"

namespace drm {

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

double rel_err(double err, double scale) {
  return err / std::max(scale, 1e-8);
}

std::vector<Distortion> smooth_catalog() {
  return {Distortion::catalog("identity"),
          Distortion::catalog("gini_deviation"),
          Distortion::catalog("dual_power", {2.0}),
          Distortion::catalog("exponential", {1.0})};
}

Vec random_theta(int dim, double scale, std::uint64_t seed) {
  Rng rng(seed);
  Vec theta(dim);
  for (int i = 0; i < dim; ++i) theta[i] = rng.uniform(-scale, scale);
  return theta;
}

double exact_value_at(const ChainMdpEnv& env, const PolicySpec& spec,
                      const Vec& theta, const Distortion& g) {
  return exact_drm_value(enumerate_distribution(env, spec, theta), g);
}

Vec fd_gradient(const ChainMdpEnv& env, const PolicySpec& spec,
                const Vec& theta, const Distortion& g, double h) {
  Vec grad(theta.size());
  for (int i = 0; i < theta.size(); ++i) {
    Vec tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    grad[i] = (exact_value_at(env, spec, tp, g) -
               exact_value_at(env, spec, tm, g)) /
              (2.0 * h);
  }
  return grad;
}

Mat fd_hessian_of_gradient(const ChainMdpEnv& env, const PolicySpec& spec,
                           const Vec& theta, const Distortion& g, double h) {
  const int d = static_cast<int>(theta.size());
  Mat hess(d, d);
  for (int i = 0; i < d; ++i) {
    Vec tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    const Vec gp =
        exact_drm_grad_hess(enumerate_distribution(env, spec, tp), g).grad;
    const Vec gm =
        exact_drm_grad_hess(enumerate_distribution(env, spec, tm), g).grad;
    hess.col(i) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (hess + hess.transpose());
}

Mat fd_hessian_of_value(const ChainMdpEnv& env, const PolicySpec& spec,
                        const Vec& theta, const Distortion& g, double h) {
  const int d = static_cast<int>(theta.size());
  Mat hess(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Vec tpp = theta, tpm = theta, tmp = theta, tmm = theta;
      tpp[i] += h;
      tpp[j] += h;
      tpm[i] += h;
      tpm[j] -= h;
      tmp[i] -= h;
      tmp[j] += h;
      tmm[i] -= h;
      tmm[j] -= h;
      const double v = (exact_value_at(env, spec, tpp, g) -
                        exact_value_at(env, spec, tpm, g) -
                        exact_value_at(env, spec, tmp, g) +
                        exact_value_at(env, spec, tmm, g)) /
                       (4.0 * h * h);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

// --------------------------------------------------------------------------
// Criterion 1: exact gradient/Hessian vs finite differences of the exact
// riskmetric on random enumerable MDPs.
// --------------------------------------------------------------------------
CriterionResult criterion_oracle_gradient(const AcceptanceOptions& opts) {
  CriterionResult out{1, "oracle gradient agreement", true, "", 0.0};
  double worst_grad = 0.0, worst_hess = 0.0;
  for (int mdp_i = 0; mdp_i < 3; ++mdp_i) {
    const ChainMdpEnv env = make_random_chain_mdp(
        3, 2, 3, 0.9, derive_seed(opts.seed, 0x101, mdp_i));
    const PolicySpec spec =
        PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
    for (int theta_i = 0; theta_i < 3; ++theta_i) {
      const Vec theta = random_theta(
          spec.dim(), 0.7, derive_seed(opts.seed, 0x102, mdp_i, theta_i));
      const ExactDistribution dist = enumerate_distribution(env, spec, theta);
      for (const auto& g : smooth_catalog()) {
        const ExactDerivatives exact = exact_drm_grad_hess(dist, g);
        const Vec fd = fd_gradient(env, spec, theta, g, 1e-5);
        const double ge =
            rel_err((fd - exact.grad).norm(), exact.grad.norm());
        const Mat fdh = fd_hessian_of_gradient(env, spec, theta, g, 1e-5);
        const double he = rel_err((fdh - exact.hess).norm(), exact.hess.norm());
        worst_grad = std::max(worst_grad, ge);
        worst_hess = std::max(worst_hess, he);
      }
    }
  }
  out.pass = worst_grad <= 1e-5 && worst_hess <= 1e-4;
  out.detail = "max grad rel err " + fmt(worst_grad) + " (tol 1e-5), "
               "max hess rel err " + fmt(worst_hess) + " (tol 1e-4)";
  return out;
}

// --------------------------------------------------------------------------
// Criterion 2: the atom-level CDF-derivative route agrees with direct
// differentiation of the probability-weighted riskmetric.
// --------------------------------------------------------------------------
CriterionResult criterion_exact_route_consistency(
    const AcceptanceOptions& opts) {
  CriterionResult out{2, "CDF-derivative route vs direct differentiation",
                      true, "", 0.0};
  const ChainMdpEnv env =
      make_random_chain_mdp(3, 2, 3, 1.0, derive_seed(opts.seed, 0x201));
  const PolicySpec spec =
      PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  double worst = 0.0;
  for (int theta_i = 0; theta_i < 3; ++theta_i) {
    const Vec theta =
        random_theta(spec.dim(), 0.5, derive_seed(opts.seed, 0x202, theta_i));
    const ExactDistribution dist = enumerate_distribution(env, spec, theta);
    for (const auto& g : smooth_catalog()) {
      const ExactDerivatives exact = exact_drm_grad_hess(dist, g);
      const Vec fd_grad = fd_gradient(env, spec, theta, g, 1e-5);
      worst = std::max(
          worst, rel_err((fd_grad - exact.grad).norm(), exact.grad.norm()));
      const Mat fd_hess = fd_hessian_of_value(env, spec, theta, g, 5e-4);
      worst = std::max(
          worst, rel_err((fd_hess - exact.hess).norm(), exact.hess.norm()));
    }
  }
  out.pass = worst <= 1e-5;
  out.detail = "max rel err " + fmt(worst) + " (tol 1e-5)";
  return out;
}

SortedBatch random_raw_batch(int n, int d, std::uint64_t seed,
                             bool boundary_gap) {
  Rng rng(seed);
  std::vector<double> returns(n);
  std::vector<Vec> grads(n);
  std::vector<Mat> hessians(n);
  for (int i = 0; i < n; ++i) {
    returns[i] = rng.uniform(-2.0, 2.0);
    if (i > 0 && rng.uniform01() < 0.15) returns[i] = returns[i - 1];  // ties
    Vec g(d);
    for (int j = 0; j < d; ++j) g[j] = rng.uniform(-1.0, 1.0);
    grads[i] = g;
    Mat h(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c <= r; ++c) {
        h(r, c) = rng.uniform(-0.5, 0.5);
        h(c, r) = h(r, c);
      }
    }
    hessians[i] = h;
  }
  double m_r = *std::max_element(returns.begin(), returns.end());
  if (boundary_gap) m_r += rng.uniform(0.1, 1.5);
  return SortedBatch::from_raw(std::move(returns), std::move(grads),
                               std::move(hessians), m_r);
}

// --------------------------------------------------------------------------
// Criterion 3: suffix-sum estimator forms == literal segment integration ==
// order-statistics double sums, on random batches.
// --------------------------------------------------------------------------
CriterionResult criterion_form_equivalence(const AcceptanceOptions& opts) {
  CriterionResult out{3, "estimator form equivalence", true, "", 0.0};
  Rng rng(derive_seed(opts.seed, 0x301));
  const auto catalog = smooth_catalog();
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 49);
    const int d = 1 + static_cast<int>(rng.uniform01() * 7);
    const SortedBatch batch = random_raw_batch(
        n, d, derive_seed(opts.seed, 0x302, rep), rep % 2 == 0);
    const Distortion& g = catalog[rep % catalog.size()];

    const Vec grad = drm_gradient_full(batch, g);
    const Vec by_integral = reference::gradient_by_segment_integration(batch, g);
    const Vec by_double = reference::gradient_by_double_sum(batch, g);
    worst = std::max(worst, (grad - by_integral).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (grad - by_double).lpNorm<Eigen::Infinity>());

    const Mat hess = drm_hessian_full(batch, g);
    const Mat h_integral = reference::hessian_by_segment_integration(batch, g);
    const Mat h_double = reference::hessian_by_double_sum(batch, g);
    worst = std::max(worst, (hess - h_integral).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, (hess - h_double).lpNorm<Eigen::Infinity>());
  }
  out.pass = worst <= 1e-10;
  out.detail = "max abs deviation " + fmt(worst) + " (tol 1e-10)";
  return out;
}

// --------------------------------------------------------------------------
// Criterion 4: variance-reduced estimates keep the full forms' expectation.
// Identity distortion: the dropped cross-trajectory terms are exactly
// zero-mean (score identity / Bartlett identity), so batch-2 enumeration must
// agree to numerical precision and the Monte Carlo branch within 3 standard
// errors.
// --------------------------------------------------------------------------
CriterionResult criterion_variance_reduction(const AcceptanceOptions& opts) {
  CriterionResult out{4, "variance reduction keeps expectations", true, "", 0.0};
  const ChainMdpEnv env =
      make_random_chain_mdp(2, 2, 2, 1.0, derive_seed(opts.seed, 0x401));
  const PolicySpec spec =
      PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  const Vec theta =
      random_theta(spec.dim(), 0.4, derive_seed(opts.seed, 0x402));
  const Distortion identity = Distortion::catalog("identity");
  const double m_r = env.spec().return_bound();
  const int d = spec.dim();

  const auto paths = enumerate_trajectories(env, spec, theta);

  // Exact expectation over ordered batches of size 2.
  Vec e_grad_vr = Vec::Zero(d), e_grad_full = Vec::Zero(d);
  Mat e_hess_vr = Mat::Zero(d, d), e_hess_full = Mat::Zero(d, d);
  for (const auto& pi : paths) {
    for (const auto& pj : paths) {
      const double w = pi.prob * pj.prob;
      if (w <= 0.0) continue;
      const SortedBatch batch = SortedBatch::from_raw(
          {pi.ret, pj.ret}, {pi.grad, pj.grad}, {pi.hess_logp, pj.hess_logp},
          m_r);
      e_grad_vr += w * drm_gradient_vr(batch, identity);
      e_grad_full += w * drm_gradient_full(batch, identity);
      e_hess_vr += w * drm_hessian_vr(batch, identity);
      e_hess_full += w * drm_hessian_full(batch, identity);
    }
  }
  const double enum_grad_gap =
      (e_grad_vr - e_grad_full).lpNorm<Eigen::Infinity>();
  const double enum_hess_gap =
      (e_hess_vr - e_hess_full).lpNorm<Eigen::Infinity>();

  // Monte Carlo branch at batch size 20.
  const int n_batches = 100000;
  const int m = 20;
  Vec mean_gd = Vec::Zero(d), m2_gd = Vec::Zero(d);
  Mat mean_hd = Mat::Zero(d, d), m2_hd = Mat::Zero(d, d);
  for (int k = 0; k < n_batches; ++k) {
    auto trajs =
        rollout_batch(env, spec, theta, m, derive_seed(opts.seed, 0x405, k),
                      /*stream=*/2, ExecMode::Serial);
    const SortedBatch batch = SortedBatch::from_trajectories(
        spec, theta, std::move(trajs), MrMode::Theoretical, m_r);
    const Vec gd =
        drm_gradient_vr(batch, identity) - drm_gradient_full(batch, identity);
    const Mat hd =
        drm_hessian_vr(batch, identity) - drm_hessian_full(batch, identity);
    const double inv = 1.0 / static_cast<double>(k + 1);
    const Vec d_gd = gd - mean_gd;
    mean_gd += inv * d_gd;
    m2_gd += d_gd.cwiseProduct(gd - mean_gd);
    const Mat d_hd = hd - mean_hd;
    mean_hd += inv * d_hd;
    m2_hd += d_hd.cwiseProduct(hd - mean_hd);
  }
  // Welford second moments -> standard errors of the mean difference.
  bool mc_ok = true;
  double worst_sigma = 0.0;
  for (int i = 0; i < d; ++i) {
    const double se =
        std::sqrt(m2_gd[i] / (n_batches - 1.0) / n_batches) + 1e-15;
    worst_sigma = std::max(worst_sigma, std::abs(mean_gd[i]) / se);
    mc_ok = mc_ok && std::abs(mean_gd[i]) <= 3.0 * se;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double se =
          std::sqrt(m2_hd(i, j) / (n_batches - 1.0) / n_batches) + 1e-15;
      worst_sigma = std::max(worst_sigma, std::abs(mean_hd(i, j)) / se);
      mc_ok = mc_ok && std::abs(mean_hd(i, j)) <= 3.0 * se;
    }
  }

  out.pass = enum_grad_gap <= 1e-9 && enum_hess_gap <= 1e-9 && mc_ok;
  out.detail = "batch-2 enumeration gaps " + fmt(enum_grad_gap) + " / " +
               fmt(enum_hess_gap) + " (tol 1e-9); MC worst |mean|/SE " +
               fmt(worst_sigma) + " (tol 3)";
  return out;
}

// --------------------------------------------------------------------------
// Criterion 5: matrix-free Hessian-vector products match the dense
// variance-reduced Hessian.
// --------------------------------------------------------------------------
CriterionResult criterion_hvp(const AcceptanceOptions& opts) {
  CriterionResult out{5, "Hessian-vector product correctness", true, "", 0.0};
  Rng rng(derive_seed(opts.seed, 0x501));
  const auto catalog = smooth_catalog();
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform01() * 30);
    const int d = 2 + static_cast<int>(rng.uniform01() * 62);
    const SortedBatch batch = random_raw_batch(
        n, d, derive_seed(opts.seed, 0x502, rep), rep % 3 == 0);
    const Distortion& g = catalog[rep % catalog.size()];
    const Mat dense = drm_hessian_vr(batch, g);
    Vec v(d);
    for (int j = 0; j < d; ++j) v[j] = rng.uniform(-1.0, 1.0);
    const Vec hv = drm_hvp(batch, g, v);
    const Vec want = dense * v;
    worst = std::max(worst, rel_err((hv - want).norm(), want.norm()));
  }
  out.pass = worst <= 1e-9;
  out.detail = "max rel err " + fmt(worst) + " (tol 1e-9)";
  return out;
}

// --------------------------------------------------------------------------
// Criterion 6: estimator MSE decays at the 1/batch rate at desk scale.
// --------------------------------------------------------------------------
CriterionResult criterion_mse_rates(const AcceptanceOptions& opts) {
  CriterionResult out{6, "MSE decay rates", true, "", 0.0};
  MseRatesOptions mse_opts;
  mse_opts.replications = 200;
  mse_opts.seed = derive_seed(opts.seed, 0x601);
  mse_opts.out_dir = opts.scratch_dir + "/mse_rates";
  mse_opts.exec = opts.exec;
  const MseRatesResult r = run_mse_rates(mse_opts);
  out.pass = r.monotone && r.ratios_in_band;
  out.detail = "grad ratio(100/400) " + fmt(r.grad_ratio_100_400) +
               ", hess ratio " + fmt(r.hess_ratio_100_400) +
               " (band [2.5, 6]), monotone " + (r.monotone ? "yes" : "no");
  return out;
}

// --------------------------------------------------------------------------
// Criterion 7: cliff-walk reproduction bands.
// --------------------------------------------------------------------------
CriterionResult criterion_cliffwalk(const AcceptanceOptions& opts) {
  CriterionResult out{7, "cliff-walk reproduction", true, "", 0.0};
  CliffwalkOptions cw;
  cw.reps = 5;
  cw.seed = derive_seed(opts.seed, 0x701);
  cw.out_dir = opts.scratch_dir + "/cliffwalk_table3";
  cw.exec = opts.exec;
  const CliffwalkResult r = run_cliffwalk_table3(cw);
  const AlgoSummary& crpn = r.algo("crpn");
  const AlgoSummary& crpn_drm = r.algo("crpn_drm");
  const AlgoSummary& reinforce = r.algo("reinforce");
  const AlgoSummary& reinforce_drm = r.algo("reinforce_drm");

  const bool neutral_max_ok = crpn.max == -16.0;
  const bool neutral_mean_ok = crpn.mean >= -18.0 && crpn.mean <= -15.0;
  const bool drm_max_ok = crpn_drm.max == -12.0;
  const bool drm_mean_ok = crpn_drm.mean >= -16.0 && crpn_drm.mean <= -12.0;
  const bool ordering_ok = crpn_drm.mean >= crpn.mean &&
                           reinforce_drm.mean >= reinforce.mean;
  out.pass = neutral_max_ok && neutral_mean_ok && drm_max_ok && drm_mean_ok &&
             ordering_ok && r.cross_check_ok;
  auto mark = [](bool ok) { return ok ? "ok" : "BAD"; };
  out.detail =
      "crpn mean " + fmt(crpn.mean) + " [" + mark(neutral_mean_ok) +
      "] max " + fmt(crpn.max) + " [" + mark(neutral_max_ok) +
      "]; crpn_drm(gini) mean " + fmt(crpn_drm.mean) + " [" +
      mark(drm_mean_ok) + "] max " + fmt(crpn_drm.max) + " [" +
      mark(drm_max_ok) + "]; drm>=neutral " + mark(ordering_ok) +
      "; csv cross-check " + mark(r.cross_check_ok);
  return out;
}

// --------------------------------------------------------------------------
// Criterion 8: saddle escape scenario.
// --------------------------------------------------------------------------
CriterionResult criterion_saddle(const AcceptanceOptions& opts) {
  CriterionResult out{8, "saddle escape", true, "", 0.0};
  SaddleEscapeOptions se;
  se.seed = derive_seed(opts.seed, 0x801);
  se.out_dir = opts.scratch_dir + "/saddle_escape";
  se.exec = opts.exec;
  const SaddleEscapeResult r = run_saddle_escape(se);
  out.pass = r.pass;
  out.detail = "escaped " + std::to_string(r.escaped) + "/" +
               std::to_string(se.trials) + ", mean grad step norm " +
               fmt(r.mean_grad_step_norm) + " (tol 0.01), lambda_max " +
               fmt(r.lambda_max_exact);
  return out;
}

// --------------------------------------------------------------------------
// Criterion 9: cart-pole qualitative comparison.
// --------------------------------------------------------------------------
CriterionResult criterion_cartpole(const AcceptanceOptions& opts) {
  CriterionResult out{9, "cart-pole comparison", true, "", 0.0};
  CartpoleOptions cp;
  cp.seeds = 10;
  cp.seed = derive_seed(opts.seed, 0x901);
  cp.out_dir = opts.scratch_dir + "/cartpole_compare";
  cp.exec = opts.exec;
  const CartpoleResult r = run_cartpole_compare(cp);
  out.pass = r.drm_wins >= 6;
  double mean_id = 0.0, mean_drm = 0.0;
  for (double v : r.tail_mean_identity) mean_id += v;
  for (double v : r.tail_mean_drm) mean_drm += v;
  mean_id /= r.tail_mean_identity.size();
  mean_drm /= r.tail_mean_drm.size();
  out.detail = "drm wins " + std::to_string(r.drm_wins) +
               "/10 (need >= 6); mean tail return identity " + fmt(mean_id) +
               " vs drm " + fmt(mean_drm);
  return out;
}

// --------------------------------------------------------------------------
// Criterion 10: schedule calculator formulas and sample-complexity scaling.
// --------------------------------------------------------------------------
CriterionResult criterion_schedule(const AcceptanceOptions&) {
  CriterionResult out{10, "schedule calculator", true, "", 0.0};
  TheoryConstants unit{};
  unit.g_h = 1.0;
  unit.l_h = 1.0;
  unit.kappa1 = 1.0;
  unit.kappa2 = 1.0;
  unit.kappa3 = 1.0;
  unit.t1 = 1.0;
  unit.t2 = 1.0;
  unit.c_d = 1.0;

  const TheoreticalSchedule at_one = theoretical_schedule(1.0, unit, 1.0);
  const bool n_ok = std::abs(at_one.iterations - 12.0) <= 1e-12;
  const bool alpha_ok = std::abs(at_one.alpha - 3.0) <= 1e-12;
  const bool m_ok = std::abs(at_one.batch_m - 25.0 / 4.0) <= 1e-12;
  // cbrt(2 * (1+1) * (1+1)) = 2, so b = 9 * 2 / (1 * 1) = 18.
  const bool b_ok = std::abs(at_one.batch_b - 18.0) <= 1e-12;

  const TheoreticalSchedule hi = theoretical_schedule(0.1, unit, 1.0);
  const TheoreticalSchedule lo = theoretical_schedule(0.05, unit, 1.0);
  const double ratio = lo.total_gradient_samples / hi.total_gradient_samples;
  const double want = std::pow(2.0, 3.5);
  const bool scale_ok = std::abs(ratio / want - 1.0) <= 0.01;
  const bool admissible_ok = hi.epsilon_admissible && lo.epsilon_admissible &&
                             !at_one.epsilon_admissible;

  // Halving epsilon must exactly double b (b proportional to 1/eps).
  const bool b_scale_ok =
      std::abs(lo.batch_b / hi.batch_b - 2.0) <= 1e-12;

  out.pass = n_ok && alpha_ok && m_ok && b_ok && scale_ok && admissible_ok &&
             b_scale_ok;
  out.detail = "N(unit)=" + fmt(at_one.iterations) +
               ", total-sample ratio " + fmt(ratio) + " vs 2^3.5=" + fmt(want);
  return out;
}

}  // namespace

std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }
std::vector<int> oracle_validation_criteria() { return {1, 2, 3, 4, 5}; }

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const AcceptanceOptions& opts) {
  using Runner = std::function<CriterionResult(const AcceptanceOptions&)>;
  const std::vector<std::pair<int, Runner>> table = {
      {1, criterion_oracle_gradient},
      {2, criterion_exact_route_consistency},
      {3, criterion_form_equivalence},
      {4, criterion_variance_reduction},
      {5, criterion_hvp},
      {6, criterion_mse_rates},
      {7, criterion_cliffwalk},
      {8, criterion_saddle},
      {9, criterion_cartpole},
      {10, criterion_schedule},
  };
  std::vector<CriterionResult> results;
  for (int id : ids) {
    for (const auto& [tid, runner] : table) {
      if (tid != id) continue;
      const auto start = std::chrono::steady_clock::now();
      CriterionResult r = runner(opts);
      r.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
      results.push_back(std::move(r));
    }
  }
  return results;
}

}  // namespace drm
