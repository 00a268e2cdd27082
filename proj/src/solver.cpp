#include "drm/solver.hpp"

#include <chrono>
#include <optional>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace drm {

namespace {

double cubic_model(const Vec& g, const LinOp& hvp, double alpha, const Vec& d,
                   Vec* hd_out = nullptr) {
  const Vec hd = hvp(d);
  if (hd_out) *hd_out = hd;
  const double nd = d.norm();
  return g.dot(d) + 0.5 * d.dot(hd) - alpha / 6.0 * nd * nd * nd;
}

/// Exact maximizer of t -> t a + t^2 b / 2 - alpha |t|^3 / 6 over t >= 0,
/// where a = <g, u>, b = <H u, u> for a unit direction u.
double best_scale_forward(double a, double b, double alpha) {
  // derivative: a + b t - (alpha/2) t^2 = 0, positive root.
  const double half_alpha = 0.5 * alpha;
  const double disc = b * b + 4.0 * half_alpha * a;
  if (disc < 0.0) return 0.0;
  const double t = (b + std::sqrt(disc)) / (2.0 * half_alpha);
  return std::max(t, 0.0);
}

Vec deterministic_unit(int dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x9e37));
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-1.0, 1.0);
  const double n = v.norm();
  return n > 0.0 ? Vec(v / n) : Vec(Vec::Unit(dim, 0));
}

}  // namespace

namespace {

// Lanczos iteration with full reorthogonalization. Extremal eigenvalues of
// the tridiagonal projection converge far faster than plain power iteration,
// which stalls on clustered spectra once a positive shift is applied; the
// Krylov space needs only operator applications, matching the HVP-only
// interface.
double lambda_max_impl(const LinOp& op, int dim, int iters, double tol,
                       std::uint64_t seed, Vec* vec_out) {
  const int k_max = std::min(dim, std::max(iters, 2));
  std::vector<Vec> basis;
  basis.reserve(k_max);
  std::vector<double> diag, offdiag;
  Vec v = deterministic_unit(dim, seed);
  Vec w;
  double beta = 0.0;
  double lam_prev = std::numeric_limits<double>::quiet_NaN();
  Eigen::SelfAdjointEigenSolver<Mat> small_eig;

  for (int k = 0; k < k_max; ++k) {
    basis.push_back(v);
    w = op(v);
    const double alpha = v.dot(w);
    diag.push_back(alpha);
    w -= alpha * v;
    if (k > 0) w -= beta * basis[k - 1];
    for (const Vec& b : basis) w -= b.dot(w) * b;  // reorthogonalize
    beta = w.norm();

    // Eigenvalues of the current tridiagonal projection.
    const int k_cur = k + 1;
    Mat tri = Mat::Zero(k_cur, k_cur);
    for (int i = 0; i < k_cur; ++i) {
      tri(i, i) = diag[i];
      if (i + 1 < k_cur) {
        tri(i, i + 1) = offdiag[i];
        tri(i + 1, i) = offdiag[i];
      }
    }
    small_eig.compute(tri);
    const double lam = small_eig.eigenvalues().maxCoeff();
    const bool settled =
        std::isfinite(lam_prev) && std::abs(lam - lam_prev) <= tol * (std::abs(lam) + 1e-12);
    lam_prev = lam;
    if (beta < 1e-12 || (settled && k > 4)) break;
    offdiag.push_back(beta);
    v = w / beta;
  }

  const int k_cur = static_cast<int>(diag.size());
  Mat tri = Mat::Zero(k_cur, k_cur);
  for (int i = 0; i < k_cur; ++i) {
    tri(i, i) = diag[i];
    if (i + 1 < k_cur && i < static_cast<int>(offdiag.size())) {
      tri(i, i + 1) = offdiag[i];
      tri(i + 1, i) = offdiag[i];
    }
  }
  small_eig.compute(tri);
  int arg_max = 0;
  small_eig.eigenvalues().maxCoeff(&arg_max);
  if (vec_out) {
    Vec u = Vec::Zero(dim);
    for (int i = 0; i < k_cur; ++i) {
      u += small_eig.eigenvectors()(i, arg_max) * basis[i];
    }
    const double n = u.norm();
    *vec_out = n > 0 ? Vec(u / n) : basis[0];
  }
  return small_eig.eigenvalues()[arg_max];
}

}  // namespace

double power_iteration_lambda_max(const LinOp& op, int dim, int iters,
                                  double tol, std::uint64_t seed) {
  return lambda_max_impl(op, dim, iters, tol, seed, nullptr);
}

CubicStep cubic_subproblem(const Vec& g, const LinOp& hvp, double alpha,
                           const SubproblemOptions& opts) {
  if (alpha <= 0.0) throw ConfigError("cubic penalty alpha must be positive");
  if (!all_finite(g)) throw NumericError("cubic subproblem: gradient not finite");
  const int dim = static_cast<int>(g.size());
  const double gn = g.norm();

  CubicStep best;
  best.delta = Vec::Zero(dim);
  best.model_value = 0.0;

  auto consider = [&](const Vec& d) {
    if (d.size() == 0 || !all_finite(d)) return;
    const double mv = cubic_model(g, hvp, alpha, d);
    if (std::isfinite(mv) && mv > best.model_value) {
      best.delta = d;
      best.model_value = mv;
    }
  };

  // Cauchy point: Hessian-free model maximizer along g.
  Vec cauchy = Vec::Zero(dim);
  if (gn > 0.0) {
    cauchy = std::sqrt(2.0 * gn / alpha) / gn * g;
    consider(cauchy);
  }

  // Exact model maximization along a ray. With non-positive curvature the
  // scale solve is trustworthy; a positive sampled curvature is extrapolation
  // of batch noise, so the step may not grow past the given trust length.
  auto ray_solve = [&](const Vec& u, double trust_len) {
    const double b = u.dot(hvp(u));
    double t = best_scale_forward(g.dot(u), b, alpha);
    if (b > 0.0) t = std::min(t, trust_len);
    if (t > 0.0) consider(t * u);
  };

  // With a vanishing gradient the ascent below has nothing to start from, so
  // probe for a positive-curvature direction; a positive eigenvalue yields a
  // nonzero escape step along it.
  double lambda_est = 0.0;
  if (gn <= 1e-12 * std::max(1.0, dim * 1.0)) {
    Vec v;
    lambda_est =
        lambda_max_impl(hvp, dim, opts.power_iters, opts.tol, opts.seed, &v);
    if (lambda_est > 0.0) {
      for (const double sign : {1.0, -1.0}) {
        const Vec u = sign * v;
        const double t = best_scale_forward(g.dot(u), lambda_est, alpha);
        if (t > 0.0) consider(t * u);
      }
    }
    if (best.delta.norm() == 0.0) return best;
  }

  // Fixed-step gradient ascent on the model from the best candidate, keeping
  // the best-model iterate.
  Vec d = best.delta.norm() > 0.0 ? best.delta : cauchy;
  Vec hd;
  double curvature_proxy = std::abs(lambda_est);
  if (curvature_proxy == 0.0 && d.norm() > 0.0) {
    const Vec u = d / d.norm();
    curvature_proxy = std::abs(u.dot(hvp(u)));
  }
  const double eta =
      1.0 / (alpha * std::max(cauchy.norm(), d.norm()) + curvature_proxy + 1e-12);
  for (int it = 0; it < opts.budget; ++it) {
    cubic_model(g, hvp, alpha, d, &hd);
    const double nd = d.norm();
    Vec model_grad = g + hd;
    if (nd > 0.0) model_grad.noalias() -= (alpha / 2.0) * nd * d;
    d.noalias() += eta * model_grad;
    if (!all_finite(d)) break;
    consider(d);
  }

  // Exact scale along the best direction found; it adjusts length only.
  const double trust = std::max(best.delta.norm(), cauchy.norm());
  if (best.delta.norm() > 0.0) {
    ray_solve(best.delta / best.delta.norm(), trust);
  } else if (gn > 0.0) {
    // Nothing beat the zero step yet: the positive part of the model may sit
    // below the Cauchy length (strongly concave models). Solve along g.
    ray_solve(g / gn, trust);
  }

  // Enforce the trust limit, falling back to the Cauchy point when the
  // truncated step models worse.
  const double cap = opts.max_step_scale * cauchy.norm();
  if (std::isfinite(cap) && best.delta.norm() > cap) {
    Vec capped = cap > 0.0 ? Vec(best.delta * (cap / best.delta.norm()))
                           : Vec(Vec::Zero(dim));
    const double capped_value = cubic_model(g, hvp, alpha, capped);
    const double cauchy_value = cubic_model(g, hvp, alpha, cauchy);
    if (capped_value >= cauchy_value) {
      best.delta = std::move(capped);
      best.model_value = capped_value;
    } else {
      best.delta = cauchy;
      best.model_value = cauchy_value;
    }
  }
  return best;
}

void RunConfig::validate() const {
  if (batch_m < 2 || batch_b < 2) throw ConfigError("batch sizes must be >= 2");
  if (alpha <= 0.0) throw ConfigError("alpha must be positive");
  if (iterations < 1) throw ConfigError("iteration count must be >= 1");
}

namespace {

struct BatchStats {
  double mean = 0.0, stdev = 0.0, min = 0.0, max = 0.0;
};

BatchStats default_return_stats(const std::vector<Trajectory>& trajs) {
  BatchStats out;
  out.min = trajs.front().ret_default;
  out.max = out.min;
  double sum = 0.0;
  for (const auto& t : trajs) {
    sum += t.ret_default;
    out.min = std::min(out.min, t.ret_default);
    out.max = std::max(out.max, t.ret_default);
  }
  out.mean = sum / static_cast<double>(trajs.size());
  double ss = 0.0;
  for (const auto& t : trajs) {
    const double d = t.ret_default - out.mean;
    ss += d * d;
  }
  out.stdev = trajs.size() > 1
                  ? std::sqrt(ss / static_cast<double>(trajs.size() - 1))
                  : 0.0;
  return out;
}

OptimResult optimize(const Env& env, const PolicySpec& spec, const Vec& theta0,
                     const RunConfig& raw_config) {
  RunConfig config = raw_config;
  if (config.schedule == ScheduleMode::Theoretical) {
    const Distortion gd = Distortion::parse(config.distortion);
    const TheoryConstants constants = mse_constants(
        assumption_bounds(spec), gd.derivative_bounds(),
        env.spec().return_bound(), env.spec().horizon, spec.dim());
    const TheoreticalSchedule sched =
        theoretical_schedule(config.epsilon, constants, config.rho_gap);
    if (sched.total_gradient_samples + sched.total_hessian_samples > 1e8) {
      throw ConfigError(
          "theoretical schedule needs > 1e8 trajectories here; use the "
          "constants calculator instead");
    }
    config.alpha = sched.alpha;
    config.iterations = std::max(1, static_cast<int>(std::ceil(sched.iterations)));
    config.batch_m = std::max(2, static_cast<int>(std::ceil(sched.batch_m)));
    config.batch_b = std::max(2, static_cast<int>(std::ceil(sched.batch_b)));
    config.shared_batch = false;
  }
  config.validate();
  const Distortion g = Distortion::parse(config.distortion);
  const bool newton = config.algorithm == Algorithm::CrpnDrm;
  if (newton && !g.smooth_enough_for_newton()) {
    throw DistortionRejected("distortion '" + g.name() +
                             "' rejected by the Newton optimizer");
  }
  if (!newton && !g.h1_bounded()) {
    throw DistortionRejected("distortion '" + g.name() +
                             "' has unbounded h'; gradient ascent rejected");
  }

  const double m_r_true = env.spec().return_bound();
  OptimResult out;
  out.theta = theta0;
  out.log.reserve(config.iterations);

  for (int k = 0; k < config.iterations; ++k) {
    const auto t_start = std::chrono::steady_clock::now();
    auto trajs = rollout_batch(env, spec, out.theta, config.batch_m,
                               derive_seed(config.seed, k), /*stream=*/0,
                               config.exec);
    const BatchStats stats = default_return_stats(trajs);
    std::vector<double> train_returns(trajs.size());
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      train_returns[i] = trajs[i].ret;
    }
    const SortedBatch batch = SortedBatch::from_trajectories(
        spec, out.theta, std::move(trajs), config.mr_mode, m_r_true,
        config.exec);

    const Vec grad = drm_gradient_vr(batch, g);
    if (!all_finite(grad) || !all_finite(out.theta)) {
      out.aborted = true;
      out.abort_reason = "non-finite gradient or parameters at iteration " +
                         std::to_string(k);
      break;
    }

    IterationLog row;
    row.k = k;
    row.grad_norm = grad.norm();
    row.ret_mean = stats.mean;
    row.ret_std = stats.stdev;
    row.ret_min = stats.min;
    row.ret_max = stats.max;
    {
      const double widest =
          std::max(std::abs(batch.ret(0)), std::abs(batch.ret(batch.size() - 1)));
      EmpiricalDistribution dist(train_returns, std::max(m_r_true, widest));
      row.drm_estimate = drm_value(dist, g);
    }

    Vec step;
    if (newton) {
      // The gradient and Hessian share the batch by default; independent
      // Hessian batches (the worst-case schedule's m >= b regime) roll out
      // separately.
      std::optional<SortedBatch> hess_batch;
      if (!config.shared_batch) {
        auto hess_trajs =
            rollout_batch(env, spec, out.theta, config.batch_b,
                          derive_seed(config.seed, k, 0x4e), /*stream=*/4,
                          config.exec);
        hess_batch = SortedBatch::from_trajectories(
            spec, out.theta, std::move(hess_trajs), config.mr_mode, m_r_true,
            config.exec);
      }
      const HvpOperator hop(hess_batch ? *hess_batch : batch, g);
      const LinOp op = [&hop](const Vec& v) { return hop.apply(v); };
      SubproblemOptions sub = config.subproblem;
      sub.seed = derive_seed(config.seed, k, 0xcd);
      const CubicStep cubic = cubic_subproblem(grad, op, config.alpha, sub);
      step = cubic.delta;
      row.lambda_max =
          config.track_lambda_max
              ? power_iteration_lambda_max(op, spec.dim(), 20, 1e-6,
                                           derive_seed(config.seed, k, 0xaa))
              : 0.0;
    } else {
      const double gn = grad.norm();
      step = gn > 0.0 ? Vec(std::sqrt(2.0 / (config.alpha * gn)) * grad)
                      : Vec(Vec::Zero(spec.dim()));
      row.lambda_max = 0.0;
    }

    if (!all_finite(step)) {
      out.aborted = true;
      out.abort_reason = "non-finite step at iteration " + std::to_string(k);
      break;
    }
    out.theta += step;
    row.step_norm = step.norm();
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    out.log.push_back(row);
  }
  return out;
}

}  // namespace

OptimResult crpn_drm(const Env& env, const PolicySpec& spec, const Vec& theta0,
                     const RunConfig& config) {
  RunConfig c = config;
  c.algorithm = Algorithm::CrpnDrm;
  return optimize(env, spec, theta0, c);
}

OptimResult reinforce_drm(const Env& env, const PolicySpec& spec,
                          const Vec& theta0, const RunConfig& config) {
  RunConfig c = config;
  c.algorithm = Algorithm::ReinforceDrm;
  return optimize(env, spec, theta0, c);
}

OptimResult run_algorithm(const Env& env, const PolicySpec& spec,
                          const Vec& theta0, const RunConfig& config) {
  return optimize(env, spec, theta0, config);
}

TheoreticalSchedule theoretical_schedule(double epsilon,
                                         const TheoryConstants& c,
                                         double rho_gap) {
  if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (rho_gap < 0.0) throw ConfigError("rho gap must be nonnegative");
  TheoreticalSchedule out;
  const double cube =
      std::cbrt(2.0 * (c.kappa3 + c.t2) * (c.kappa2 + c.t1));
  out.alpha = 3.0 * c.l_h;
  out.iterations = 12.0 * std::sqrt(c.l_h) * rho_gap / std::pow(epsilon, 1.5);
  out.batch_m = 25.0 * c.kappa1 / (4.0 * epsilon * epsilon);
  out.batch_b = 9.0 * cube / (c.l_h * epsilon);
  out.epsilon_bound = 25.0 * c.l_h * c.kappa1 / (36.0 * cube);
  out.epsilon_admissible = epsilon <= out.epsilon_bound;
  out.total_gradient_samples = out.iterations * out.batch_m;
  out.total_hessian_samples = out.iterations * out.batch_b;
  return out;
}

StationarityReport stationarity_report(const Env& env, const PolicySpec& spec,
                                       const Vec& theta, const Distortion& g,
                                       int probe_batch, std::uint64_t seed,
                                       ExecMode mode) {
  auto trajs = rollout_batch(env, spec, theta, probe_batch,
                             derive_seed(seed, 0x51a7), /*stream=*/0, mode);
  const SortedBatch batch = SortedBatch::from_trajectories(
      spec, theta, std::move(trajs), MrMode::BatchMax,
      env.spec().return_bound(), mode);
  StationarityReport out;
  out.grad_norm = drm_gradient_vr(batch, g).norm();
  const HvpOperator hop(batch, g);
  const LinOp op = [&hop](const Vec& v) { return hop.apply(v); };
  out.lambda_max = power_iteration_lambda_max(op, spec.dim(), 50, 1e-6,
                                              derive_seed(seed, 0x77));
  return out;
}

}  // namespace drm
