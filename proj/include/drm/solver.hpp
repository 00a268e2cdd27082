#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "drm/batch.hpp"
#include "drm/common.hpp"
#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"
#include "drm/policies.hpp"

namespace drm {

using LinOp = std::function<Vec(const Vec&)>;

struct SubproblemOptions {
  int budget = 25;            // ascent iterations on the cubic model
  int power_iters = 30;       // curvature probe for the escape direction
  double tol = 1e-9;          // curvature-probe convergence tolerance
  std::uint64_t seed = 1234;  // start vector of the curvature probe
  // Trust limit on the returned step, as a multiple of the Cauchy length
  // (infinity = none). Sampled Hessians with large spurious curvature can
  // pull the model maximizer far outside the region the batch supports;
  // capping keeps the curvature-informed direction at a first-order scale.
  // When the cap leaves the step with a worse model value than the Cauchy
  // point, the Cauchy point is returned instead.
  double max_step_scale = std::numeric_limits<double>::infinity();
};

struct CubicStep {
  Vec delta;
  double model_value = 0.0;
};

/// Maximizes the cubic-regularized model
///   m(D) = <g, D> + 1/2 <H D, D> - (alpha/6) ||D||^3
/// approximately: Cauchy-point and curvature-direction candidates, then
/// budgeted gradient ascent with exact rescaling along the current ray.
/// The returned step never has a lower model value than the Cauchy point;
/// with g = 0 and no positive curvature the step is 0.
CubicStep cubic_subproblem(const Vec& g, const LinOp& hvp, double alpha,
                           const SubproblemOptions& opts = {});

/// Largest eigenvalue of a symmetric operator by power iteration (with a
/// spectral shift so negative-definite operators converge to lambda_max,
/// not -lambda_min). Returns the eigenvalue estimate.
double power_iteration_lambda_max(const LinOp& op, int dim, int iters,
                                  double tol, std::uint64_t seed);

enum class Algorithm { CrpnDrm, ReinforceDrm };
enum class ScheduleMode { Fixed, Theoretical };

struct RunConfig {
  Algorithm algorithm = Algorithm::CrpnDrm;
  std::string distortion = "gini_deviation";
  int iterations = 100;
  int batch_m = 200;
  int batch_b = 200;       // only used when shared_batch is false
  bool shared_batch = true;
  double alpha = 2500.0;
  std::uint64_t seed = 0;
  // Theoretical mode replaces iterations/batches/alpha with the worst-case
  // schedule computed from the environment's analytic constants and
  // `epsilon`/`rho_gap`; practical only on tiny MDPs.
  ScheduleMode schedule = ScheduleMode::Fixed;
  double epsilon = 1.0;
  double rho_gap = 1.0;
  MrMode mr_mode = MrMode::BatchMax;
  SubproblemOptions subproblem;
  ExecMode exec = ExecMode::OpenMP;
  bool track_lambda_max = true;

  void validate() const;
};

struct IterationLog {
  int k = 0;
  double drm_estimate = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  double lambda_max = 0.0;   // power-iteration estimate on the batch Hessian
  double ret_mean = 0.0;     // episodic default-return stats of the batch
  double ret_std = 0.0;
  double ret_min = 0.0;
  double ret_max = 0.0;
  double wall_ms = 0.0;
};

struct OptimResult {
  Vec theta;
  std::vector<IterationLog> log;
  bool aborted = false;          // NaN/overflow abort with last valid theta
  std::string abort_reason;
};

/// Cubic-regularized policy Newton loop: per iteration, roll out a batch,
/// build the sorted order-statistics view, form the variance-reduced gradient
/// and Hessian-vector operator, solve the cubic subproblem and ascend.
OptimResult crpn_drm(const Env& env, const PolicySpec& spec, const Vec& theta0,
                     const RunConfig& config);

/// First-order baseline: theta += lambda g with lambda = sqrt(2/(alpha ||g||))
/// (the cubic step with H = 0).
OptimResult reinforce_drm(const Env& env, const PolicySpec& spec,
                          const Vec& theta0, const RunConfig& config);

OptimResult run_algorithm(const Env& env, const PolicySpec& spec,
                          const Vec& theta0, const RunConfig& config);

/// Worst-case hyperparameter schedule for the convergence guarantee,
/// evaluated as a calculator:
///   alpha = 3 L_H,  N = 12 sqrt(L_H) (rho(theta0)-rho*) / eps^1.5,
///   m = 25 kappa1 / (4 eps^2),  b = 9 (2(kappa3+t2)(kappa2+t1))^(1/3)/(L_H eps).
/// Values are reported un-rounded; `epsilon_admissible` flags whether eps
/// satisfies the guarantee's admissibility bound.
struct TheoreticalSchedule {
  double alpha = 0.0;
  double iterations = 0.0;
  double batch_m = 0.0;
  double batch_b = 0.0;
  double epsilon_bound = 0.0;
  bool epsilon_admissible = false;
  double total_gradient_samples = 0.0;  // N * m
  double total_hessian_samples = 0.0;   // N * b
};

TheoreticalSchedule theoretical_schedule(double epsilon,
                                         const TheoryConstants& constants,
                                         double rho_gap);

struct StationarityReport {
  double grad_norm = 0.0;
  double lambda_max = 0.0;
};

/// Estimates ||grad rho|| and lambda_max(hess rho) at theta from one probe
/// batch (power iteration on the Hessian-vector operator: 50 iterations,
/// tolerance 1e-6).
StationarityReport stationarity_report(const Env& env, const PolicySpec& spec,
                                       const Vec& theta, const Distortion& g,
                                       int probe_batch, std::uint64_t seed,
                                       ExecMode mode = ExecMode::OpenMP);

}  // namespace drm
