#pragma once

#include <map>
#include <string>
#include <vector>

#include "drm/common.hpp"
#include "drm/solver.hpp"

namespace drm {

/// Table-style per-algorithm summary of evaluation returns.
struct AlgoSummary {
  std::string algorithm;
  double mean = 0.0;
  double stdev = 0.0;
  double min = 0.0;
  double max = 0.0;
  int episodes = 0;
};

struct CliffwalkOptions {
  int reps = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  int iterations = 1000;
  int batch = 200;
  double alpha = 2500.0;
  double shaping_c = 0.5;
  int eval_episodes = 1000;
  // Newton steps truncated to the Cauchy length with no inner ascent: the
  // sampled Hessians on this environment carry enormous curvature estimates,
  // and untruncated model maximization saturates the policy within a handful
  // of updates. The curvature still acts through the exact scale solve,
  // which shrinks steps on concave rays.
  double trust_step_scale = 1.0;
  int inner_budget = 0;
  bool dump_traces = false;
  ExecMode exec = ExecMode::OpenMP;
};

struct CliffwalkResult {
  std::vector<AlgoSummary> summary;  // reinforce, crpn, reinforce_drm, crpn_drm
  bool cross_check_ok = false;       // summary recomputed from the raw CSV
  const AlgoSummary& algo(const std::string& name) const;
};

/// Trains REINFORCE / CRPN (identity) and their Gini-deviation counterparts
/// on cliff walking with the experiment settings, evaluates each policy on
/// the default reward, and writes summary.csv, per-algorithm eval_returns.csv,
/// per-replication learning curves, final policies and policy maps.
CliffwalkResult run_cliffwalk_table3(const CliffwalkOptions& opts);

struct CartpoleOptions {
  int seeds = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  int iterations = 100;
  int batch = 200;
  double alpha = 5000.0;
  std::string drm = "gini_deviation";  // risk-sensitive variant to compare
  int tail_iters = 20;                 // final window for the comparison
  ExecMode exec = ExecMode::OpenMP;
};

struct CartpoleResult {
  std::vector<double> tail_mean_identity;  // per paired seed
  std::vector<double> tail_mean_drm;
  int drm_wins = 0;  // seeds where the DRM variant's tail mean is >= identity's
};

/// Paired-seed comparison of risk-neutral CRPN vs CRPN-DRM on cart pole.
CartpoleResult run_cartpole_compare(const CartpoleOptions& opts);

struct MseRatesOptions {
  int replications = 200;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<int> batch_sizes = {25, 100, 400};
  ExecMode exec = ExecMode::OpenMP;
};

struct MseRatesResult {
  std::vector<int> batch_sizes;
  std::vector<double> grad_mse;
  std::vector<double> hess_mse;
  double grad_ratio_100_400 = 0.0;
  double hess_ratio_100_400 = 0.0;
  bool monotone = false;
  bool ratios_in_band = false;  // [2.5, 6] for the 100 -> 400 refinement
};

/// Gini-deviation estimator MSE versus batch size on a fixed enumerable MDP.
MseRatesResult run_mse_rates(const MseRatesOptions& opts);

struct SaddleEscapeOptions {
  std::uint64_t seed = 0;
  std::string out_dir;
  int trials = 10;      // CRPN escape attempts
  int iterations = 5;
  int batch = 200;
  double alpha = 10.0;
  int grad_batches = 1000;  // batches averaged for the first-order step
  ExecMode exec = ExecMode::OpenMP;
};

struct SaddleEscapeResult {
  std::vector<double> escape_distance;  // max ||theta|| over the short run
  int escaped = 0;                      // trials with distance > 0.1
  double mean_grad_step_norm = 0.0;     // || mean of first-order steps ||
  double lambda_max_exact = 0.0;        // dense-oracle eigenvalue at theta = 0
  double grad_norm_exact = 0.0;
  bool pass = false;
};

/// Saddle-escape scenario on the mirror MDP: CRPN must leave theta = 0 while
/// the expected first-order step stays near zero.
SaddleEscapeResult run_saddle_escape(const SaddleEscapeOptions& opts);

/// Aggregated cliff-walk policy map: per-cell action probabilities of the
/// mean-of-softmax policy over the given replication parameters.
std::string policy_map_json(const std::vector<Vec>& thetas,
                            const PolicySpec& spec);

}  // namespace drm
