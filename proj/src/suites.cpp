#include "drm/suites.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "drm/io.hpp"
#include "drm/oracle.hpp"

namespace drm {

namespace {

struct ReturnStats {
  double mean = 0.0, stdev = 0.0, min = 0.0, max = 0.0;
};

ReturnStats compute_stats(const std::vector<double>& xs) {
  ReturnStats out;
  if (xs.empty()) return out;
  out.min = xs[0];
  out.max = xs[0];
  double sum = 0.0;
  for (double x : xs) {
    sum += x;
    out.min = std::min(out.min, x);
    out.max = std::max(out.max, x);
  }
  out.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stdev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1))
                            : 0.0;
  return out;
}

}  // namespace

const AlgoSummary& CliffwalkResult::algo(const std::string& name) const {
  for (const auto& s : summary) {
    if (s.algorithm == name) return s;
  }
  throw ConfigError("no summary for algorithm '" + name + "'");
}

std::string policy_map_json(const std::vector<Vec>& thetas,
                            const PolicySpec& spec) {
  if (spec.family != PolicyFamily::TabularBoltzmann) {
    throw ConfigError("policy maps are defined for tabular policies");
  }
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (int s = 0; s < spec.state_count; ++s) {
    State state;
    state.id = s;
    Vec agg = Vec::Zero(spec.action_count);
    for (const auto& theta : thetas) {
      agg += action_probs(spec, theta, state);
    }
    agg /= static_cast<double>(thetas.size());
    std::vector<double> probs(agg.data(), agg.data() + agg.size());
    grid.push_back(probs);
  }
  nlohmann::ordered_json j;
  j["rows"] = CliffWalkEnv::kRows;
  j["cols"] = CliffWalkEnv::kCols;
  j["actions"] = {"up", "right", "down", "left"};
  j["cells"] = grid;  // row-major grid order
  return j.dump(2);
}

CliffwalkResult run_cliffwalk_table3(const CliffwalkOptions& opts) {
  if (opts.reps < 1) throw ConfigError("replications must be >= 1");
  const CliffWalkEnv env(opts.shaping_c);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);

  struct AlgoDef {
    std::string name;
    Algorithm algorithm;
    std::string distortion;
  };
  const std::vector<AlgoDef> algos = {
      {"reinforce", Algorithm::ReinforceDrm, "identity"},
      {"crpn", Algorithm::CrpnDrm, "identity"},
      {"reinforce_drm", Algorithm::ReinforceDrm, "gini_deviation"},
      {"crpn_drm", Algorithm::CrpnDrm, "gini_deviation"},
  };

  const int n_algos = static_cast<int>(algos.size());
  const int n_runs = n_algos * opts.reps;
  std::vector<OptimResult> results(n_runs);
  std::vector<std::vector<double>> eval_returns(n_runs);

  // Replications use disjoint seed streams, so they can run concurrently;
  // everything below the loop writes files in a fixed order.
  const bool outer_parallel = opts.exec == ExecMode::OpenMP;
#pragma omp parallel for schedule(dynamic, 1) if (outer_parallel)
  for (int run = 0; run < n_runs; ++run) {
    const int ai = run / opts.reps;
    const int rep = run % opts.reps;
    RunConfig config;
    config.algorithm = algos[ai].algorithm;
    config.distortion = algos[ai].distortion;
    config.iterations = opts.iterations;
    config.batch_m = opts.batch;
    config.batch_b = opts.batch;
    config.alpha = opts.alpha;
    config.seed = derive_seed(opts.seed, ai, rep);
    config.subproblem.max_step_scale = opts.trust_step_scale;
    config.subproblem.budget = opts.inner_budget;
    config.exec = outer_parallel ? ExecMode::Serial : opts.exec;
    results[run] = run_algorithm(env, spec, Vec::Zero(spec.dim()), config);
    eval_returns[run] =
        evaluate_policy(env, spec, results[run].theta, opts.eval_episodes,
                        derive_seed(opts.seed, ai, rep, 0xe0e0), config.exec);
  }

  ensure_dir(opts.out_dir);
  CliffwalkResult out;
  std::ostringstream summary_csv;
  summary_csv << "algorithm,mean,std,min,max,episodes\n";

  for (int ai = 0; ai < n_algos; ++ai) {
    const std::string algo_dir = opts.out_dir + "/" + algos[ai].name;
    ensure_dir(algo_dir);

    std::vector<double> pooled;
    std::ostringstream eval_csv;
    eval_csv << "rep,episode,return\n";
    std::vector<Vec> thetas;
    for (int rep = 0; rep < opts.reps; ++rep) {
      const int run = ai * opts.reps + rep;
      const std::string rep_dir = algo_dir + "/rep" + std::to_string(rep);
      ensure_dir(rep_dir);
      write_learning_curve_csv(rep_dir + "/learning_curve.csv",
                               results[run].log);
      write_text_file(rep_dir + "/policy_final.json",
                      policy_to_json(spec, results[run].theta));
      thetas.push_back(results[run].theta);
      for (std::size_t e = 0; e < eval_returns[run].size(); ++e) {
        eval_csv << rep << ',' << e << ','
                 << fmt_double(eval_returns[run][e]) << '\n';
        pooled.push_back(eval_returns[run][e]);
      }
    }
    write_text_file(algo_dir + "/eval_returns.csv", eval_csv.str());
    write_text_file(algo_dir + "/policy_map.json",
                    policy_map_json(thetas, spec));
    if (opts.dump_traces) {
      auto trajs = rollout_batch(env, spec, thetas.front(), 5,
                                 derive_seed(opts.seed, ai, 0xd0), 7,
                                 ExecMode::Serial);
      write_trajectories_jsonl(algo_dir + "/traces.jsonl", trajs, true);
    }

    const ReturnStats stats = compute_stats(pooled);
    AlgoSummary row{algos[ai].name, stats.mean,        stats.stdev,
                    stats.min,      stats.max,         static_cast<int>(pooled.size())};
    summary_csv << row.algorithm << ',' << fmt_double(row.mean) << ','
                << fmt_double(row.stdev) << ',' << fmt_double(row.min) << ','
                << fmt_double(row.max) << ',' << row.episodes << '\n';
    out.summary.push_back(row);
  }
  write_text_file(opts.out_dir + "/summary.csv", summary_csv.str());

  // Invariant: the summary must be recomputable from the raw eval CSVs.
  out.cross_check_ok = true;
  for (const auto& row : out.summary) {
    const CsvTable raw =
        read_csv(opts.out_dir + "/" + row.algorithm + "/eval_returns.csv");
    std::vector<double> values;
    values.reserve(raw.rows.size());
    for (const auto& cells : raw.rows) values.push_back(std::stod(cells[2]));
    const ReturnStats stats = compute_stats(values);
    const bool ok = static_cast<int>(values.size()) == row.episodes &&
                    std::abs(stats.mean - row.mean) < 1e-9 &&
                    std::abs(stats.stdev - row.stdev) < 1e-9 &&
                    stats.min == row.min && stats.max == row.max;
    out.cross_check_ok = out.cross_check_ok && ok;
  }
  return out;
}

CartpoleResult run_cartpole_compare(const CartpoleOptions& opts) {
  const CartPoleEnv env;
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::LinearBoltzmann);
  const std::vector<std::string> variants = {"identity", opts.drm};

  const int n_runs = 2 * opts.seeds;
  std::vector<OptimResult> results(n_runs);
  const bool outer_parallel = opts.exec == ExecMode::OpenMP;
#pragma omp parallel for schedule(dynamic, 1) if (outer_parallel)
  for (int run = 0; run < n_runs; ++run) {
    const int vi = run / opts.seeds;
    const int rep = run % opts.seeds;
    RunConfig config;
    config.algorithm = Algorithm::CrpnDrm;
    config.distortion = variants[vi];
    config.iterations = opts.iterations;
    config.batch_m = opts.batch;
    config.batch_b = opts.batch;
    config.alpha = opts.alpha;
    // Paired seeds: the same rep index draws the same trajectory stream for
    // both variants.
    config.seed = derive_seed(opts.seed, 0xca41, rep);
    config.exec = outer_parallel ? ExecMode::Serial : opts.exec;
    results[run] = run_algorithm(env, spec, Vec::Zero(spec.dim()), config);
  }

  ensure_dir(opts.out_dir);
  auto tail_mean = [&](const OptimResult& r) {
    const int n = static_cast<int>(r.log.size());
    const int from = std::max(0, n - opts.tail_iters);
    double sum = 0.0;
    for (int k = from; k < n; ++k) sum += r.log[k].ret_mean;
    return n > from ? sum / (n - from) : 0.0;
  };

  CartpoleResult out;
  std::ostringstream csv;
  csv << "variant,seed,tail_mean_return\n";
  for (int vi = 0; vi < 2; ++vi) {
    const std::string var_dir = opts.out_dir + "/" + variants[vi];
    for (int rep = 0; rep < opts.seeds; ++rep) {
      const int run = vi * opts.seeds + rep;
      const std::string rep_dir = var_dir + "/rep" + std::to_string(rep);
      ensure_dir(rep_dir);
      write_learning_curve_csv(rep_dir + "/learning_curve.csv",
                               results[run].log);
      write_text_file(rep_dir + "/policy_final.json",
                      policy_to_json(spec, results[run].theta));
      const double tm = tail_mean(results[run]);
      csv << variants[vi] << ',' << rep << ',' << fmt_double(tm) << '\n';
      (vi == 0 ? out.tail_mean_identity : out.tail_mean_drm).push_back(tm);
    }
  }
  for (int rep = 0; rep < opts.seeds; ++rep) {
    if (out.tail_mean_drm[rep] >= out.tail_mean_identity[rep]) ++out.drm_wins;
  }
  csv << "# drm_wins," << out.drm_wins << ",of " << opts.seeds << '\n';
  write_text_file(opts.out_dir + "/summary.csv", csv.str());
  return out;
}

MseRatesResult run_mse_rates(const MseRatesOptions& opts) {
  // Fixed enumerable MDP and a mildly non-uniform policy point.
  const ChainMdpEnv env = make_random_chain_mdp(3, 2, 3, 1.0, 2024);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  Vec theta(spec.dim());
  Rng rng(derive_seed(opts.seed, 0x315));
  for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-0.3, 0.3);
  const Distortion gini = Distortion::catalog("gini_deviation");

  MseRatesResult out;
  out.batch_sizes = opts.batch_sizes;
  for (std::size_t bi = 0; bi < opts.batch_sizes.size(); ++bi) {
    const int m = opts.batch_sizes[bi];
    const auto grad_check = estimator_bias_check(
        env, spec, theta, gini, EstimatorKind::GradientFull, m,
        opts.replications, derive_seed(opts.seed, 1, bi), opts.exec);
    const auto hess_check = estimator_bias_check(
        env, spec, theta, gini, EstimatorKind::HessianFull, m,
        opts.replications, derive_seed(opts.seed, 2, bi), opts.exec);
    out.grad_mse.push_back(grad_check.mse);
    out.hess_mse.push_back(hess_check.mse);
  }

  out.monotone = true;
  for (std::size_t i = 1; i < out.grad_mse.size(); ++i) {
    out.monotone = out.monotone && out.grad_mse[i] < out.grad_mse[i - 1] &&
                   out.hess_mse[i] < out.hess_mse[i - 1];
  }
  // Locate the 100 and 400 entries for the rate band.
  int i100 = -1, i400 = -1;
  for (std::size_t i = 0; i < out.batch_sizes.size(); ++i) {
    if (out.batch_sizes[i] == 100) i100 = static_cast<int>(i);
    if (out.batch_sizes[i] == 400) i400 = static_cast<int>(i);
  }
  if (i100 >= 0 && i400 >= 0) {
    out.grad_ratio_100_400 = out.grad_mse[i100] / out.grad_mse[i400];
    out.hess_ratio_100_400 = out.hess_mse[i100] / out.hess_mse[i400];
    out.ratios_in_band = out.grad_ratio_100_400 >= 2.5 &&
                         out.grad_ratio_100_400 <= 6.0 &&
                         out.hess_ratio_100_400 >= 2.5 &&
                         out.hess_ratio_100_400 <= 6.0;
  }

  if (!opts.out_dir.empty()) {
    ensure_dir(opts.out_dir);
    std::ostringstream csv;
    csv << "batch_size,grad_mse,hess_mse\n";
    for (std::size_t i = 0; i < out.batch_sizes.size(); ++i) {
      csv << out.batch_sizes[i] << ',' << fmt_double(out.grad_mse[i]) << ','
          << fmt_double(out.hess_mse[i]) << '\n';
    }
    write_text_file(opts.out_dir + "/mse_rates.csv", csv.str());
  }
  return out;
}

SaddleEscapeResult run_saddle_escape(const SaddleEscapeOptions& opts) {
  const ChainMdpEnv env = make_saddle_mirror_mdp(1.0);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::LinearBoltzmann);
  const Vec theta0 = Vec::Zero(spec.dim());
  const Distortion identity = Distortion::catalog("identity");

  SaddleEscapeResult out;
  {
    const ExactDistribution dist = enumerate_distribution(env, spec, theta0);
    const ExactDerivatives exact = exact_drm_grad_hess(dist, identity);
    out.grad_norm_exact = exact.grad.norm();
    const Eigen::SelfAdjointEigenSolver<Mat> eig(exact.hess);
    out.lambda_max_exact = eig.eigenvalues().maxCoeff();
  }

  // CRPN escape attempts.
  out.escape_distance.resize(opts.trials, 0.0);
  const bool outer_parallel = opts.exec == ExecMode::OpenMP;
#pragma omp parallel for schedule(dynamic, 1) if (outer_parallel)
  for (int trial = 0; trial < opts.trials; ++trial) {
    RunConfig config;
    config.algorithm = Algorithm::CrpnDrm;
    config.distortion = "identity";
    config.iterations = opts.iterations;
    config.batch_m = opts.batch;
    config.batch_b = opts.batch;
    config.alpha = opts.alpha;
    config.seed = derive_seed(opts.seed, 0x5add, trial);
    config.exec = outer_parallel ? ExecMode::Serial : opts.exec;
    config.track_lambda_max = false;
    const OptimResult result = run_algorithm(env, spec, theta0, config);
    out.escape_distance[trial] = (result.theta - theta0).norm();
  }
  for (double dist : out.escape_distance) {
    if (dist > 0.1) ++out.escaped;
  }

  // Expected first-order step at the saddle.
  Vec mean_step = Vec::Zero(spec.dim());
  for (int b = 0; b < opts.grad_batches; ++b) {
    auto trajs = rollout_batch(env, spec, theta0, opts.batch,
                               derive_seed(opts.seed, 0x9bad, b),
                               /*stream=*/3, opts.exec);
    const SortedBatch batch = SortedBatch::from_trajectories(
        spec, theta0, std::move(trajs), MrMode::BatchMax,
        env.spec().return_bound(), opts.exec);
    const Vec g = drm_gradient_vr(batch, identity);
    const double gn = g.norm();
    if (gn > 0.0) mean_step += std::sqrt(2.0 / (opts.alpha * gn)) * g;
  }
  mean_step /= static_cast<double>(opts.grad_batches);
  out.mean_grad_step_norm = mean_step.norm();

  out.pass = out.escaped * 10 >= opts.trials * 9 &&
             out.mean_grad_step_norm < 0.01 && out.lambda_max_exact > 0.0 &&
             out.grad_norm_exact < 1e-10;

  if (!opts.out_dir.empty()) {
    ensure_dir(opts.out_dir);
    nlohmann::ordered_json j;
    j["lambda_max_exact"] = out.lambda_max_exact;
    j["grad_norm_exact"] = out.grad_norm_exact;
    j["escape_distance"] = out.escape_distance;
    j["escaped"] = out.escaped;
    j["trials"] = opts.trials;
    j["mean_grad_step_norm"] = out.mean_grad_step_norm;
    j["pass"] = out.pass;
    write_text_file(opts.out_dir + "/saddle_escape.json", j.dump(2));
  }
  return out;
}

}  // namespace drm
