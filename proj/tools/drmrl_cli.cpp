// Command-line experiment runner.
//
//   drmrl run --suite <id> --reps <n> --seed <s> --out <dir> [--config <file>]
//   drmrl validate [--seed <s>] [--out <dir>]
//   drmrl constants --eps <eps> --env <id> [--rho-gap <g>]
//
// Exit codes: 0 success, 1 check failure, 2 configuration error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "drm/acceptance.hpp"
#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"
#include "drm/io.hpp"
#include "drm/policies.hpp"
#include "drm/solver.hpp"
#include "drm/suites.hpp"

namespace {

using drm::ConfigError;

int get_int(const std::map<std::string, std::string>& cfg,
            const std::string& key, int fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : std::stoi(it->second);
}

double get_double(const std::map<std::string, std::string>& cfg,
                  const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : std::stod(it->second);
}

std::string get_str(const std::map<std::string, std::string>& cfg,
                    const std::string& key, const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

int report_criteria(const std::vector<drm::CriterionResult>& results,
                    const std::string& out_dir) {
  bool all_pass = true;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    std::printf("[%s] criterion %d (%s): %s  [%.1fs]\n",
                r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(),
                r.detail.c_str(), r.seconds);
    all_pass = all_pass && r.pass;
    checks.push_back({{"id", r.id},
                      {"name", r.name},
                      {"pass", r.pass},
                      {"detail", r.detail}});
  }
  if (!out_dir.empty()) {
    drm::ensure_dir(out_dir);
    nlohmann::ordered_json doc;
    doc["all_pass"] = all_pass;
    doc["checks"] = checks;
    drm::write_text_file(out_dir + "/oracle_report.json", doc.dump(2));
  }
  return all_pass ? 0 : 1;
}

int run_suite_command(const std::string& suite, int reps, std::uint64_t seed,
                      const std::string& out_dir,
                      const std::map<std::string, std::string>& cfg) {
  if (suite == "cliffwalk_table3") {
    drm::CliffwalkOptions opts;
    if (reps > 0) opts.reps = reps;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.iterations = get_int(cfg, "iterations", opts.iterations);
    opts.batch = get_int(cfg, "batch", opts.batch);
    opts.alpha = get_double(cfg, "alpha", opts.alpha);
    opts.shaping_c = get_double(cfg, "shaping_c", opts.shaping_c);
    opts.eval_episodes = get_int(cfg, "eval_episodes", opts.eval_episodes);
    opts.dump_traces = get_int(cfg, "dump_traces", 0) != 0;
    const drm::CliffwalkResult r = drm::run_cliffwalk_table3(opts);
    for (const auto& row : r.summary) {
      std::printf("%-14s mean %8.2f  std %6.2f  min %8.1f  max %8.1f\n",
                  row.algorithm.c_str(), row.mean, row.stdev, row.min, row.max);
    }
    return r.cross_check_ok ? 0 : 1;
  }
  if (suite == "cartpole_compare") {
    drm::CartpoleOptions opts;
    if (reps > 0) opts.seeds = reps;
    opts.seed = seed;
    opts.out_dir = out_dir;
    opts.iterations = get_int(cfg, "iterations", opts.iterations);
    opts.batch = get_int(cfg, "batch", opts.batch);
    opts.alpha = get_double(cfg, "alpha", opts.alpha);
    opts.drm = get_str(cfg, "distortion", opts.drm);
    const drm::CartpoleResult r = drm::run_cartpole_compare(opts);
    std::printf("drm variant (%s) wins %d/%d paired seeds\n", opts.drm.c_str(),
                r.drm_wins, opts.seeds);
    return 0;
  }
  if (suite == "oracle_validation") {
    drm::AcceptanceOptions opts;
    opts.seed = seed;
    opts.scratch_dir = out_dir;
    return report_criteria(
        drm::run_acceptance(drm::oracle_validation_criteria(), opts), out_dir);
  }
  if (suite == "mse_rates") {
    drm::MseRatesOptions opts;
    if (reps > 0) opts.replications = reps;
    opts.seed = seed;
    opts.out_dir = out_dir;
    const drm::MseRatesResult r = drm::run_mse_rates(opts);
    for (std::size_t i = 0; i < r.batch_sizes.size(); ++i) {
      std::printf("batch %4d: grad mse %.3e  hess mse %.3e\n", r.batch_sizes[i],
                  r.grad_mse[i], r.hess_mse[i]);
    }
    std::printf("ratios 100->400: grad %.2f hess %.2f\n", r.grad_ratio_100_400,
                r.hess_ratio_100_400);
    return r.monotone && r.ratios_in_band ? 0 : 1;
  }
  if (suite == "saddle_escape") {
    drm::SaddleEscapeOptions opts;
    opts.seed = seed;
    opts.out_dir = out_dir;
    if (reps > 0) opts.trials = reps;
    const drm::SaddleEscapeResult r = drm::run_saddle_escape(opts);
    std::printf("escaped %d/%d trials, mean first-order step %.4f, "
                "lambda_max %.3f\n",
                r.escaped, opts.trials, r.mean_grad_step_norm,
                r.lambda_max_exact);
    return r.pass ? 0 : 1;
  }
  throw ConfigError("unknown suite '" + suite + "'");
}

int constants_command(double eps, const std::string& env_id, double rho_gap) {
  std::unique_ptr<drm::Env> env;
  drm::PolicySpec spec;
  if (env_id == "cliff_walk") {
    env = std::make_unique<drm::CliffWalkEnv>();
    spec = drm::PolicySpec::for_env(*env, drm::PolicyFamily::TabularBoltzmann);
  } else if (env_id == "cart_pole") {
    env = std::make_unique<drm::CartPoleEnv>();
    spec = drm::PolicySpec::for_env(*env, drm::PolicyFamily::LinearBoltzmann);
  } else if (env_id == "saddle_mirror") {
    env = std::make_unique<drm::ChainMdpEnv>(drm::make_saddle_mirror_mdp());
    spec = drm::PolicySpec::for_env(*env, drm::PolicyFamily::LinearBoltzmann);
  } else {
    throw ConfigError("unknown env '" + env_id + "'");
  }
  const drm::Distortion gini = drm::Distortion::catalog("gini_deviation");
  const drm::TheoryConstants c = drm::mse_constants(
      drm::assumption_bounds(spec), gini.derivative_bounds(),
      env->spec().return_bound(), env->spec().horizon, spec.dim());
  const drm::TheoreticalSchedule s = drm::theoretical_schedule(eps, c, rho_gap);
  std::printf("G_H      %.6e\nL_H      %.6e\nkappa1   %.6e\nkappa2   %.6e\n"
              "kappa3   %.6e\nt1       %.6e\nt2       %.6e\nC(d)     %.6f\n",
              c.g_h, c.l_h, c.kappa1, c.kappa2, c.kappa3, c.t1, c.t2, c.c_d);
  std::printf("alpha    %.6e\nN        %.6e\nm        %.6e\nb        %.6e\n"
              "total gradient samples %.6e\n",
              s.alpha, s.iterations, s.batch_m, s.batch_b,
              s.total_gradient_samples);
  std::printf("epsilon bound %.6e -> eps %s admissible\n", s.epsilon_bound,
              s.epsilon_admissible ? "is" : "is NOT");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive policy optimization with distortion riskmetrics"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment suite");
  std::string suite;
  int reps = 0;  // 0 = suite default
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string config_path;
  run->add_option("--suite", suite, "suite id")->required();
  run->add_option("--reps", reps, "replication count (0 = suite default)");
  run->add_option("--seed", seed, "base seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--config", config_path, "key=value config file");

  auto* validate = app.add_subcommand(
      "validate", "Run the oracle validation and property suites");
  std::uint64_t vseed = 0;
  std::string vout = "validate_out";
  validate->add_option("--seed", vseed, "base seed");
  validate->add_option("--out", vout, "output directory");

  auto* constants = app.add_subcommand(
      "constants", "Evaluate the theoretical schedule calculator");
  double eps = 0.1;
  std::string env_id = "cliff_walk";
  double rho_gap = 1.0;
  constants->add_option("--eps", eps, "target stationarity epsilon")->required();
  constants->add_option("--env", env_id, "environment id");
  constants->add_option("--rho-gap", rho_gap, "rho(theta0) - rho* gap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      std::map<std::string, std::string> cfg;
      if (!config_path.empty()) cfg = drm::parse_config_file(config_path);
      return run_suite_command(suite, reps, seed, out_dir, cfg);
    }
    if (validate->parsed()) {
      drm::AcceptanceOptions opts;
      opts.seed = vseed;
      opts.scratch_dir = vout;
      return report_criteria(
          drm::run_acceptance({1, 2, 3, 4, 5, 6, 8, 10}, opts), vout);
    }
    if (constants->parsed()) {
      return constants_command(eps, env_id, rho_gap);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
