#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "drm/io.hpp"
#include "drm/suites.hpp"

using namespace drm;

namespace {
const std::string kOut = "test_suites_out";
}

TEST_CASE("policy map aggregation") {
  const PolicySpec spec = PolicySpec::tabular(48, 4);
  // Uniform policies aggregate to 0.25 everywhere.
  std::vector<Vec> uniform = {Vec::Zero(spec.dim()), Vec::Zero(spec.dim())};
  const std::string json = policy_map_json(uniform, spec);
  CHECK(json.find("0.25") != std::string::npos);

  // Aggregating identical policies equals the single policy.
  Vec theta = Vec::Zero(spec.dim());
  theta[0] = 1.3;
  theta[5] = -0.4;
  const std::string one = policy_map_json({theta}, spec);
  const std::string two = policy_map_json({theta, theta}, spec);
  CHECK(one == two);
}

TEST_CASE("config file parsing") {
  const std::string text = "alpha = 2500\n# comment\n distortion= gini_deviation \n";
  const auto cfg = parse_config_text(text);
  CHECK(cfg.at("alpha") == "2500");
  CHECK(cfg.at("distortion") == "gini_deviation");
  CHECK_THROWS_AS(parse_config_text("not a pair\n"), ConfigError);
}

TEST_CASE("trajectory JSONL export") {
  Trajectory traj;
  State a, b;
  a.id = 3;
  b.id = 4;
  traj.states = {a, b};
  traj.actions = {1};
  traj.rewards = {-1.5};
  traj.rewards_default = {-1.0};
  traj.ret = -1.5;
  traj.ret_default = -1.0;
  ensure_dir(kOut);
  write_trajectories_jsonl(kOut + "/traces.jsonl", {traj}, true);
  const std::string text = read_text_file(kOut + "/traces.jsonl");
  CHECK(text.find("\"states\":[3,4]") != std::string::npos);
  CHECK(text.find("\"actions\":[1]") != std::string::npos);
  CHECK(text.find("\"return\":-1.5") != std::string::npos);
}

TEST_CASE("learning curve CSV round trip") {
  std::vector<IterationLog> log(2);
  log[0].k = 0;
  log[0].drm_estimate = 1.25;
  log[1].k = 1;
  log[1].ret_mean = -16.125;
  ensure_dir(kOut);
  write_learning_curve_csv(kOut + "/curve.csv", log);
  const CsvTable table = read_csv(kOut + "/curve.csv");
  REQUIRE(table.rows.size() == 2);
  CHECK(table.header.size() == 9);
  CHECK(std::stod(table.rows[0][1]) == 1.25);
  CHECK(std::stod(table.rows[1][5]) == -16.125);
}

TEST_CASE("mse rates suite: decaying errors and in-band ratios") {
  MseRatesOptions opts;
  opts.replications = 60;  // reduced scale for the unit suite
  opts.seed = 12;
  opts.out_dir = kOut + "/mse";
  const MseRatesResult r = run_mse_rates(opts);
  REQUIRE(r.grad_mse.size() == 3);
  CHECK(r.monotone);
  CHECK(r.grad_ratio_100_400 > 1.5);
  CHECK(r.hess_ratio_100_400 > 1.5);
  CHECK(std::filesystem::exists(opts.out_dir + "/mse_rates.csv"));
}

TEST_CASE("saddle escape suite passes at reduced scale") {
  SaddleEscapeOptions opts;
  opts.seed = 31;
  opts.out_dir = kOut + "/saddle";
  opts.trials = 4;
  opts.grad_batches = 200;
  const SaddleEscapeResult r = run_saddle_escape(opts);
  CHECK(r.lambda_max_exact == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.grad_norm_exact < 1e-12);
  CHECK(r.escaped == 4);
  CHECK(r.mean_grad_step_norm < 0.02);
  CHECK(std::filesystem::exists(opts.out_dir + "/saddle_escape.json"));
}

TEST_CASE("cliffwalk suite writes rerun-stable artifacts at toy scale") {
  CliffwalkOptions opts;
  opts.reps = 1;
  opts.seed = 5;
  opts.iterations = 30;
  opts.eval_episodes = 50;
  opts.out_dir = kOut + "/cw_a";
  opts.dump_traces = true;
  const CliffwalkResult a = run_cliffwalk_table3(opts);
  CHECK(a.cross_check_ok);
  CHECK(a.summary.size() == 4);
  for (const auto& row : a.summary) CHECK(row.episodes == 50);

  opts.out_dir = kOut + "/cw_b";
  const CliffwalkResult b = run_cliffwalk_table3(opts);
  for (const auto* file :
       {"/summary.csv", "/crpn/eval_returns.csv", "/crpn/policy_map.json",
        "/crpn/rep0/learning_curve.csv", "/crpn/rep0/policy_final.json",
        "/crpn/traces.jsonl"}) {
    const std::string fa = read_text_file(kOut + "/cw_a" + file);
    const std::string fb = read_text_file(kOut + "/cw_b" + file);
    CHECK(fa == fb);
    CHECK(!fa.empty());
  }
  CHECK(a.algo("crpn").mean == b.algo("crpn").mean);
}

TEST_CASE("cartpole suite runs paired seeds at toy scale") {
  CartpoleOptions opts;
  opts.seeds = 2;
  opts.seed = 3;
  opts.iterations = 5;
  opts.batch = 30;
  opts.tail_iters = 3;
  opts.out_dir = kOut + "/cp";
  const CartpoleResult r = run_cartpole_compare(opts);
  CHECK(r.tail_mean_identity.size() == 2);
  CHECK(r.tail_mean_drm.size() == 2);
  CHECK(std::filesystem::exists(opts.out_dir + "/summary.csv"));
  CHECK(std::filesystem::exists(opts.out_dir +
                                "/gini_deviation/rep1/learning_curve.csv"));
}
