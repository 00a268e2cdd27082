#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "drm/batch.hpp"
#include "drm/envs.hpp"
#include "drm/policies.hpp"

using namespace drm;

namespace {

// Walks a fixed action sequence through the environment with a dummy RNG and
// returns the default-reward sum.
double scripted_return(const Env& env, const std::vector<int>& actions) {
  Rng rng(0);
  State s = env.reset(rng);
  double total = 0.0;
  for (int a : actions) {
    const StepResult step = env.step(s, a, rng);
    total += step.reward_default;
    s = step.next;
    if (step.done) break;
  }
  return total;
}

}  // namespace

TEST_CASE("cliff walk reference paths") {
  const CliffWalkEnv env(0.5);
  // Shortest risky path: up, 11 x right, down.
  std::vector<int> risky = {0};
  for (int i = 0; i < 11; ++i) risky.push_back(1);
  risky.push_back(2);
  CHECK(scripted_return(env, risky) == -12.0);

  // Safe border path: 3 x up, 11 x right, 3 x down.
  std::vector<int> safe = {0, 0, 0};
  for (int i = 0; i < 11; ++i) safe.push_back(1);
  for (int i = 0; i < 3; ++i) safe.push_back(2);
  CHECK(scripted_return(env, safe) == -16.0);
}

TEST_CASE("cliff walk fall teleports without terminating") {
  const CliffWalkEnv env(0.5);
  Rng rng(0);
  State s = env.reset(rng);
  const StepResult fall = env.step(s, 1, rng);  // right from start -> cliff
  CHECK(fall.reward_default == -100.0);
  CHECK_FALSE(fall.done);
  CHECK(fall.next.id == CliffWalkEnv::cell(3, 0));
  // Falling once on the risky path and then completing lands near -123.
  std::vector<int> fall_then_go = {1, 0};
  for (int i = 0; i < 11; ++i) fall_then_go.push_back(1);
  fall_then_go.push_back(2);
  CHECK(scripted_return(env, fall_then_go) == -112.0);
}

TEST_CASE("cliff walk shaped reward subtracts the goal distance") {
  const CliffWalkEnv env(0.5);
  Rng rng(0);
  State s = env.reset(rng);
  const StepResult up = env.step(s, 0, rng);  // (3,0) -> (2,0): distance 12
  CHECK(up.reward_default == -1.0);
  CHECK(up.reward == doctest::Approx(-1.0 - 0.5 * 12.0));
  // Goal entry: reward 0 on both streams (distance 0).
  State near_goal;
  near_goal.id = CliffWalkEnv::cell(2, 11);
  const StepResult into_goal = env.step(near_goal, 2, rng);
  CHECK(into_goal.reward_default == 0.0);
  CHECK(into_goal.reward == 0.0);
  CHECK(into_goal.done);
}

TEST_CASE("cliff walk truncates at 250 steps") {
  const CliffWalkEnv env(0.5);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  Vec theta = Vec::Zero(spec.dim());
  // Bias strongly toward "left": the agent hugs the wall and never ends.
  for (int s = 0; s < spec.state_count; ++s) theta[s * 4 + 3] = 25.0;
  const Trajectory traj = rollout(env, spec, theta, 3);
  CHECK(traj.actions.size() == 250);
  CHECK(traj.ret_default == -250.0);
}

TEST_CASE("cart pole survives with alternating actions from rest") {
  // Independent simulation of the published dynamics as the oracle.
  double x = 0, xd = 0, th = 0, thd = 0;
  int alive = 0;
  for (int t = 0; t < 30; ++t) {
    const double force = (t % 2 == 0) ? 10.0 : -10.0;
    const double cost = std::cos(th), sint = std::sin(th);
    const double tmp = (force + 0.05 * thd * thd * sint) / 1.1;
    const double thacc =
        (9.8 * sint - cost * tmp) / (0.5 * (4.0 / 3.0 - 0.1 * cost * cost / 1.1));
    const double xacc = tmp - 0.05 * thacc * cost / 1.1;
    x += 0.02 * xd;
    xd += 0.02 * xacc;
    th += 0.02 * thd;
    thd += 0.02 * thacc;
    if (std::abs(x) > 2.4 || std::abs(th) > 12.0 * 2 * M_PI / 360.0) break;
    ++alive;
  }
  CHECK(alive >= 10);

  // The environment must reproduce the same trace from a zero state.
  const CartPoleEnv env;
  Rng rng(0);
  State s;
  s.feat.setZero();
  int env_alive = 0;
  for (int t = 0; t < 30; ++t) {
    const StepResult step = env.step(s, t % 2 == 0 ? 1 : 0, rng);
    if (step.done) break;
    ++env_alive;
    s = step.next;
  }
  CHECK(env_alive == alive);
}

TEST_CASE("cart pole returns stay within [0, 500]") {
  const CartPoleEnv env;
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::LinearBoltzmann);
  Vec theta = Vec::Zero(spec.dim());
  for (int i = 0; i < 30; ++i) {
    const Trajectory traj = rollout(env, spec, theta, 100 + i);
    CHECK(traj.ret_default >= 0.0);
    CHECK(traj.ret_default <= 500.0);
  }
}

TEST_CASE("uniform random cart-pole policy scores about 20-25") {
  const CartPoleEnv env;
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::LinearBoltzmann);
  const Vec theta = Vec::Zero(spec.dim());
  const auto returns =
      evaluate_policy(env, spec, theta, 1000, 12345, ExecMode::OpenMP);
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= returns.size();
  CHECK(mean >= 18.0);
  CHECK(mean <= 27.0);
}

TEST_CASE("chain MDP enforces the enumeration caps") {
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans(
      6, std::vector<std::vector<std::pair<int, double>>>(
             1, std::vector<std::pair<int, double>>{{0, 1.0}}));
  std::vector<std::vector<std::vector<double>>> rew(
      6, std::vector<std::vector<double>>(1, std::vector<double>(6, 0.0)));
  CHECK_THROWS_AS(
      ChainMdpEnv(6, 1, 2, std::move(trans), std::move(rew), 1.0),
      ConfigError);
}

TEST_CASE("two-armed bandit produces the expected return atoms") {
  const ChainMdpEnv env = make_two_armed_bandit();
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  const Vec theta = Vec::Zero(spec.dim());
  int zeros = 0, ones = 0;
  for (int i = 0; i < 4000; ++i) {
    const Trajectory traj = rollout(env, spec, theta, derive_seed(17, i));
    if (traj.ret == 1.0) ++ones;
    else if (traj.ret == 0.0) ++zeros;
  }
  CHECK(zeros + ones == 4000);
  // Arm 2 is chosen half the time and pays 1 half of that.
  CHECK(ones > 800);
  CHECK(ones < 1200);
}

TEST_CASE("returns are recomputable from the reward streams") {
  const CliffWalkEnv env(0.5);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  const Vec theta = Vec::Zero(spec.dim());
  for (int i = 0; i < 10; ++i) {
    const Trajectory traj = rollout(env, spec, theta, derive_seed(5, i));
    double ret = 0.0, ret_default = 0.0, disc = 1.0;
    for (std::size_t t = 0; t < traj.rewards.size(); ++t) {
      ret += disc * traj.rewards[t];
      ret_default += traj.rewards_default[t];
      disc *= env.spec().gamma;
    }
    CHECK(traj.ret == doctest::Approx(ret).epsilon(1e-12));
    CHECK(traj.ret_default == doctest::Approx(ret_default).epsilon(1e-12));
    CHECK(std::abs(traj.ret) <= env.spec().return_bound());
    CHECK(traj.states.size() == traj.actions.size() + 1);
  }
}

TEST_CASE("rollouts are deterministic given the seed") {
  const CliffWalkEnv env(0.5);
  const PolicySpec spec = PolicySpec::for_env(env, PolicyFamily::TabularBoltzmann);
  Vec theta(spec.dim());
  Rng rng(3);
  for (int i = 0; i < theta.size(); ++i) theta[i] = rng.uniform(-1.0, 1.0);
  const Trajectory a = rollout(env, spec, theta, 777);
  const Trajectory b = rollout(env, spec, theta, 777);
  REQUIRE(a.actions.size() == b.actions.size());
  CHECK(a.ret == b.ret);
  for (std::size_t t = 0; t < a.actions.size(); ++t) {
    CHECK(a.actions[t] == b.actions[t]);
    CHECK(a.states[t].id == b.states[t].id);
  }
}

TEST_CASE("return bound handles gamma = 1 and gamma < 1") {
  MdpSpec spec;
  spec.r_max = 2.0;
  spec.horizon = 10;
  spec.gamma = 1.0;
  CHECK(spec.return_bound() == doctest::Approx(20.0));
  spec.gamma = 0.5;
  // min(r_max/(1-gamma), finite-horizon sum) = min(4, ~4) -> finite sum.
  CHECK(spec.return_bound() ==
        doctest::Approx(2.0 * (1.0 - std::pow(0.5, 10)) / 0.5));
}
