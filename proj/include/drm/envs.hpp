#pragma once

#include <memory>
#include <string>
#include <vector>

#include "drm/common.hpp"

namespace drm {

/// Static description of a finite-horizon MDP.
struct MdpSpec {
  int state_count = 0;  // 0 for continuous-observation environments
  int obs_dim = 0;      // feature dimension when state_count == 0
  int action_count = 0;
  int horizon = 0;      // T: hard episode cap
  double gamma = 1.0;
  double r_max = 0.0;   // per-step |reward| bound (training stream)

  /// Finite-horizon return bound M_r. The infinite-horizon r_max/(1-gamma)
  /// is undefined at gamma = 1, so the horizon-limited bound is used there
  /// and the tighter of the two otherwise.
  double return_bound() const {
    if (gamma >= 1.0) return r_max * horizon;
    const double finite = r_max * (1.0 - std::pow(gamma, horizon)) / (1.0 - gamma);
    return std::min(r_max / (1.0 - gamma), finite);
  }
};

/// Environment observation: discrete index or feature vector, depending on
/// the environment family.
struct State {
  int id = 0;
  Eigen::Vector4d feat = Eigen::Vector4d::Zero();
};

struct StepResult {
  State next;
  double reward = 0.0;          // training reward (may be shaped)
  double reward_default = 0.0;  // unshaped reward used for all metrics
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;
  const MdpSpec& spec() const { return spec_; }
  virtual std::string name() const = 0;
  virtual State reset(Rng& rng) const = 0;
  virtual StepResult step(const State& s, int action, Rng& rng) const = 0;

 protected:
  MdpSpec spec_;
};

/// One complete episode. `ret` is the discounted sum of the training rewards
/// (the optimization objective); `ret_default` is the undiscounted sum of the
/// default rewards (the reporting metric).
struct Trajectory {
  std::vector<State> states;   // length T+1
  std::vector<int> actions;    // length T
  std::vector<double> rewards;          // training stream, length T
  std::vector<double> rewards_default;  // metric stream, length T
  double ret = 0.0;
  double ret_default = 0.0;
};

/// 4x12 cliff-walking grid with the distance-shaped training reward
///   r_modified = r_default - c * L1(next, goal).
/// Default rewards: -1 per step, -100 on stepping into the cliff (which
/// teleports the agent back to the start without ending the episode), 0 on
/// reaching the goal. Episodes truncate after 250 steps.
class CliffWalkEnv : public Env {
 public:
  static constexpr int kRows = 4;
  static constexpr int kCols = 12;
  static constexpr int kMaxSteps = 250;

  explicit CliffWalkEnv(double shaping_c = 0.5);
  std::string name() const override { return "cliff_walk"; }
  State reset(Rng& rng) const override;
  StepResult step(const State& s, int action, Rng& rng) const override;

  double shaping_c() const { return c_; }
  static int cell(int row, int col) { return row * kCols + col; }

 private:
  double c_;
};

/// Standard cart-pole balance task: Euler integration at 0.02 s, force +-10,
/// failure at |x| > 2.4 or |angle| > 12 deg, +1 per surviving step, horizon
/// 500, two actions.
class CartPoleEnv : public Env {
 public:
  CartPoleEnv();
  std::string name() const override { return "cart_pole"; }
  State reset(Rng& rng) const override;
  StepResult step(const State& s, int action, Rng& rng) const override;
};

/// Small tabular MDP with explicit transition and reward tables, sized for
/// exhaustive trajectory enumeration by the oracle module.
class ChainMdpEnv : public Env {
 public:
  /// transitions[s][a] lists (next_state, probability); rewards[s][a][s'].
  ChainMdpEnv(int n_states, int n_actions, int horizon,
              std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions,
              std::vector<std::vector<std::vector<double>>> rewards,
              double gamma, int start_state = 0);

  std::string name() const override { return "chain_mdp"; }
  State reset(Rng& rng) const override;
  StepResult step(const State& s, int action, Rng& rng) const override;

  const std::vector<std::pair<int, double>>& successors(int s, int a) const {
    return transitions_[s][a];
  }
  double reward(int s, int a, int s2) const { return rewards_[s][a][s2]; }
  int start_state() const { return start_; }

  /// Optional per-state observation features (enables linear policies on
  /// enumerable MDPs); `obs_dim` entries of each vector are meaningful.
  void set_state_features(std::vector<Eigen::Vector4d> features, int obs_dim);
  State make_state(int id) const;

 private:
  std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions_;
  std::vector<std::vector<std::vector<double>>> rewards_;
  int start_;
  std::vector<Eigen::Vector4d> features_;
};

/// Enumeration caps for chain MDPs (full trajectory enumeration stays below
/// (nS*nA)^T paths).
constexpr int kChainMaxStates = 5;
constexpr int kChainMaxActions = 3;
constexpr int kChainMaxHorizon = 4;

// Ready-made chain MDPs used by the oracle and the test suites.
ChainMdpEnv make_two_armed_bandit();
ChainMdpEnv make_random_chain_mdp(int n_states, int n_actions, int horizon,
                                  double gamma, std::uint64_t seed);

/// Two-step "mirror" MDP whose uniform policy (theta = 0) is a strict saddle
/// of the expected return under a linear Boltzmann policy with obs_dim = 2:
/// the first action selects one of two branch states carrying opposite
/// features +-e2, and the second step pays +-scale by action. The objective
/// is exactly tanh(g1/2) tanh(g2/2) in the logit-difference coordinates, so
/// the gradient vanishes at 0 while the Hessian has eigenvalues +-scale/2.
ChainMdpEnv make_saddle_mirror_mdp(double reward_scale = 1.0);

}  // namespace drm
