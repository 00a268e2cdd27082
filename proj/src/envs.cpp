#include "drm/envs.hpp"

#include <cmath>

namespace drm {

// ---------------------------------------------------------------------------
// Cliff walking
// ---------------------------------------------------------------------------

CliffWalkEnv::CliffWalkEnv(double shaping_c) : c_(shaping_c) {
  if (c_ < 0.0) throw ConfigError("cliff shaping constant must be >= 0");
  spec_.state_count = kRows * kCols;
  spec_.obs_dim = 0;
  spec_.action_count = 4;  // up, right, down, left
  spec_.horizon = kMaxSteps;
  spec_.gamma = 1.0;
  // Worst-case single-step magnitude of the shaped stream: a cliff fall
  // followed by the distance penalty from the start cell.
  spec_.r_max = 100.0 + c_ * (kRows - 1 + kCols - 1);
}

State CliffWalkEnv::reset(Rng&) const {
  State s;
  s.id = cell(kRows - 1, 0);  // (3, 0)
  return s;
}

StepResult CliffWalkEnv::step(const State& s, int action, Rng&) const {
  const int row = s.id / kCols;
  const int col = s.id % kCols;
  int nr = row, nc = col;
  switch (action) {
    case 0: nr = std::max(row - 1, 0); break;            // up
    case 1: nc = std::min(col + 1, kCols - 1); break;    // right
    case 2: nr = std::min(row + 1, kRows - 1); break;    // down
    case 3: nc = std::max(col - 1, 0); break;            // left
    default: throw ConfigError("cliff walk: bad action");
  }

  const int goal_row = kRows - 1, goal_col = kCols - 1;
  StepResult out;
  if (nr == kRows - 1 && nc >= 1 && nc <= kCols - 2) {
    // Fell off the cliff: -100 and teleport to the start, episode continues.
    out.reward_default = -100.0;
    out.next.id = cell(kRows - 1, 0);
    out.done = false;
  } else if (nr == goal_row && nc == goal_col) {
    out.reward_default = 0.0;
    out.next.id = cell(nr, nc);
    out.done = true;
  } else {
    out.reward_default = -1.0;
    out.next.id = cell(nr, nc);
    out.done = false;
  }
  const int dist = std::abs(out.next.id / kCols - goal_row) +
                   std::abs(out.next.id % kCols - goal_col);
  out.reward = out.reward_default - c_ * dist;
  return out;
}

// ---------------------------------------------------------------------------
// Cart pole
// ---------------------------------------------------------------------------

namespace {
constexpr double kGravity = 9.8;
constexpr double kMassCart = 1.0;
constexpr double kMassPole = 0.1;
constexpr double kTotalMass = kMassCart + kMassPole;
constexpr double kPoleHalfLength = 0.5;
constexpr double kPoleMassLength = kMassPole * kPoleHalfLength;
constexpr double kForceMag = 10.0;
constexpr double kTau = 0.02;
constexpr double kAngleLimit = 12.0 * 2.0 * M_PI / 360.0;
constexpr double kXLimit = 2.4;
}  // namespace

CartPoleEnv::CartPoleEnv() {
  spec_.state_count = 0;
  spec_.obs_dim = 4;
  spec_.action_count = 2;
  spec_.horizon = 500;
  spec_.gamma = 0.99;
  spec_.r_max = 1.0;
}

State CartPoleEnv::reset(Rng& rng) const {
  State s;
  for (int i = 0; i < 4; ++i) s.feat[i] = rng.uniform(-0.05, 0.05);
  return s;
}

StepResult CartPoleEnv::step(const State& s, int action, Rng&) const {
  const double x = s.feat[0], x_dot = s.feat[1];
  const double theta = s.feat[2], theta_dot = s.feat[3];
  const double force = action == 1 ? kForceMag : -kForceMag;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);

  const double temp =
      (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  StepResult out;
  out.next.feat[0] = x + kTau * x_dot;
  out.next.feat[1] = x_dot + kTau * x_acc;
  out.next.feat[2] = theta + kTau * theta_dot;
  out.next.feat[3] = theta_dot + kTau * theta_acc;
  const bool failed = std::abs(out.next.feat[0]) > kXLimit ||
                      std::abs(out.next.feat[2]) > kAngleLimit;
  out.reward_default = 1.0;
  out.reward = 1.0;
  out.done = failed;
  return out;
}

// ---------------------------------------------------------------------------
// Chain MDP
// ---------------------------------------------------------------------------

ChainMdpEnv::ChainMdpEnv(
    int n_states, int n_actions, int horizon,
    std::vector<std::vector<std::vector<std::pair<int, double>>>> transitions,
    std::vector<std::vector<std::vector<double>>> rewards, double gamma,
    int start_state)
    : transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      start_(start_state) {
  if (n_states > kChainMaxStates || n_actions > kChainMaxActions ||
      horizon > kChainMaxHorizon) {
    throw ConfigError("chain MDP exceeds enumeration caps");
  }
  spec_.state_count = n_states;
  spec_.obs_dim = 0;
  spec_.action_count = n_actions;
  spec_.horizon = horizon;
  spec_.gamma = gamma;
  double r_max = 0.0;
  for (const auto& per_s : rewards_)
    for (const auto& per_a : per_s)
      for (double r : per_a) r_max = std::max(r_max, std::abs(r));
  spec_.r_max = r_max;
}

void ChainMdpEnv::set_state_features(std::vector<Eigen::Vector4d> features,
                                     int obs_dim) {
  if (static_cast<int>(features.size()) != spec_.state_count) {
    throw ConfigError("feature table must cover every state");
  }
  features_ = std::move(features);
  spec_.obs_dim = obs_dim;
}

State ChainMdpEnv::make_state(int id) const {
  State s;
  s.id = id;
  if (!features_.empty()) s.feat = features_[id];
  return s;
}

State ChainMdpEnv::reset(Rng&) const { return make_state(start_); }

StepResult ChainMdpEnv::step(const State& s, int action, Rng& rng) const {
  const auto& succ = transitions_[s.id][action];
  double u = rng.uniform01();
  int next = succ.back().first;
  double acc = 0.0;
  for (const auto& [s2, p] : succ) {
    acc += p;
    if (u < acc) {
      next = s2;
      break;
    }
  }
  StepResult out;
  out.next = make_state(next);
  out.reward = rewards_[s.id][action][next];
  out.reward_default = out.reward;
  out.done = false;
  return out;
}

ChainMdpEnv make_two_armed_bandit() {
  // One decision step; arm 0 pays 0, arm 1 pays 0 or 1 with probability 1/2.
  const int nS = 3, nA = 2, T = 1;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans(
      nS, std::vector<std::vector<std::pair<int, double>>>(nA));
  std::vector<std::vector<std::vector<double>>> rew(
      nS, std::vector<std::vector<double>>(nA, std::vector<double>(nS, 0.0)));
  for (int s = 0; s < nS; ++s) {
    trans[s][0] = {{1, 1.0}};
    trans[s][1] = {{1, 0.5}, {2, 0.5}};
  }
  rew[0][1][2] = 1.0;
  return ChainMdpEnv(nS, nA, T, std::move(trans), std::move(rew), 1.0);
}

ChainMdpEnv make_random_chain_mdp(int n_states, int n_actions, int horizon,
                                  double gamma, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0xc4a17));
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans(
      n_states, std::vector<std::vector<std::pair<int, double>>>(n_actions));
  std::vector<std::vector<std::vector<double>>> rew(
      n_states, std::vector<std::vector<double>>(
                    n_actions, std::vector<double>(n_states, 0.0)));
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      std::vector<double> w(n_states);
      double total = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        w[s2] = 0.1 + rng.uniform01();
        total += w[s2];
      }
      for (int s2 = 0; s2 < n_states; ++s2) {
        trans[s][a].emplace_back(s2, w[s2] / total);
        rew[s][a][s2] = rng.uniform(-1.0, 1.0);
      }
    }
  }
  return ChainMdpEnv(n_states, n_actions, horizon, std::move(trans),
                     std::move(rew), gamma);
}

ChainMdpEnv make_saddle_mirror_mdp(double reward_scale) {
  const int nS = 3, nA = 2, T = 2;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans(
      nS, std::vector<std::vector<std::pair<int, double>>>(nA));
  std::vector<std::vector<std::vector<double>>> rew(
      nS, std::vector<std::vector<double>>(nA, std::vector<double>(nS, 0.0)));
  trans[0][0] = {{1, 1.0}};
  trans[0][1] = {{2, 1.0}};
  for (int a = 0; a < nA; ++a) {
    trans[1][a] = {{1, 1.0}};
    trans[2][a] = {{2, 1.0}};
  }
  rew[1][0][1] = reward_scale;
  rew[1][1][1] = -reward_scale;
  rew[2][0][2] = reward_scale;
  rew[2][1][2] = -reward_scale;
  ChainMdpEnv env(nS, nA, T, std::move(trans), std::move(rew), 1.0);
  std::vector<Eigen::Vector4d> feats(nS, Eigen::Vector4d::Zero());
  feats[0][0] = 1.0;
  feats[1][1] = 1.0;
  feats[2][1] = -1.0;
  env.set_state_features(std::move(feats), 2);
  return env;
}

}  // namespace drm
