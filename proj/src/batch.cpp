#include "drm/batch.hpp"

#include <cmath>

namespace drm {

Trajectory rollout(const Env& env, const PolicySpec& spec, const Vec& theta,
                   std::uint64_t seed) {
  Rng rng(seed);
  const auto& mdp = env.spec();
  Trajectory traj;
  traj.states.reserve(mdp.horizon + 1);
  traj.actions.reserve(mdp.horizon);
  traj.rewards.reserve(mdp.horizon);
  traj.rewards_default.reserve(mdp.horizon);

  State s = env.reset(rng);
  traj.states.push_back(s);
  double disc = 1.0;
  for (int t = 0; t < mdp.horizon; ++t) {
    const int a = sample_action(spec, theta, s, rng);
    const StepResult step = env.step(s, a, rng);
    traj.actions.push_back(a);
    traj.rewards.push_back(step.reward);
    traj.rewards_default.push_back(step.reward_default);
    traj.ret += disc * step.reward;
    traj.ret_default += step.reward_default;
    disc *= mdp.gamma;
    s = step.next;
    traj.states.push_back(s);
    if (step.done) break;
  }
  return traj;
}

std::vector<Trajectory> rollout_batch_serial(const Env& env,
                                             const PolicySpec& spec,
                                             const Vec& theta, int n,
                                             std::uint64_t base_seed,
                                             std::uint64_t stream) {
  std::vector<Trajectory> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = rollout(env, spec, theta, derive_seed(base_seed, stream, i));
  }
  return out;
}

std::vector<Trajectory> rollout_batch_omp(const Env& env,
                                          const PolicySpec& spec,
                                          const Vec& theta, int n,
                                          std::uint64_t base_seed,
                                          std::uint64_t stream) {
  std::vector<Trajectory> out(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    out[i] = rollout(env, spec, theta, derive_seed(base_seed, stream, i));
  }
  return out;
}

std::vector<Trajectory> rollout_batch(const Env& env, const PolicySpec& spec,
                                      const Vec& theta, int n,
                                      std::uint64_t base_seed,
                                      std::uint64_t stream, ExecMode mode) {
  return mode == ExecMode::OpenMP
             ? rollout_batch_omp(env, spec, theta, n, base_seed, stream)
             : rollout_batch_serial(env, spec, theta, n, base_seed, stream);
}

std::vector<double> evaluate_policy(const Env& env, const PolicySpec& spec,
                                    const Vec& theta, int episodes,
                                    std::uint64_t base_seed, ExecMode mode) {
  std::vector<double> returns(episodes);
  if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < episodes; ++i) {
      returns[i] =
          rollout(env, spec, theta, derive_seed(base_seed, 0xe7a1, i)).ret_default;
    }
  } else {
    for (int i = 0; i < episodes; ++i) {
      returns[i] =
          rollout(env, spec, theta, derive_seed(base_seed, 0xe7a1, i)).ret_default;
    }
  }
  return returns;
}

std::vector<Vec> score_grads_serial(const PolicySpec& spec, const Vec& theta,
                                    const std::vector<Trajectory>& trajs) {
  std::vector<Vec> out(trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    out[i] = score_grad(spec, theta, trajs[i]);
  }
  return out;
}

std::vector<Vec> score_grads_omp(const PolicySpec& spec, const Vec& theta,
                                 const std::vector<Trajectory>& trajs) {
  std::vector<Vec> out(trajs.size());
  const int n = static_cast<int>(trajs.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    out[i] = score_grad(spec, theta, trajs[i]);
  }
  return out;
}

std::vector<Vec> score_grads(const PolicySpec& spec, const Vec& theta,
                             const std::vector<Trajectory>& trajs,
                             ExecMode mode) {
  return mode == ExecMode::OpenMP ? score_grads_omp(spec, theta, trajs)
                                  : score_grads_serial(spec, theta, trajs);
}

}  // namespace drm
