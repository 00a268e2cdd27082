#pragma once

#include <vector>

#include "drm/common.hpp"
#include "drm/envs.hpp"
#include "drm/policies.hpp"

namespace drm {

/// Execution mode for the data-parallel batch kernels. Serial is the
/// reference implementation; OpenMP must produce bit-identical results
/// because every trajectory owns its own seed and reductions keep a fixed
/// order.
enum class ExecMode { Serial, OpenMP };

/// One episode under pi_theta, deterministic given the seed.
Trajectory rollout(const Env& env, const PolicySpec& spec, const Vec& theta,
                   std::uint64_t seed);

/// n independent episodes; trajectory i uses derive_seed(base_seed, stream, i).
std::vector<Trajectory> rollout_batch_serial(const Env& env,
                                             const PolicySpec& spec,
                                             const Vec& theta, int n,
                                             std::uint64_t base_seed,
                                             std::uint64_t stream = 0);
std::vector<Trajectory> rollout_batch_omp(const Env& env,
                                          const PolicySpec& spec,
                                          const Vec& theta, int n,
                                          std::uint64_t base_seed,
                                          std::uint64_t stream = 0);
std::vector<Trajectory> rollout_batch(const Env& env, const PolicySpec& spec,
                                      const Vec& theta, int n,
                                      std::uint64_t base_seed,
                                      std::uint64_t stream, ExecMode mode);

/// Default-reward returns of n evaluation episodes.
std::vector<double> evaluate_policy(const Env& env, const PolicySpec& spec,
                                    const Vec& theta, int episodes,
                                    std::uint64_t base_seed, ExecMode mode);

/// Score gradients for a batch of trajectories (kernel form of score_grad).
std::vector<Vec> score_grads_serial(const PolicySpec& spec, const Vec& theta,
                                    const std::vector<Trajectory>& trajs);
std::vector<Vec> score_grads_omp(const PolicySpec& spec, const Vec& theta,
                                 const std::vector<Trajectory>& trajs);
std::vector<Vec> score_grads(const PolicySpec& spec, const Vec& theta,
                             const std::vector<Trajectory>& trajs,
                             ExecMode mode);

}  // namespace drm
