// Benchmark of the OpenMP batch kernels against their serial reference:
// batch rollouts, score-gradient batches and the end-to-end estimator step.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "drm/batch.hpp"
#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    f();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

}  // namespace

int main() {
  const drm::CliffWalkEnv env(0.5);
  const drm::PolicySpec spec =
      drm::PolicySpec::for_env(env, drm::PolicyFamily::TabularBoltzmann);
  const drm::Vec theta = drm::Vec::Zero(spec.dim());
  const drm::Distortion gini = drm::Distortion::catalog("gini_deviation");
  const int n = 200;

  std::printf("threads available: %d\n", omp_get_max_threads());

  const double t_roll_serial = time_best_of(3, [&] {
    (void)drm::rollout_batch_serial(env, spec, theta, n, 1, 0);
  });
  const double t_roll_omp = time_best_of(3, [&] {
    (void)drm::rollout_batch_omp(env, spec, theta, n, 1, 0);
  });
  std::printf("rollout_batch     serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              1e3 * t_roll_serial, 1e3 * t_roll_omp,
              t_roll_serial / t_roll_omp);

  auto trajs = drm::rollout_batch_serial(env, spec, theta, n, 1, 0);
  const double t_score_serial = time_best_of(3, [&] {
    (void)drm::score_grads_serial(spec, theta, trajs);
  });
  const double t_score_omp = time_best_of(3, [&] {
    (void)drm::score_grads_omp(spec, theta, trajs);
  });
  std::printf("score_grads       serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              1e3 * t_score_serial, 1e3 * t_score_omp,
              t_score_serial / t_score_omp);

  const double t_step_serial = time_best_of(3, [&] {
    auto batch = drm::SortedBatch::from_trajectories(
        spec, theta, drm::rollout_batch_serial(env, spec, theta, n, 1, 0),
        drm::MrMode::BatchMax, env.spec().return_bound(),
        drm::ExecMode::Serial);
    const drm::HvpOperator hop(batch, gini);
    drm::Vec v = drm::Vec::Ones(spec.dim());
    for (int i = 0; i < 25; ++i) v = hop.apply(v) + v;
  });
  const double t_step_omp = time_best_of(3, [&] {
    auto batch = drm::SortedBatch::from_trajectories(
        spec, theta, drm::rollout_batch_omp(env, spec, theta, n, 1, 0),
        drm::MrMode::BatchMax, env.spec().return_bound(),
        drm::ExecMode::OpenMP);
    const drm::HvpOperator hop(batch, gini);
    drm::Vec v = drm::Vec::Ones(spec.dim());
    for (int i = 0; i < 25; ++i) v = hop.apply(v) + v;
  });
  std::printf("estimator step    serial %8.2f ms   omp %8.2f ms   speedup %.2fx\n",
              1e3 * t_step_serial, 1e3 * t_step_omp,
              t_step_serial / t_step_omp);
  return 0;
}
