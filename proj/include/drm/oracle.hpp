#pragma once

#include <vector>

#include "drm/common.hpp"
#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/estimators.hpp"
#include "drm/policies.hpp"

namespace drm {

/// Exact return distribution of an enumerable MDP under pi_theta, with the
/// score aggregates needed for the CDF derivative identities
///   grad F(x)  = E[1{R<=x} Phi],
///   hess F(x)  = E[1{R<=x} (sum_t hess log pi + Phi Phi^T)].
struct ExactDistribution {
  struct Atom {
    double value = 0.0;
    double prob = 0.0;   // mass at this return level
    Vec grad_mass;       // E[Phi ; R = value]
    Mat hess_mass;       // E[sum hess log pi + Phi Phi^T ; R = value]
  };
  std::vector<Atom> atoms;  // ascending by value
  int dim = 0;
  double m_r = 0.0;  // true return bound of the MDP

  double cdf(double x) const;
  /// Cumulative aggregates up to and including atom index k.
  double cum_prob(int k) const;
  Vec cum_grad(int k) const;
  Mat cum_hess(int k) const;
};

/// Full trajectory-space sums over all (action, successor) branches.
/// Deterministic; throws if the MDP exceeds the enumeration caps.
ExactDistribution enumerate_distribution(const ChainMdpEnv& env,
                                         const PolicySpec& spec,
                                         const Vec& theta);

/// Per-trajectory enumeration: probability, return, score gradient and score
/// Hessian (sum_t hess log pi) of every trajectory. Basis for exact batch
/// expectations of the sample estimators.
struct TrajectoryAtom {
  double prob = 0.0;
  double ret = 0.0;
  Vec grad;
  Mat hess_logp;
};
std::vector<TrajectoryAtom> enumerate_trajectories(const ChainMdpEnv& env,
                                                   const PolicySpec& spec,
                                                   const Vec& theta);

struct ExactDerivatives {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

/// Exact riskmetric value, gradient and Hessian via the piecewise-constant
/// atom segments (F, grad F, hess F constant between atoms).
ExactDerivatives exact_drm_grad_hess(const ExactDistribution& dist,
                                     const Distortion& g);

/// Exact riskmetric value only (no smoothness requirement on h).
double exact_drm_value(const ExactDistribution& dist, const Distortion& g);

enum class EstimatorKind { GradientFull, GradientVr, HessianFull, HessianVr };

struct BiasCheckResult {
  Vec mean_grad;        // empirical mean of gradient estimates
  Mat mean_hess;        // empirical mean of Hessian estimates
  double mse = 0.0;     // mean ||estimate - exact||^2 (Frobenius for Hessians)
  int replications = 0;
};

/// Monte Carlo replication harness: repeatedly samples batches of size m,
/// applies the chosen estimator, and reports mean and MSE against the exact
/// exact derivatives. Seeded and deterministic.
BiasCheckResult estimator_bias_check(const ChainMdpEnv& env,
                                     const PolicySpec& spec, const Vec& theta,
                                     const Distortion& g, EstimatorKind kind,
                                     int m, int replications,
                                     std::uint64_t seed,
                                     ExecMode mode = ExecMode::Serial);

}  // namespace drm
