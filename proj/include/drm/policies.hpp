#pragma once

#include <vector>

#include "drm/common.hpp"
#include "drm/envs.hpp"

namespace drm {

enum class PolicyFamily { TabularBoltzmann, LinearBoltzmann };

/// Differentiable stochastic policy family with closed-form log-probability
/// derivatives. Tabular: one logit per (state, action), d = |S|*|A|.
/// Linear: logit(a) = theta_block(a) . obs, d = obs_dim * |A|.
struct PolicySpec {
  PolicyFamily family = PolicyFamily::TabularBoltzmann;
  int state_count = 0;
  int action_count = 0;
  int obs_dim = 0;

  int dim() const {
    return family == PolicyFamily::TabularBoltzmann
               ? state_count * action_count
               : obs_dim * action_count;
  }

  static PolicySpec tabular(int states, int actions) {
    return {PolicyFamily::TabularBoltzmann, states, actions, 0};
  }
  static PolicySpec linear(int obs_dim, int actions) {
    return {PolicyFamily::LinearBoltzmann, 0, actions, obs_dim};
  }
  static PolicySpec for_env(const Env& env, PolicyFamily family);
};

/// Logits are clipped to +-50 before the softmax to avoid overflow; at that
/// saturation the off-probabilities are ~e^-100 and the effect on the
/// experiments is negligible.
constexpr double kLogitClip = 50.0;

/// Softmax action distribution at state s: positive, sums to 1.
Vec action_probs(const PolicySpec& spec, const Vec& theta, const State& s);

int sample_action(const PolicySpec& spec, const Vec& theta, const State& s,
                  Rng& rng);

/// Sum over trajectory steps of log pi(a_t | s_t).
double traj_logp(const PolicySpec& spec, const Vec& theta, const Trajectory& traj);

/// Gradient of traj_logp: sum_t [phi(s_t,a_t) - E_pi phi(s_t,.)] in block form.
Vec score_grad(const PolicySpec& spec, const Vec& theta, const Trajectory& traj);

/// grad log pi(a|s) for a single state-action pair.
Vec action_score_grad(const PolicySpec& spec, const Vec& theta, const State& s,
                      int a);

/// Per-visited-state softmax cache. The per-trajectory score Hessian is
///   sum over nodes of count * ( -Cov_pi(phi) )
/// which for the Boltzmann families has closed-form block structure, so
/// Hessian-vector products never materialize d x d.
struct VisitNode {
  int state_id = 0;
  Eigen::Vector4d feat = Eigen::Vector4d::Zero();
  Vec probs;
  int count = 1;
};

/// Builds the visit-node list for a trajectory (tabular visits to the same
/// state are merged).
std::vector<VisitNode> visit_nodes(const PolicySpec& spec, const Vec& theta,
                                   const Trajectory& traj);

/// Accumulates (sum_t grad^2 log pi) * v into out (out must be pre-sized d).
void score_hess_vec_accum(const PolicySpec& spec,
                          const std::vector<VisitNode>& nodes, const Vec& v,
                          Vec& out);

/// Dense sum_t grad^2 log pi for tests and small-d estimator materialization.
Mat score_hess_dense(const PolicySpec& spec, const std::vector<VisitNode>& nodes);

/// Log-probability, score gradient and dense score Hessian in one bundle.
struct ScoreBundle {
  double logp = 0.0;
  Vec grad;
  Mat hess;
};
ScoreBundle score_bundle(const PolicySpec& spec, const Vec& theta,
                         const Trajectory& traj);

/// Analytic bounds for the Boltzmann families over all theta:
///   ||grad log pi|| <= M_d, ||grad^2 log pi|| <= M_h,
///   ||grad^2 log pi(theta1) - grad^2 log pi(theta2)|| <= L2 ||theta1-theta2||.
/// With feature norm bound B: M_d <= 2B (score is phi minus a convex
/// combination of phis), M_h <= 2B^2 (covariance of vectors of norm <= B),
/// L2 <= 6B^3 (third log-partition derivative). Used only by the
/// theory-constants calculator; tests confirm the bounds hold numerically.
struct AssumptionBounds {
  double m_d, m_h, l2;
};
AssumptionBounds assumption_bounds(const PolicySpec& spec,
                                   double feature_norm_bound = 1.0);

/// Serialization of a parameter vector with family metadata.
std::string policy_to_json(const PolicySpec& spec, const Vec& theta);
Vec policy_from_json(const std::string& json_text, PolicySpec* spec_out);

}  // namespace drm
