#include "drm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace drm {

double ExactDistribution::cdf(double x) const {
  double mass = 0.0;
  for (const auto& atom : atoms) {
    if (atom.value <= x) mass += atom.prob;
  }
  return mass;
}

double ExactDistribution::cum_prob(int k) const {
  double mass = 0.0;
  for (int i = 0; i <= k; ++i) mass += atoms[i].prob;
  return mass;
}

Vec ExactDistribution::cum_grad(int k) const {
  Vec g = Vec::Zero(dim);
  for (int i = 0; i <= k; ++i) g += atoms[i].grad_mass;
  return g;
}

Mat ExactDistribution::cum_hess(int k) const {
  Mat h = Mat::Zero(dim, dim);
  for (int i = 0; i <= k; ++i) h += atoms[i].hess_mass;
  return h;
}

namespace {

struct PathEnumerator {
  const ChainMdpEnv* env;
  const PolicySpec* spec;
  const Vec* theta;
  std::vector<TrajectoryAtom> paths;

  void visit(int s, int t, double prob, double ret, double disc,
             const Vec& score, const Mat& hess_logp) {
    const auto& mdp = env->spec();
    if (t == mdp.horizon) {
      // Returns are sums of table entries; rounding at 1e-12 keeps grouping
      // by value deterministic downstream.
      const double key = std::round(ret / 1e-12) * 1e-12;
      paths.push_back(TrajectoryAtom{prob, key, score, hess_logp});
      return;
    }
    const State state = env->make_state(s);
    const Vec probs = action_probs(*spec, *theta, state);
    const std::vector<VisitNode> node = {VisitNode{s, state.feat, probs, 1}};
    const Mat state_hess = score_hess_dense(*spec, node);
    for (int a = 0; a < mdp.action_count; ++a) {
      if (probs[a] <= 0.0) continue;
      const Vec score_next = score + action_score_grad(*spec, *theta, state, a);
      const Mat hess_next = hess_logp + state_hess;
      for (const auto& [s2, p2] : env->successors(s, a)) {
        if (p2 <= 0.0) continue;
        visit(s2, t + 1, prob * probs[a] * p2,
              ret + disc * env->reward(s, a, s2), disc * mdp.gamma, score_next,
              hess_next);
      }
    }
  }
};

}  // namespace

std::vector<TrajectoryAtom> enumerate_trajectories(const ChainMdpEnv& env,
                                                   const PolicySpec& spec,
                                                   const Vec& theta) {
  const int d = spec.dim();
  PathEnumerator acc{&env, &spec, &theta, {}};
  acc.visit(env.start_state(), 0, 1.0, 0.0, 1.0, Vec::Zero(d),
            Mat::Zero(d, d));
  return acc.paths;
}

ExactDistribution enumerate_distribution(const ChainMdpEnv& env,
                                         const PolicySpec& spec,
                                         const Vec& theta) {
  const int d = spec.dim();
  const auto paths = enumerate_trajectories(env, spec, theta);

  std::map<double, ExactDistribution::Atom> atoms;
  for (const auto& path : paths) {
    auto& atom = atoms[path.ret];
    if (atom.grad_mass.size() == 0) {
      atom.value = path.ret;
      atom.grad_mass = Vec::Zero(d);
      atom.hess_mass = Mat::Zero(d, d);
    }
    atom.prob += path.prob;
    atom.grad_mass.noalias() += path.prob * path.grad;
    atom.hess_mass.noalias() +=
        path.prob * (path.hess_logp + path.grad * path.grad.transpose());
  }

  ExactDistribution dist;
  dist.dim = d;
  // The grad/Hessian integrals vanish outside the realized support, so the
  // bound only needs to cover it; widening past the nominal env bound absorbs
  // the 1e-12 grouping round-off of extremal returns.
  dist.m_r = env.spec().return_bound();
  dist.atoms.reserve(atoms.size());
  for (auto& [value, atom] : atoms) {
    dist.m_r = std::max(dist.m_r, std::abs(value));
    dist.atoms.push_back(std::move(atom));
  }
  return dist;
}

double exact_drm_value(const ExactDistribution& dist, const Distortion& g) {
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve(dist.atoms.size());
  for (const auto& atom : dist.atoms) atoms.emplace_back(atom.value, atom.prob);
  return drm_value_exact(atoms, g, dist.m_r);
}

ExactDerivatives exact_drm_grad_hess(const ExactDistribution& dist,
                                     const Distortion& g) {
  if (!g.smooth_enough_for_newton()) {
    throw DistortionRejected("exact derivatives need a thrice-differentiable h");
  }
  const int d = dist.dim;
  ExactDerivatives out;
  out.value = exact_drm_value(dist, g);
  out.grad = Vec::Zero(d);
  out.hess = Mat::Zero(d, d);

  // Between consecutive atoms (and out to +-Mr) F, grad F and hess F are
  // constant: integrate segment by segment. The initial segment has all of
  // them zero and the final one vanishes by the score identities, so only
  // the inter-atom segments contribute.
  const int k_atoms = static_cast<int>(dist.atoms.size());
  double f = 0.0;
  Vec grad_f = Vec::Zero(d);
  Mat hess_f = Mat::Zero(d, d);
  for (int k = 0; k < k_atoms; ++k) {
    f += dist.atoms[k].prob;
    grad_f += dist.atoms[k].grad_mass;
    hess_f += dist.atoms[k].hess_mass;
    const double hi = k + 1 < k_atoms ? dist.atoms[k + 1].value : dist.m_r;
    const double len = hi - dist.atoms[k].value;
    if (len <= 0.0) continue;
    const double u = 1.0 - f;
    out.grad.noalias() -= len * g.h1(u) * grad_f;
    out.hess.noalias() += len * g.h2(u) * (grad_f * grad_f.transpose());
    out.hess.noalias() -= len * g.h1(u) * hess_f;
  }
  out.hess = 0.5 * (out.hess + out.hess.transpose());
  return out;
}

BiasCheckResult estimator_bias_check(const ChainMdpEnv& env,
                                     const PolicySpec& spec, const Vec& theta,
                                     const Distortion& g, EstimatorKind kind,
                                     int m, int replications,
                                     std::uint64_t seed, ExecMode mode) {
  const ExactDistribution dist = enumerate_distribution(env, spec, theta);
  const ExactDerivatives exact = exact_drm_grad_hess(dist, g);
  const int d = spec.dim();
  const bool is_grad =
      kind == EstimatorKind::GradientFull || kind == EstimatorKind::GradientVr;

  BiasCheckResult out;
  out.mean_grad = Vec::Zero(d);
  out.mean_hess = Mat::Zero(d, d);
  out.replications = replications;

  double mse_sum = 0.0;
  for (int rep = 0; rep < replications; ++rep) {
    auto trajs = rollout_batch(env, spec, theta, m, derive_seed(seed, rep),
                               /*stream=*/1, mode);
    const SortedBatch batch =
        SortedBatch::from_trajectories(spec, theta, std::move(trajs),
                                       MrMode::Theoretical, dist.m_r, mode);
    if (is_grad) {
      const Vec est = kind == EstimatorKind::GradientFull
                          ? drm_gradient_full(batch, g)
                          : drm_gradient_vr(batch, g);
      out.mean_grad += est;
      mse_sum += (est - exact.grad).squaredNorm();
    } else {
      const Mat est = kind == EstimatorKind::HessianFull
                          ? drm_hessian_full(batch, g)
                          : drm_hessian_vr(batch, g);
      out.mean_hess += est;
      mse_sum += (est - exact.hess).squaredNorm();
    }
  }
  out.mean_grad /= replications;
  out.mean_hess /= replications;
  out.mse = mse_sum / replications;
  return out;
}

}  // namespace drm
