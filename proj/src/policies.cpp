#include "drm/policies.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace drm {

PolicySpec PolicySpec::for_env(const Env& env, PolicyFamily family) {
  const auto& sp = env.spec();
  if (family == PolicyFamily::TabularBoltzmann) {
    if (sp.state_count <= 0) {
      throw ConfigError("tabular policy requires a discrete-state environment");
    }
    return tabular(sp.state_count, sp.action_count);
  }
  if (sp.obs_dim <= 0) {
    throw ConfigError("linear policy requires a feature-observation environment");
  }
  return linear(sp.obs_dim, sp.action_count);
}

namespace {

// Writes the clipped logits for state s into `logits` (size A).
void state_logits(const PolicySpec& spec, const Vec& theta, const State& s,
                  double* logits) {
  const int a_count = spec.action_count;
  if (spec.family == PolicyFamily::TabularBoltzmann) {
    const int base = s.id * a_count;
    for (int a = 0; a < a_count; ++a) logits[a] = theta[base + a];
  } else {
    for (int a = 0; a < a_count; ++a) {
      double z = 0.0;
      for (int j = 0; j < spec.obs_dim; ++j) {
        z += theta[a * spec.obs_dim + j] * s.feat[j];
      }
      logits[a] = z;
    }
  }
  for (int a = 0; a < a_count; ++a) {
    logits[a] = std::clamp(logits[a], -kLogitClip, kLogitClip);
  }
}

void softmax_inplace(double* z, int n) {
  double zmax = z[0];
  for (int i = 1; i < n; ++i) zmax = std::max(zmax, z[i]);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    z[i] = std::exp(z[i] - zmax);
    total += z[i];
  }
  for (int i = 0; i < n; ++i) z[i] /= total;
}

}  // namespace

Vec action_probs(const PolicySpec& spec, const Vec& theta, const State& s) {
  Vec p(spec.action_count);
  state_logits(spec, theta, s, p.data());
  softmax_inplace(p.data(), spec.action_count);
  return p;
}

int sample_action(const PolicySpec& spec, const Vec& theta, const State& s,
                  Rng& rng) {
  double buf[8];
  std::vector<double> heap;
  double* p = buf;
  if (spec.action_count > 8) {
    heap.resize(spec.action_count);
    p = heap.data();
  }
  state_logits(spec, theta, s, p);
  softmax_inplace(p, spec.action_count);
  return rng.categorical(p, spec.action_count);
}

double traj_logp(const PolicySpec& spec, const Vec& theta,
                 const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const Vec p = action_probs(spec, theta, traj.states[t]);
    total += std::log(p[traj.actions[t]]);
  }
  return total;
}

namespace {

void score_grad_accum(const PolicySpec& spec, const State& s, int a,
                      const Vec& p, Vec& g) {
  const int a_count = spec.action_count;
  if (spec.family == PolicyFamily::TabularBoltzmann) {
    const int base = s.id * a_count;
    for (int b = 0; b < a_count; ++b) g[base + b] -= p[b];
    g[base + a] += 1.0;
  } else {
    for (int b = 0; b < a_count; ++b) {
      const double w = (b == a ? 1.0 : 0.0) - p[b];
      for (int j = 0; j < spec.obs_dim; ++j) {
        g[b * spec.obs_dim + j] += w * s.feat[j];
      }
    }
  }
}

}  // namespace

Vec score_grad(const PolicySpec& spec, const Vec& theta, const Trajectory& traj) {
  Vec g = Vec::Zero(spec.dim());
  for (std::size_t t = 0; t < traj.actions.size(); ++t) {
    const State& s = traj.states[t];
    const Vec p = action_probs(spec, theta, s);
    score_grad_accum(spec, s, traj.actions[t], p, g);
  }
  return g;
}

Vec action_score_grad(const PolicySpec& spec, const Vec& theta, const State& s,
                      int a) {
  Vec g = Vec::Zero(spec.dim());
  const Vec p = action_probs(spec, theta, s);
  score_grad_accum(spec, s, a, p, g);
  return g;
}

std::vector<VisitNode> visit_nodes(const PolicySpec& spec, const Vec& theta,
                                   const Trajectory& traj) {
  std::vector<VisitNode> nodes;
  if (spec.family == PolicyFamily::TabularBoltzmann) {
    std::map<int, int> counts;
    for (std::size_t t = 0; t < traj.actions.size(); ++t) {
      counts[traj.states[t].id] += 1;
    }
    nodes.reserve(counts.size());
    for (const auto& [sid, count] : counts) {
      VisitNode node;
      node.state_id = sid;
      State s;
      s.id = sid;
      node.probs = action_probs(spec, theta, s);
      node.count = count;
      nodes.push_back(std::move(node));
    }
  } else {
    nodes.reserve(traj.actions.size());
    for (std::size_t t = 0; t < traj.actions.size(); ++t) {
      VisitNode node;
      node.feat = traj.states[t].feat;
      node.probs = action_probs(spec, theta, traj.states[t]);
      node.count = 1;
      nodes.push_back(std::move(node));
    }
  }
  return nodes;
}

void score_hess_vec_accum(const PolicySpec& spec,
                          const std::vector<VisitNode>& nodes, const Vec& v,
                          Vec& out) {
  const int a_count = spec.action_count;
  if (spec.family == PolicyFamily::TabularBoltzmann) {
    for (const auto& node : nodes) {
      const int base = node.state_id * a_count;
      // grad^2 log pi = -(diag(p) - p p^T) on the state's block:
      // ((diag(p) - p p^T) v)_a = p_a v_a - p_a (p . v).
      double pv = 0.0;
      for (int a = 0; a < a_count; ++a) pv += node.probs[a] * v[base + a];
      for (int a = 0; a < a_count; ++a) {
        out[base + a] -= node.count * node.probs[a] * (v[base + a] - pv);
      }
    }
  } else {
    const int nf = spec.obs_dim;
    std::vector<double> d(a_count);
    for (const auto& node : nodes) {
      // phi(a) = e_a (x) x, so (Cov(phi) v)_block(a) = p_a (d_a - dbar) x
      // with d_a = x . v_block(a), dbar = sum_b p_b d_b.
      double dbar = 0.0;
      for (int a = 0; a < a_count; ++a) {
        double da = 0.0;
        for (int j = 0; j < nf; ++j) da += node.feat[j] * v[a * nf + j];
        d[a] = da;
        dbar += node.probs[a] * da;
      }
      for (int a = 0; a < a_count; ++a) {
        const double w = node.count * node.probs[a] * (d[a] - dbar);
        for (int j = 0; j < nf; ++j) out[a * nf + j] -= w * node.feat[j];
      }
    }
  }
}

Mat score_hess_dense(const PolicySpec& spec, const std::vector<VisitNode>& nodes) {
  const int d = spec.dim();
  Mat h = Mat::Zero(d, d);
  const int a_count = spec.action_count;
  if (spec.family == PolicyFamily::TabularBoltzmann) {
    for (const auto& node : nodes) {
      const int base = node.state_id * a_count;
      for (int a = 0; a < a_count; ++a) {
        for (int b = 0; b < a_count; ++b) {
          const double diag = a == b ? node.probs[a] : 0.0;
          h(base + a, base + b) -=
              node.count * (diag - node.probs[a] * node.probs[b]);
        }
      }
    }
  } else {
    const int nf = spec.obs_dim;
    Vec mean = Vec::Zero(nf);
    for (const auto& node : nodes) {
      mean.setZero();
      for (int a = 0; a < a_count; ++a) {
        for (int j = 0; j < nf; ++j) mean[j] += node.probs[a] * node.feat[j];
      }
      for (int a = 0; a < a_count; ++a) {
        for (int b = 0; b < a_count; ++b) {
          const double w =
              node.probs[a] * ((a == b ? 1.0 : 0.0) - node.probs[b]);
          for (int i = 0; i < nf; ++i) {
            for (int j = 0; j < nf; ++j) {
              h(a * nf + i, b * nf + j) -=
                  node.count * w * node.feat[i] * node.feat[j];
            }
          }
        }
      }
    }
  }
  return h;
}

ScoreBundle score_bundle(const PolicySpec& spec, const Vec& theta,
                         const Trajectory& traj) {
  ScoreBundle out;
  out.logp = traj_logp(spec, theta, traj);
  out.grad = score_grad(spec, theta, traj);
  out.hess = score_hess_dense(spec, visit_nodes(spec, theta, traj));
  return out;
}

AssumptionBounds assumption_bounds(const PolicySpec& spec,
                                   double feature_norm_bound) {
  const double b = spec.family == PolicyFamily::TabularBoltzmann
                       ? 1.0
                       : feature_norm_bound;
  return {2.0 * b, 2.0 * b * b, 6.0 * b * b * b};
}

std::string policy_to_json(const PolicySpec& spec, const Vec& theta) {
  nlohmann::ordered_json j;
  j["family"] = spec.family == PolicyFamily::TabularBoltzmann
                    ? "tabular_boltzmann"
                    : "linear_boltzmann";
  j["state_count"] = spec.state_count;
  j["action_count"] = spec.action_count;
  j["obs_dim"] = spec.obs_dim;
  std::vector<double> values(theta.data(), theta.data() + theta.size());
  j["theta"] = values;
  return j.dump(2);
}

Vec policy_from_json(const std::string& json_text, PolicySpec* spec_out) {
  const auto j = nlohmann::json::parse(json_text);
  PolicySpec spec;
  const std::string fam = j.at("family").get<std::string>();
  if (fam == "tabular_boltzmann") {
    spec.family = PolicyFamily::TabularBoltzmann;
  } else if (fam == "linear_boltzmann") {
    spec.family = PolicyFamily::LinearBoltzmann;
  } else {
    throw ConfigError("unknown policy family '" + fam + "'");
  }
  spec.state_count = j.at("state_count").get<int>();
  spec.action_count = j.at("action_count").get<int>();
  spec.obs_dim = j.at("obs_dim").get<int>();
  const auto values = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != spec.dim()) {
    throw ConfigError("theta length does not match policy dims");
  }
  if (spec_out) *spec_out = spec;
  Vec theta(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) theta[i] = values[i];
  return theta;
}

}  // namespace drm
