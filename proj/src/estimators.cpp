#include "drm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drm {

SortedBatch SortedBatch::from_trajectories(const PolicySpec& spec,
                                           const Vec& theta,
                                           std::vector<Trajectory> trajs,
                                           MrMode mr_mode,
                                           double m_r_theoretical,
                                           ExecMode mode) {
  if (trajs.size() < 2) throw ConfigError("batch needs at least 2 trajectories");
  const int n = static_cast<int>(trajs.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return trajs[a].ret < trajs[b].ret;
  });

  SortedBatch out;
  out.dim_ = spec.dim();
  out.spec_ = spec;
  out.policy_backed_ = true;
  out.trajs_.reserve(n);
  for (int i = 0; i < n; ++i) out.trajs_.push_back(std::move(trajs[order[i]]));

  out.returns_.resize(n);
  for (int i = 0; i < n; ++i) out.returns_[i] = out.trajs_[i].ret;
  out.m_r_eff_ =
      mr_mode == MrMode::BatchMax ? out.returns_.back() : m_r_theoretical;

  out.grads_ = score_grads(spec, theta, out.trajs_, mode);
  out.nodes_.resize(n);
  if (mode == ExecMode::OpenMP) {
#pragma omp parallel for schedule(dynamic, 8)
    for (int i = 0; i < n; ++i) {
      out.nodes_[i] = visit_nodes(spec, theta, out.trajs_[i]);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      out.nodes_[i] = visit_nodes(spec, theta, out.trajs_[i]);
    }
  }
  return out;
}

SortedBatch SortedBatch::from_raw(std::vector<double> returns,
                                  std::vector<Vec> grads,
                                  std::vector<Mat> hessians, double m_r_eff) {
  if (returns.size() < 2) throw ConfigError("batch needs at least 2 samples");
  if (returns.size() != grads.size() || returns.size() != hessians.size()) {
    throw ConfigError("raw batch arrays must have equal lengths");
  }
  const int n = static_cast<int>(returns.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return returns[a] < returns[b]; });

  SortedBatch out;
  out.dim_ = static_cast<int>(grads.front().size());
  out.policy_backed_ = false;
  out.returns_.resize(n);
  out.grads_.resize(n);
  out.hess_.resize(n);
  for (int i = 0; i < n; ++i) {
    out.returns_[i] = returns[order[i]];
    out.grads_[i] = std::move(grads[order[i]]);
    out.hess_[i] = std::move(hessians[order[i]]);
  }
  out.m_r_eff_ = m_r_eff;
  return out;
}

void SortedBatch::hess_vec_accum(int i, const Vec& v, Vec& out) const {
  if (policy_backed_) {
    score_hess_vec_accum(spec_, nodes_[i], v, out);
  } else {
    out.noalias() += hess_[i] * v;
  }
}

Mat SortedBatch::hess_dense(int i) const {
  if (policy_backed_) return score_hess_dense(spec_, nodes_[i]);
  return hess_[i];
}

namespace {

void require_h1_bounded(const Distortion& g) {
  if (!g.h1_bounded()) {
    throw DistortionRejected("distortion '" + g.name() +
                             "' has unbounded h'; gradient estimation rejected");
  }
}

void require_smooth(const Distortion& g) {
  if (!g.smooth_enough_for_newton()) {
    throw DistortionRejected("distortion '" + g.name() +
                             "' is not smooth enough for Hessian estimation");
  }
}

}  // namespace

CoefficientTable build_coefficients(const SortedBatch& batch,
                                    const Distortion& g) {
  const int tau = batch.size();
  const double tau_d = static_cast<double>(tau);
  CoefficientTable table;
  table.c1.resize(tau);
  table.c2.resize(tau);
  for (int i = 1; i < tau; ++i) {
    const double gap = batch.ret(i) - batch.ret(i - 1);
    const double u = 1.0 - static_cast<double>(i) / tau_d;
    table.c1[i - 1] = gap * g.h1(u);
    table.c2[i - 1] = gap * g.h2(u);
  }
  const double boundary_gap = batch.m_r_eff() - batch.ret(tau - 1);
  // A zero gap nulls the boundary terms outright, keeping entries finite for
  // distortions with infinite right derivatives at 0.
  table.c1[tau - 1] = boundary_gap == 0.0 ? 0.0 : boundary_gap * g.h1_plus0();
  table.c2[tau - 1] = boundary_gap == 0.0 ? 0.0 : boundary_gap * g.h2_plus0();

  table.psi1.resize(tau);
  table.psi2.resize(tau);
  double acc1 = 0.0, acc2 = 0.0;
  for (int i = tau - 1; i >= 0; --i) {
    acc1 += table.c1[i];
    acc2 += table.c2[i];
    table.psi1[i] = acc1;
    table.psi2[i] = acc2 / tau_d;
  }
  return table;
}

Vec drm_gradient_full(const SortedBatch& batch, const Distortion& g) {
  require_h1_bounded(g);
  const CoefficientTable table = build_coefficients(batch, g);
  const int tau = batch.size();
  Vec grad = Vec::Zero(batch.dim());
  for (int i = 0; i < tau; ++i) {
    grad.noalias() -= table.psi1[i] * batch.grad(i);
  }
  grad /= static_cast<double>(tau);
  return grad;
}

Vec drm_gradient_vr(const SortedBatch& batch, const Distortion& g) {
  require_h1_bounded(g);
  const int m = batch.size();
  const double m_d = static_cast<double>(m);
  Vec grad = Vec::Zero(batch.dim());
  for (int i = 0; i < m; ++i) {
    const double u = 1.0 - static_cast<double>(i + 1) / m_d;
    const double w = batch.ret(i) * (i + 1 == m ? g.h1_plus0() : g.h1(u));
    grad.noalias() += w * batch.grad(i);
  }
  grad /= m_d;
  return grad;
}

Mat drm_hessian_full(const SortedBatch& batch, const Distortion& g) {
  require_smooth(g);
  if (batch.dim() > kMaxDenseDim) {
    throw ConfigError("dense Hessian materialization capped at d <= 512");
  }
  const CoefficientTable table = build_coefficients(batch, g);
  const int tau = batch.size();
  const double b = static_cast<double>(tau);
  const int d = batch.dim();
  Mat hess = Mat::Zero(d, d);
  Vec prefix = Vec::Zero(d);  // grad s_i = sum_{j<=i} grad l_(j)
  for (int i = 0; i < tau; ++i) {
    prefix.noalias() += batch.grad(i);
    hess.noalias() += (table.c2[i] / b) * (prefix * prefix.transpose());
    hess.noalias() -= table.psi1[i] * (batch.grad(i) * batch.grad(i).transpose());
    Mat hi = batch.hess_dense(i);
    hess.noalias() -= table.psi1[i] * hi;
  }
  hess /= b;
  return 0.5 * (hess + hess.transpose());
}

Mat drm_hessian_vr(const SortedBatch& batch, const Distortion& g) {
  require_smooth(g);
  if (batch.dim() > kMaxDenseDim) {
    throw ConfigError("dense Hessian materialization capped at d <= 512");
  }
  const CoefficientTable table = build_coefficients(batch, g);
  const int n = batch.size();
  const double b = static_cast<double>(n);
  const int d = batch.dim();
  Mat hess = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const double u = 1.0 - static_cast<double>(i + 1) / b;
    const double w = batch.ret(i) * (i + 1 == n ? g.h1_plus0() : g.h1(u));
    hess.noalias() +=
        (table.psi2[i] + w) * (batch.grad(i) * batch.grad(i).transpose());
    hess.noalias() += w * batch.hess_dense(i);
  }
  hess /= b;
  return 0.5 * (hess + hess.transpose());
}

HvpOperator::HvpOperator(const SortedBatch& batch, const Distortion& g)
    : batch_(&batch) {
  require_smooth(g);
  const CoefficientTable table = build_coefficients(batch, g);
  psi2_ = table.psi2;
  const int n = batch.size();
  weight_.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = 1.0 - static_cast<double>(i + 1) / static_cast<double>(n);
    weight_[i] = batch.ret(i) * (i + 1 == n ? g.h1_plus0() : g.h1(u));
  }
}

Vec HvpOperator::apply(const Vec& v) const {
  const int n = batch_->size();
  const double b = static_cast<double>(n);
  Vec out = Vec::Zero(batch_->dim());
  Vec hv = Vec::Zero(batch_->dim());
  for (int i = 0; i < n; ++i) {
    const double gv = batch_->grad(i).dot(v);
    out.noalias() += ((psi2_[i] + weight_[i]) * gv) * batch_->grad(i);
    hv.setZero();
    batch_->hess_vec_accum(i, v, hv);
    out.noalias() += weight_[i] * hv;
  }
  out /= b;
  return out;
}

Vec drm_hvp(const SortedBatch& batch, const Distortion& g, const Vec& v) {
  return HvpOperator(batch, g).apply(v);
}

TheoryConstants mse_constants(const AssumptionBounds& pb,
                              const Distortion::DerivativeBounds& gb,
                              double m_r, int horizon, int dim) {
  const double t_d = static_cast<double>(horizon);
  const double d = static_cast<double>(dim);
  const double md = pb.m_d, mh = pb.m_h, l2 = pb.l2;
  const double m1 = gb.m1, m2 = gb.m2, m3 = gb.m3;
  const double e2 = std::exp(2.0);

  const double nu = t_d * mh + t_d * t_d * md * md;

  TheoryConstants out{};
  out.g_h = 2.0 * m_r * t_d * (mh * m1 + t_d * md * md * (m1 + m2));
  const double xi1 =
      2.0 * m_r * (2.0 * m2 * t_d * md * nu + std::pow(t_d * md, 3) * m3);
  const double xi2 =
      2.0 * m_r * (m2 * t_d * md * nu + m1 * (t_d * l2 + 2.0 * t_d * md * mh));
  out.l_h = xi1 + xi2;

  out.kappa1 = 32.0 * m_r * m_r * t_d * t_d * md * md * (e2 * m1 * m1 + m2 * m2);
  const double t4md4 = std::pow(t_d, 4) * std::pow(md, 4);
  out.kappa2 = 64.0 * m_r * m_r *
               (3.0 * e2 * m2 * m2 * t4md4 + 2.0 * t4md4 * m3 * m3 +
                m2 * m2 * nu * nu);
  const double t8md8 = t4md4 * t4md4;
  out.kappa3 =
      4096.0 * m_r * m_r *
      (t8md8 * (9.0 * e2 * std::pow(m2, 4) + 8.0 * std::pow(m3, 4)) +
       std::pow(m2, 4) * std::pow(nu, 4));
  out.c_d = 4.0 * (1.0 + 2.0 * std::log(2.0 * d));
  out.t1 = 32.0 * m_r * m_r * m1 * m1 * out.c_d * nu * nu;
  out.t2 = 1920.0 * m_r * m_r * std::pow(m1, 4) * d * d * std::pow(nu, 4);
  return out;
}

}  // namespace drm
