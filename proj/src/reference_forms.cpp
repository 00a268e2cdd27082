#include "drm/reference_forms.hpp"

namespace drm::reference {

namespace {

// h'(1-G) / h''(1-G) on the piece above the top sample, written so that a
// zero-length boundary piece never multiplies an infinite right derivative.
double boundary_weight(double gap, double w) { return gap == 0.0 ? 0.0 : gap * w; }

}  // namespace

Vec gradient_by_segment_integration(const SortedBatch& batch,
                                    const Distortion& g) {
  const int m = batch.size();
  const double m_d = static_cast<double>(m);
  Vec grad = Vec::Zero(batch.dim());
  Vec edf_grad = Vec::Zero(batch.dim());  // (1/m) sum_{j<=i} grad l_(j)
  // Below R_(1) the EDF gradient estimate is zero, so integration starts at
  // the first order statistic.
  for (int i = 1; i < m; ++i) {
    edf_grad.noalias() += batch.grad(i - 1) / m_d;
    const double len = batch.ret(i) - batch.ret(i - 1);
    const double u = 1.0 - static_cast<double>(i) / m_d;
    grad.noalias() -= len * g.h1(u) * edf_grad;
  }
  edf_grad.noalias() += batch.grad(m - 1) / m_d;
  const double top = boundary_weight(batch.m_r_eff() - batch.ret(m - 1),
                                     g.h1_plus0());
  grad.noalias() -= top * edf_grad;
  return grad;
}

Mat hessian_by_segment_integration(const SortedBatch& batch,
                                   const Distortion& g) {
  const int m = batch.size();
  const double m_d = static_cast<double>(m);
  const int d = batch.dim();
  Mat hess = Mat::Zero(d, d);
  Vec edf_grad = Vec::Zero(d);
  Mat edf_hess = Mat::Zero(d, d);  // (1/m) sum_{j<=i} (hess l + grad grad^T)
  for (int i = 1; i < m; ++i) {
    edf_grad.noalias() += batch.grad(i - 1) / m_d;
    edf_hess.noalias() += (batch.hess_dense(i - 1) +
                           batch.grad(i - 1) * batch.grad(i - 1).transpose()) /
                          m_d;
    const double len = batch.ret(i) - batch.ret(i - 1);
    const double u = 1.0 - static_cast<double>(i) / m_d;
    hess.noalias() += len * g.h2(u) * (edf_grad * edf_grad.transpose());
    hess.noalias() -= len * g.h1(u) * edf_hess;
  }
  edf_grad.noalias() += batch.grad(m - 1) / m_d;
  edf_hess.noalias() += (batch.hess_dense(m - 1) +
                         batch.grad(m - 1) * batch.grad(m - 1).transpose()) /
                        m_d;
  const double gap = batch.m_r_eff() - batch.ret(m - 1);
  hess.noalias() += boundary_weight(gap, g.h2_plus0()) *
                    (edf_grad * edf_grad.transpose());
  hess.noalias() -= boundary_weight(gap, g.h1_plus0()) * edf_hess;
  return 0.5 * (hess + hess.transpose());
}

Vec gradient_by_double_sum(const SortedBatch& batch, const Distortion& g) {
  const int m = batch.size();
  const double m_d = static_cast<double>(m);
  Vec grad = Vec::Zero(batch.dim());
  Vec prefix = Vec::Zero(batch.dim());
  for (int i = 1; i < m; ++i) {
    prefix.noalias() += batch.grad(i - 1);
    const double u = 1.0 - static_cast<double>(i) / m_d;
    grad.noalias() +=
        (batch.ret(i - 1) - batch.ret(i)) * g.h1(u) * prefix;
  }
  prefix.noalias() += batch.grad(m - 1);
  grad.noalias() +=
      boundary_weight(batch.ret(m - 1) - batch.m_r_eff(), g.h1_plus0()) * prefix;
  return grad / m_d;
}

Mat hessian_by_double_sum(const SortedBatch& batch, const Distortion& g) {
  const int b = batch.size();
  const double b_d = static_cast<double>(b);
  const int d = batch.dim();
  Mat hess = Mat::Zero(d, d);
  Vec prefix = Vec::Zero(d);
  Mat prefix_hess = Mat::Zero(d, d);
  for (int i = 1; i < b; ++i) {
    prefix.noalias() += batch.grad(i - 1);
    prefix_hess.noalias() += batch.hess_dense(i - 1) +
                             batch.grad(i - 1) * batch.grad(i - 1).transpose();
    const double gap = batch.ret(i) - batch.ret(i - 1);
    const double u = 1.0 - static_cast<double>(i) / b_d;
    hess.noalias() +=
        (gap * g.h2(u) / (b_d * b_d)) * (prefix * prefix.transpose());
    hess.noalias() -= (gap * g.h1(u) / b_d) * prefix_hess;
  }
  prefix.noalias() += batch.grad(b - 1);
  prefix_hess.noalias() += batch.hess_dense(b - 1) +
                           batch.grad(b - 1) * batch.grad(b - 1).transpose();
  const double gap = batch.m_r_eff() - batch.ret(b - 1);
  hess.noalias() += (boundary_weight(gap, g.h2_plus0()) / (b_d * b_d)) *
                    (prefix * prefix.transpose());
  hess.noalias() -= (boundary_weight(gap, g.h1_plus0()) / b_d) * prefix_hess;
  return 0.5 * (hess + hess.transpose());
}

}  // namespace drm::reference
