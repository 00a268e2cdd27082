#pragma once

#include <functional>
#include <vector>

#include "drm/batch.hpp"
#include "drm/common.hpp"
#include "drm/distortion.hpp"
#include "drm/envs.hpp"
#include "drm/policies.hpp"

namespace drm {

/// Upper integration limit for the order-statistics sums. BatchMax follows
/// the experiments (M_r := R_(m), so all boundary coefficients vanish);
/// Theoretical uses the environment bound, which the oracle comparisons need.
enum class MrMode { BatchMax, Theoretical };

/// Order-statistics view of a trajectory batch: returns sorted ascending with
/// score accessors permuted consistently. Ties keep the original trajectory
/// order (the zero gaps then null the affected coefficients anyway).
class SortedBatch {
 public:
  static SortedBatch from_trajectories(const PolicySpec& spec, const Vec& theta,
                                       std::vector<Trajectory> trajs,
                                       MrMode mr_mode, double m_r_theoretical,
                                       ExecMode mode = ExecMode::Serial);

  /// Synthetic batch from raw sorted data; per-trajectory score Hessians are
  /// given densely. Test and bench use.
  static SortedBatch from_raw(std::vector<double> returns,
                              std::vector<Vec> grads, std::vector<Mat> hessians,
                              double m_r_eff);

  int size() const { return static_cast<int>(returns_.size()); }
  int dim() const { return dim_; }
  double m_r_eff() const { return m_r_eff_; }

  double ret(int i) const { return returns_[i]; }            // R_(i+1), 0-based
  const Vec& grad(int i) const { return grads_[i]; }          // grad l_(i+1)
  const std::vector<double>& returns() const { return returns_; }

  /// (sum_t grad^2 log pi of sorted trajectory i) * v, without d x d.
  void hess_vec_accum(int i, const Vec& v, Vec& out) const;
  /// Dense per-trajectory score Hessian (small d only).
  Mat hess_dense(int i) const;

  const std::vector<Trajectory>* trajectories() const {
    return trajs_.empty() ? nullptr : &trajs_;
  }

 private:
  SortedBatch() = default;
  int dim_ = 0;
  double m_r_eff_ = 0.0;
  std::vector<double> returns_;
  std::vector<Vec> grads_;
  // Backing for score Hessians: visit-node caches (policy batches) or dense
  // matrices (raw batches).
  PolicySpec spec_{};
  bool policy_backed_ = false;
  std::vector<std::vector<VisitNode>> nodes_;
  std::vector<Mat> hess_;
  std::vector<Trajectory> trajs_;
};

/// Coefficients c'_i = (R_(i+1)-R_(i)) h'(1-i/tau) (boundary: (Mr-R_(tau))
/// h'_+(0)), c''_i analogous with h''; psi'_i and psi''_i are the suffix sums
/// the rewritten estimator forms consume.
struct CoefficientTable {
  std::vector<double> c1;    // c'_i,  i = 1..tau  (0-based storage)
  std::vector<double> c2;    // c''_i
  std::vector<double> psi1;  // psi'_i  = sum_{j>=i} c'_j
  std::vector<double> psi2;  // psi''_i = (1/b) sum_{j>=i} c''_j
};

CoefficientTable build_coefficients(const SortedBatch& batch,
                                    const Distortion& g);

/// Full-form gradient estimate: -(1/tau) sum_i psi'_i grad l_(i). Identical
/// to exact segment integration of the plug-in EDF integral.
Vec drm_gradient_full(const SortedBatch& batch, const Distortion& g);

/// Variance-reduced gradient: (1/m) sum_i R_(i) h'(1-i/m) grad l_(i).
Vec drm_gradient_vr(const SortedBatch& batch, const Distortion& g);

/// Full-form Hessian estimate:
///   (1/tau) sum_i [ (c''_i/b) grad s_i grad s_i^T
///                   - psi'_i (hess l_(i) + grad l_(i) grad l_(i)^T) ].
Mat drm_hessian_full(const SortedBatch& batch, const Distortion& g);

/// Variance-reduced Hessian:
///   (1/b) sum_i [ psi''_i grad l grad l^T
///                 + R_(i) h'(1-i/b) (hess l + grad l grad l^T) ].
Mat drm_hessian_vr(const SortedBatch& batch, const Distortion& g);

/// Matrix-free operator for the variance-reduced Hessian. apply() costs
/// O(n (d + visit work)) and never materializes d x d.
class HvpOperator {
 public:
  HvpOperator(const SortedBatch& batch, const Distortion& g);
  Vec apply(const Vec& v) const;
  int dim() const { return batch_->dim(); }

 private:
  const SortedBatch* batch_;
  std::vector<double> psi2_;     // psi''_i
  std::vector<double> weight_;   // R_(i) h'(1-i/b)
};

Vec drm_hvp(const SortedBatch& batch, const Distortion& g, const Vec& v);

/// Closed-form smoothness and estimator-error constants of the analysis,
/// evaluated exactly.
struct TheoryConstants {
  double g_h;      // gradient Lipschitz constant
  double l_h;      // Hessian Lipschitz constant
  double kappa1;   // gradient MSE numerator
  double kappa2;   // Hessian MSE numerator (m part)
  double kappa3;   // fourth-moment numerator (m part)
  double t1;       // Hessian MSE numerator (b part)
  double t2;       // fourth-moment numerator (b part)
  double c_d;      // C(d) = 4 (1 + 2 log 2d)
};

TheoryConstants mse_constants(const AssumptionBounds& policy_bounds,
                              const Distortion::DerivativeBounds& g_bounds,
                              double m_r, int horizon, int dim);

/// Dense-Hessian materialization guard.
constexpr int kMaxDenseDim = 512;

/// Thrown when a distortion lacking the required derivatives is passed to an
/// estimator.
class DistortionRejected : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace drm
