#pragma once

#include <string>
#include <utility>
#include <vector>

#include "drm/common.hpp"

namespace drm {

/// A distortion function h:[0,1]->R with analytic derivatives. Together with
/// a return distribution it defines the riskmetric
///   rho_h(X) = int_{-Mr}^0 [h(1-F(x)) - h(1)] dx + int_0^{Mr} h(1-F(x)) dx.
/// h(0) = 0 for every catalog entry; monotonicity and normalization h(1)=1
/// hold only for some of them (Gini deviation is non-monotone with h(1)=0).
class Distortion {
 public:
  enum class Kind {
    Identity,
    DualPower,           // h = 1-(1-t)^a, a >= 1
    GiniDeviation,       // h = t - t^2
    Exponential,         // h = 1-exp(-a t), a > 0
    ProportionalHazard,  // h = t^a, 0 < a <= 1
    Cvar,                // h = min(t/(1-a), 1), 0 < a < 1
    Rdeu,                // h = exp(-sqrt(-ln t)), h(0) := 0
  };

  double h(double t) const;
  double h1(double t) const;  // h'
  double h2(double t) const;  // h''
  double h3(double t) const;  // h'''

  /// Right derivatives at 0. Infinite for PHT (a<1) and RDEU.
  double h1_plus0() const { return h1p0_; }
  double h2_plus0() const { return h2p0_; }

  /// True iff h', h'', h''' exist and are bounded on [0,1] (the smoothness
  /// the cubic-regularized Newton optimizer requires).
  bool smooth_enough_for_newton() const { return smooth_; }

  /// True iff |h'| is bounded on (0,1] (enough for gradient estimation).
  bool h1_bounded() const { return h1_bounded_; }

  /// Uniform bounds (M_h', M_h'', M_h''') over [0,1]. Only meaningful when
  /// smooth_enough_for_newton(); infinities otherwise.
  struct DerivativeBounds {
    double m1, m2, m3;
  };
  DerivativeBounds derivative_bounds() const;

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  double param() const { return param_; }

  /// Looks up a catalog entry by name with optional parameters.
  static Distortion catalog(const std::string& name,
                            const std::vector<double>& params = {});

  /// Parses a config string of the form "name" or "name:param",
  /// e.g. "gini_deviation", "dual_power:2.0", "cvar:0.5".
  static Distortion parse(const std::string& config);

 private:
  Distortion(Kind kind, double param, std::string name);

  Kind kind_;
  double param_ = 0.0;
  std::string name_;
  double h1p0_ = 0.0;
  double h2p0_ = 0.0;
  bool smooth_ = false;
  bool h1_bounded_ = false;
};

/// Sorted sample view of an empirical return distribution together with the
/// support bound M_r used as integration limit.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(std::vector<double> samples, double support_bound);

  const std::vector<double>& samples() const { return samples_; }
  int size() const { return static_cast<int>(samples_.size()); }
  double support_bound() const { return support_bound_; }

  /// EDF value G(x): right-continuous step function, G(x) = i/m on
  /// [R_(i), R_(i+1)).
  double edf(double x) const;

 private:
  std::vector<double> samples_;  // ascending
  double support_bound_;
};

/// Riskmetric of an empirical distribution, evaluated exactly as a finite sum
/// over the piecewise-constant EDF segments (no quadrature).
double drm_value(const EmpiricalDistribution& dist, const Distortion& g);

/// Riskmetric of a finitely supported distribution given as (value, prob)
/// atoms. Probabilities must sum to 1 within 1e-12, values lie in [-Mr, Mr].
double drm_value_exact(const std::vector<std::pair<double, double>>& atoms,
                       const Distortion& g, double m_r);

}  // namespace drm
