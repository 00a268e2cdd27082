#include "drm/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Distortion::Distortion(Kind kind, double param, std::string name)
    : kind_(kind), param_(param), name_(std::move(name)) {
  switch (kind_) {
    case Kind::Identity:
      h1p0_ = 1.0;
      h2p0_ = 0.0;
      smooth_ = true;
      h1_bounded_ = true;
      break;
    case Kind::DualPower:
      h1p0_ = param_;
      h2p0_ = -param_ * (param_ - 1.0);
      // (1-t)^(a-k) stays bounded on [0,1] for every k<=3 only when the
      // exponent never goes negative before the prefactor vanishes.
      smooth_ = (param_ == 1.0 || param_ == 2.0 || param_ >= 3.0);
      h1_bounded_ = true;
      break;
    case Kind::GiniDeviation:
      h1p0_ = 1.0;
      h2p0_ = -2.0;
      smooth_ = true;
      h1_bounded_ = true;
      break;
    case Kind::Exponential:
      h1p0_ = param_;
      h2p0_ = -param_ * param_;
      smooth_ = true;
      h1_bounded_ = true;
      break;
    case Kind::ProportionalHazard:
      if (param_ == 1.0) {
        h1p0_ = 1.0;
        h2p0_ = 0.0;
        smooth_ = true;
        h1_bounded_ = true;
      } else {
        h1p0_ = kInf;
        h2p0_ = -kInf;
        smooth_ = false;
        h1_bounded_ = false;
      }
      break;
    case Kind::Cvar:
      h1p0_ = 1.0 / (1.0 - param_);
      h2p0_ = 0.0;
      smooth_ = false;  // h' jumps at t = 1-a
      h1_bounded_ = true;
      break;
    case Kind::Rdeu:
      h1p0_ = kInf;
      h2p0_ = kInf;
      smooth_ = false;
      h1_bounded_ = false;
      break;
  }
}

double Distortion::h(double t) const {
  switch (kind_) {
    case Kind::Identity:
      return t;
    case Kind::DualPower:
      return 1.0 - std::pow(1.0 - t, param_);
    case Kind::GiniDeviation:
      return t - t * t;
    case Kind::Exponential:
      return 1.0 - std::exp(-param_ * t);
    case Kind::ProportionalHazard:
      return std::pow(t, param_);
    case Kind::Cvar:
      return std::min(t / (1.0 - param_), 1.0);
    case Kind::Rdeu:
      if (t <= 0.0) return 0.0;
      if (t >= 1.0) return 1.0;
      return std::exp(-std::sqrt(-std::log(t)));
  }
  return 0.0;
}

double Distortion::h1(double t) const {
  switch (kind_) {
    case Kind::Identity:
      return 1.0;
    case Kind::DualPower:
      return param_ * std::pow(1.0 - t, param_ - 1.0);
    case Kind::GiniDeviation:
      return 1.0 - 2.0 * t;
    case Kind::Exponential:
      return param_ * std::exp(-param_ * t);
    case Kind::ProportionalHazard:
      return param_ * std::pow(t, param_ - 1.0);
    case Kind::Cvar:
      return t < 1.0 - param_ ? 1.0 / (1.0 - param_) : 0.0;
    case Kind::Rdeu: {
      if (t <= 0.0) return kInf;
      if (t >= 1.0) return kInf;
      const double lg = std::log(t);
      const double s = std::sqrt(-lg);
      return -s * std::exp(-s) / (2.0 * t * lg);
    }
  }
  return 0.0;
}

double Distortion::h2(double t) const {
  switch (kind_) {
    case Kind::Identity:
      return 0.0;
    case Kind::DualPower:
      return -param_ * (param_ - 1.0) * std::pow(1.0 - t, param_ - 2.0);
    case Kind::GiniDeviation:
      return -2.0;
    case Kind::Exponential:
      return -param_ * param_ * std::exp(-param_ * t);
    case Kind::ProportionalHazard:
      return param_ * (param_ - 1.0) * std::pow(t, param_ - 2.0);
    case Kind::Cvar:
      return 0.0;
    case Kind::Rdeu: {
      if (t <= 0.0 || t >= 1.0) return kInf;
      const double lg = std::log(t);
      const double s = std::sqrt(-lg);
      return (s + (2.0 * s - 1.0) * lg) * std::exp(-s) / (4.0 * t * t * lg * lg);
    }
  }
  return 0.0;
}

double Distortion::h3(double t) const {
  switch (kind_) {
    case Kind::Identity:
      return 0.0;
    case Kind::DualPower: {
      const double a = param_;
      if (a == 1.0 || a == 2.0) return 0.0;
      return a * (a - 1.0) * (a - 2.0) * std::pow(1.0 - t, a - 3.0);
    }
    case Kind::GiniDeviation:
      return 0.0;
    case Kind::Exponential:
      return param_ * param_ * param_ * std::exp(-param_ * t);
    case Kind::ProportionalHazard:
      return param_ * (param_ - 1.0) * (param_ - 2.0) * std::pow(t, param_ - 3.0);
    case Kind::Cvar:
      return 0.0;
    case Kind::Rdeu: {
      if (t <= 0.0 || t >= 1.0) return kInf;
      const double lg = std::log(t);
      const double s = std::sqrt(-lg);
      const double num =
          -3.0 * s + (3.0 - 5.0 * s) * lg + 2.0 * (3.0 - 4.0 * s) * lg * lg;
      return num * std::exp(-s) / (8.0 * t * t * t * lg * lg * lg);
    }
  }
  return 0.0;
}

Distortion::DerivativeBounds Distortion::derivative_bounds() const {
  switch (kind_) {
    case Kind::Identity:
      return {1.0, 0.0, 0.0};
    case Kind::DualPower: {
      const double a = param_;
      if (!smooth_) return {a, kInf, kInf};
      // |h'|, |h''|, |h'''| are maximized at t = 0 when the exponents are
      // nonnegative; the a=2 case has h''' identically zero.
      const double m3 = (a == 1.0 || a == 2.0) ? 0.0 : a * (a - 1.0) * (a - 2.0);
      return {a, a * (a - 1.0), m3};
    }
    case Kind::GiniDeviation:
      return {1.0, 2.0, 0.0};
    case Kind::Exponential:
      return {param_, param_ * param_, param_ * param_ * param_};
    case Kind::ProportionalHazard:
      if (param_ == 1.0) return {1.0, 0.0, 0.0};
      return {kInf, kInf, kInf};
    case Kind::Cvar:
      return {1.0 / (1.0 - param_), kInf, kInf};
    case Kind::Rdeu:
      return {kInf, kInf, kInf};
  }
  return {kInf, kInf, kInf};
}

Distortion Distortion::catalog(const std::string& name,
                               const std::vector<double>& params) {
  auto want_param = [&](double lo, double hi, bool lo_open, bool hi_open) {
    if (params.size() != 1) {
      throw ConfigError("distortion '" + name + "' requires one parameter");
    }
    const double a = params[0];
    const bool lo_ok = lo_open ? a > lo : a >= lo;
    const bool hi_ok = hi_open ? a < hi : a <= hi;
    if (!lo_ok || !hi_ok || !std::isfinite(a)) {
      throw ConfigError("distortion '" + name + "': parameter out of range");
    }
    return a;
  };
  auto no_param = [&]() {
    if (!params.empty()) {
      throw ConfigError("distortion '" + name + "' takes no parameter");
    }
  };

  if (name == "identity") {
    no_param();
    return Distortion(Kind::Identity, 0.0, name);
  }
  if (name == "dual_power") {
    const double a = want_param(1.0, kInf, false, true);
    return Distortion(Kind::DualPower, a, name + ":" + std::to_string(a));
  }
  if (name == "gini_deviation") {
    no_param();
    return Distortion(Kind::GiniDeviation, 0.0, name);
  }
  if (name == "exponential") {
    const double a = want_param(0.0, kInf, true, true);
    return Distortion(Kind::Exponential, a, name + ":" + std::to_string(a));
  }
  if (name == "proportional_hazard") {
    const double a = want_param(0.0, 1.0, true, false);
    return Distortion(Kind::ProportionalHazard, a,
                      name + ":" + std::to_string(a));
  }
  if (name == "cvar") {
    const double a = want_param(0.0, 1.0, true, true);
    return Distortion(Kind::Cvar, a, name + ":" + std::to_string(a));
  }
  if (name == "rdeu") {
    no_param();
    return Distortion(Kind::Rdeu, 0.0, name);
  }
  throw ConfigError("unknown distortion '" + name + "'");
}

Distortion Distortion::parse(const std::string& config) {
  const auto colon = config.find(':');
  if (colon == std::string::npos) return catalog(config, {});
  const std::string name = config.substr(0, colon);
  const std::string rest = config.substr(colon + 1);
  try {
    std::size_t used = 0;
    const double a = std::stod(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(rest);
    return catalog(name, {a});
  } catch (const std::logic_error&) {
    throw ConfigError("bad distortion parameter in '" + config + "'");
  }
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples,
                                             double support_bound)
    : samples_(std::move(samples)), support_bound_(support_bound) {
  if (samples_.empty()) throw ConfigError("empirical distribution is empty");
  if (!std::isfinite(support_bound_)) {
    throw ConfigError("support bound must be finite");
  }
  std::sort(samples_.begin(), samples_.end());
  if (samples_.front() < -support_bound_ || samples_.back() > support_bound_) {
    throw ConfigError("samples exceed the support bound");
  }
}

double EmpiricalDistribution::edf(double x) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(it - samples_.begin()) /
         static_cast<double>(samples_.size());
}

namespace {

// Shared segment walk for both the empirical and the exact variant.
// `levels` holds strictly increasing breakpoints x_1 < ... < x_K and
// `cdf_at[k]` the CDF value on [x_k, x_{k+1}). Integrates Eq-style
//   int_{-Mr}^0 [h(1-F)-h(1)] dx + int_0^{Mr} h(1-F) dx
// exactly over the piecewise-constant segments.
double drm_integral(const std::vector<double>& levels,
                    const std::vector<double>& cdf_at, const Distortion& g,
                    double m_r) {
  const double h1v = g.h(1.0);
  double total = 0.0;
  double lo = -m_r;
  double cdf = 0.0;
  std::size_t k = 0;
  while (lo < m_r) {
    double hi = m_r;
    if (k < levels.size() && levels[k] < hi) hi = std::max(levels[k], lo);
    // Piece [lo, hi) carries constant CDF `cdf`.
    if (hi > lo) {
      const double neg = std::min(hi, 0.0) - std::min(lo, 0.0);
      const double pos = std::max(hi, 0.0) - std::max(lo, 0.0);
      const double hv = g.h(1.0 - cdf);
      total += neg * (hv - h1v) + pos * hv;
    }
    if (k < levels.size() && levels[k] <= hi) {
      cdf = cdf_at[k];
      ++k;
    }
    lo = hi;
  }
  return total;
}

}  // namespace

double drm_value(const EmpiricalDistribution& dist, const Distortion& g) {
  const auto& s = dist.samples();
  const double m = static_cast<double>(s.size());
  std::vector<double> levels;
  std::vector<double> cdf;
  levels.reserve(s.size());
  cdf.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!levels.empty() && s[i] == levels.back()) {
      cdf.back() = static_cast<double>(i + 1) / m;
    } else {
      levels.push_back(s[i]);
      cdf.push_back(static_cast<double>(i + 1) / m);
    }
  }
  return drm_integral(levels, cdf, g, dist.support_bound());
}

double drm_value_exact(const std::vector<std::pair<double, double>>& atoms,
                       const Distortion& g, double m_r) {
  if (atoms.empty()) throw ConfigError("atom list is empty");
  std::vector<std::pair<double, double>> sorted = atoms;
  std::sort(sorted.begin(), sorted.end());
  double mass = 0.0;
  std::vector<double> levels;
  std::vector<double> cdf;
  for (const auto& [v, p] : sorted) {
    if (p < 0.0) throw ConfigError("negative probability mass");
    if (v < -m_r || v > m_r) throw ConfigError("atom outside [-Mr, Mr]");
    mass += p;
    if (!levels.empty() && v == levels.back()) {
      cdf.back() = mass;
    } else {
      levels.push_back(v);
      cdf.push_back(mass);
    }
  }
  if (std::abs(mass - 1.0) > 1e-12) {
    throw ConfigError("probabilities do not sum to 1");
  }
  cdf.back() = 1.0;  // clamp accumulated rounding
  return drm_integral(levels, cdf, g, m_r);
}

}  // namespace drm
