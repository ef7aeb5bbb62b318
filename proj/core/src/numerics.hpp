#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

namespace vcmm::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kUnitEps = 1e-15;
inline constexpr double kSqrt2 = 1.4142135623730950488;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double clamp_unit(double u) { return std::clamp(u, kUnitEps, 1.0 - kUnitEps); }

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

inline double norm_quantile(double p) { return -kSqrt2 * boost::math::erfc_inv(2.0 * p); }

inline double norm_logpdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// log(exp(x) - 1) for x > 0.
inline double log_expm1(double x) {
  return x > 30.0 ? x + std::log1p(-std::exp(-x)) : std::log(std::expm1(x));
}

/// log(1 + exp(x)).
inline double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// log(1 - exp(-x)) for x > 0.
inline double log1m_exp_neg(double x) {
  return x > 0.6931471805599453 ? std::log1p(-std::exp(-x)) : std::log(-std::expm1(-x));
}

/// log(t) using whichever of t or 1 - t carries more precision.
inline double log_unit(double t, double tbar) { return t < 0.5 ? std::log(t) : std::log1p(-tbar); }

}  // namespace vcmm::detail
