#pragma once

// Reference computations used by the tests. Nothing here calls into the
// library's numerical code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace oracle {

inline double norm_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// O(n^2) Kendall tau-b.
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  long long conc = 0, disc = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tx;
      } else if (dy == 0) {
        ++ty;
      } else if ((dx > 0) == (dy > 0)) {
        ++conc;
      } else {
        ++disc;
      }
    }
  const double n0 = static_cast<double>(conc + disc);
  return static_cast<double>(conc - disc) / std::sqrt((n0 + tx) * (n0 + ty));
}

/// Log density of the Gaussian copula with correlation matrix r.
inline double gaussian_copula_logpdf(const Eigen::MatrixXd& r, const std::vector<double>& u) {
  const auto d = static_cast<Eigen::Index>(u.size());
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = norm_quantile(u[static_cast<std::size_t>(i)]);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  const Eigen::VectorXd y = llt.solve(z);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * logdet - 0.5 * (z.dot(y) - z.dot(z));
}

/// Correlation of (1,3) from rho12, rho23 and the partial rho13;2.
inline double correlation_from_partial(double r12, double r23, double r13_2) {
  return r13_2 * std::sqrt((1 - r12 * r12) * (1 - r23 * r23)) + r12 * r23;
}

/// Integral of f over (a, b); tanh-sinh copes with integrable endpoint spikes.
/// `level` selects a separate integrator so calls can be nested.
inline double integrate(const std::function<double(double)>& f, double a, double b, int level = 0) {
  static boost::math::quadrature::tanh_sinh<double> outer(12), inner(12);
  return (level == 0 ? inner : outer).integrate(f, a, b, 1e-10);
}

/// Smooth integrands on a finite interval.
inline double integrate_smooth(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-12);
}

/// Van der Corput radical inverse, used for Halton points.
inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return out;
}

/// log(sum exp(a_i)) in long double, no shifting.
inline double direct_log_sum_exp(const std::vector<double>& a) {
  long double s = 0.0L;
  for (double v : a) s += std::exp(static_cast<long double>(v));
  return static_cast<double>(std::log(s));
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace oracle
