#include "vcmm/margins.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "numerics.hpp"
#include "vcmm/errors.hpp"
#include "vcmm/optimize.hpp"

namespace vcmm {

using detail::kInf;

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;
// log(2 / (pi sqrt(3))), the t_3 normalizing constant.
const double kLogT3Const = std::log(2.0 / (std::numbers::pi * kSqrt3));

struct Named {
  MarginFamily family;
  std::string_view name;
};

constexpr Named kNames[] = {
    {MarginFamily::Normal, "norm"},      {MarginFamily::StudentT3, "t3"},
    {MarginFamily::Logistic, "logis"},   {MarginFamily::LogNormal, "lnorm"},
    {MarginFamily::LogLogistic, "llogis"}, {MarginFamily::Gamma, "gamma"},
    {MarginFamily::Exponential, "exp"},
};

double t3_cdf(double t) {
  const double a = t / kSqrt3;
  return 0.5 + (a / (1.0 + a * a) + std::atan(a)) / std::numbers::pi;
}

}  // namespace

std::string_view to_string(MarginFamily family) {
  for (const auto& n : kNames)
    if (n.family == family) return n.name;
  return "unknown";
}

MarginFamily margin_family_from_string(std::string_view name) {
  for (const auto& n : kNames)
    if (n.name == name) return n.family;
  throw ConfigError("unknown margin family '" + std::string(name) + "'");
}

int margin_param_count(MarginFamily family) { return family == MarginFamily::Exponential ? 1 : 2; }

bool has_positive_support(MarginFamily family) {
  switch (family) {
    case MarginFamily::LogNormal:
    case MarginFamily::LogLogistic:
    case MarginFamily::Gamma:
    case MarginFamily::Exponential:
      return true;
    default:
      return false;
  }
}

std::vector<MarginFamily> default_margin_candidates() {
  return {MarginFamily::Normal,    MarginFamily::StudentT3,   MarginFamily::Logistic,
          MarginFamily::LogNormal, MarginFamily::LogLogistic, MarginFamily::Gamma};
}

std::vector<MarginFamily> all_margin_families() {
  auto out = default_margin_candidates();
  out.push_back(MarginFamily::Exponential);
  return out;
}

bool margin_params_valid(MarginFamily family, std::span<const double> p) {
  if (static_cast<int>(p.size()) != margin_param_count(family)) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  switch (family) {
    case MarginFamily::Normal:
    case MarginFamily::StudentT3:
    case MarginFamily::Logistic:
    case MarginFamily::LogNormal:
      return p[1] > 0.0;
    case MarginFamily::LogLogistic:
    case MarginFamily::Gamma:
      return p[0] > 0.0 && p[1] > 0.0;
    case MarginFamily::Exponential:
      return p[0] > 0.0;
  }
  return false;
}

MarginModel make_margin(MarginFamily family, std::vector<double> params) {
  if (!margin_params_valid(family, params)) {
    throw DomainError("invalid parameters for margin family " + std::string(to_string(family)));
  }
  MarginModel m;
  m.family = family;
  m.params = std::move(params);
  return m;
}

bool in_support(MarginFamily family, double x) {
  if (!std::isfinite(x)) return false;
  return !has_positive_support(family) || x > 0.0;
}

double margin_logpdf_unchecked(MarginFamily family, std::span<const double> p, double x) noexcept {
  if (!in_support(family, x)) return -kInf;
  switch (family) {
    case MarginFamily::Normal: {
      const double z = (x - p[0]) / p[1];
      return detail::norm_logpdf(z) - std::log(p[1]);
    }
    case MarginFamily::StudentT3: {
      const double s = p[1] / kSqrt3;
      const double z = (x - p[0]) / s;
      return kLogT3Const - std::log(s) - 2.0 * std::log1p(z * z / 3.0);
    }
    case MarginFamily::Logistic: {
      const double z = (x - p[0]) / p[1];
      return -std::log(p[1]) - z - 2.0 * detail::softplus(-z);
    }
    case MarginFamily::LogNormal: {
      const double lx = std::log(x);
      const double z = (lx - p[0]) / p[1];
      return detail::norm_logpdf(z) - std::log(p[1]) - lx;
    }
    case MarginFamily::LogLogistic: {
      const double r = std::log(x) - std::log(p[1]);
      return std::log(p[0]) - std::log(p[1]) + (p[0] - 1.0) * r - 2.0 * detail::softplus(p[0] * r);
    }
    case MarginFamily::Gamma:
      return p[0] * std::log(p[1]) + (p[0] - 1.0) * std::log(x) - p[1] * x - std::lgamma(p[0]);
    case MarginFamily::Exponential:
      return std::log(p[0]) - p[0] * x;
  }
  return -kInf;
}

double margin_cdf_unchecked(MarginFamily family, std::span<const double> p, double x) noexcept {
  if (has_positive_support(family) && x <= 0.0) return 0.0;
  switch (family) {
    case MarginFamily::Normal:
      return detail::norm_cdf((x - p[0]) / p[1]);
    case MarginFamily::StudentT3:
      return t3_cdf((x - p[0]) / (p[1] / kSqrt3));
    case MarginFamily::Logistic:
      return 1.0 / (1.0 + std::exp(-(x - p[0]) / p[1]));
    case MarginFamily::LogNormal:
      return detail::norm_cdf((std::log(x) - p[0]) / p[1]);
    case MarginFamily::LogLogistic:
      return 1.0 / (1.0 + std::exp(-p[0] * (std::log(x) - std::log(p[1]))));
    case MarginFamily::Gamma:
      return boost::math::gamma_p(p[0], p[1] * x);
    case MarginFamily::Exponential:
      return -std::expm1(-p[0] * x);
  }
  return detail::kNaN;
}

double margin_logpdf(const MarginModel& model, double x) noexcept {
  return margin_logpdf_unchecked(model.family, model.params, x);
}

double margin_pdf(const MarginModel& model, double x) {
  if (!in_support(model.family, x)) {
    throw DomainError("x = " + std::to_string(x) + " outside the support of " +
                      std::string(to_string(model.family)));
  }
  return std::exp(margin_logpdf(model, x));
}

double margin_cdf(const MarginModel& model, double x) {
  if (!in_support(model.family, x)) {
    throw DomainError("x = " + std::to_string(x) + " outside the support of " +
                      std::string(to_string(model.family)));
  }
  return margin_cdf_unchecked(model.family, model.params, x);
}

double margin_quantile(const MarginModel& model, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile argument must lie in (0, 1)");
  const auto& p = model.params;
  switch (model.family) {
    case MarginFamily::Normal:
      return p[0] + p[1] * detail::norm_quantile(q);
    case MarginFamily::StudentT3: {
      const boost::math::students_t_distribution<double> t3(3.0);
      return p[0] + p[1] / kSqrt3 * boost::math::quantile(t3, q);
    }
    case MarginFamily::Logistic:
      return p[0] + p[1] * std::log(q / (1.0 - q));
    case MarginFamily::LogNormal:
      return std::exp(p[0] + p[1] * detail::norm_quantile(q));
    case MarginFamily::LogLogistic:
      return p[1] * std::exp(std::log(q / (1.0 - q)) / p[0]);
    case MarginFamily::Gamma:
      return boost::math::gamma_p_inv(p[0], q) / p[1];
    case MarginFamily::Exponential:
      return -std::log1p(-q) / p[0];
  }
  return detail::kNaN;
}

namespace {

struct WeightedData {
  std::vector<double> x;
  std::vector<double> w;  // normalized to mean 1
  double scale = 1.0;     // original weight = normalized weight * scale
};

WeightedData prepare(std::span<const double> x, std::span<const double> w, MarginFamily family) {
  if (x.size() != w.size()) throw std::invalid_argument("fit_margin: x and w differ in length");
  if (x.size() < 3) throw DegenerateDataError("fit_margin: need at least 3 observations");
  WeightedData d;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i])) throw DomainError("fit_margin: negative weight");
    if (w[i] == 0.0) continue;
    if (!in_support(family, x[i])) {
      throw DomainError("fit_margin: observation " + std::to_string(x[i]) +
                        " outside the support of " + std::string(to_string(family)));
    }
    d.x.push_back(x[i]);
    d.w.push_back(w[i]);
    total += w[i];
  }
  if (!(total > 0.0)) throw DegenerateDataError("fit_margin: weights sum to zero");
  d.scale = total / static_cast<double>(d.w.size());
  for (double& wi : d.w) wi /= d.scale;
  const auto [lo, hi] = std::minmax_element(d.x.begin(), d.x.end());
  if (*lo == *hi) throw DegenerateDataError("fit_margin: all observations are identical");
  return d;
}

struct Moments {
  double mean;
  double sd;
};

Moments weighted_moments(const std::vector<double>& x, const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
  }
  const double mean = sx / sw;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - mean) * (x[i] - mean);
  return {mean, std::sqrt(ss / sw)};
}

std::vector<double> to_params(MarginFamily family, std::span<const double> z) {
  switch (family) {
    case MarginFamily::StudentT3:
    case MarginFamily::Logistic:
      return {z[0], std::exp(z[1])};
    case MarginFamily::LogLogistic:
    case MarginFamily::Gamma:
      return {std::exp(z[0]), std::exp(z[1])};
    default:
      return {z.begin(), z.end()};
  }
}

std::vector<double> numeric_fit(const WeightedData& d, MarginFamily family) {
  std::vector<double> z0;
  std::vector<double> step;
  switch (family) {
    case MarginFamily::StudentT3: {
      const auto m = weighted_moments(d.x, d.w);
      z0 = {m.mean, std::log(m.sd)};
      step = {0.1 * m.sd, 0.1};
      break;
    }
    case MarginFamily::Logistic: {
      const auto m = weighted_moments(d.x, d.w);
      z0 = {m.mean, std::log(m.sd * kSqrt3 / std::numbers::pi)};
      step = {0.1 * m.sd, 0.1};
      break;
    }
    case MarginFamily::LogLogistic: {
      std::vector<double> lx(d.x.size());
      std::transform(d.x.begin(), d.x.end(), lx.begin(), [](double v) { return std::log(v); });
      const auto m = weighted_moments(lx, d.w);
      const double s = m.sd * kSqrt3 / std::numbers::pi;
      z0 = {std::log(1.0 / s), m.mean};
      step = {0.1, 0.1};
      break;
    }
    case MarginFamily::Gamma: {
      const auto m = weighted_moments(d.x, d.w);
      const double var = m.sd * m.sd;
      z0 = {std::log(m.mean * m.mean / var), std::log(m.mean / var)};
      step = {0.1, 0.1};
      break;
    }
    default:
      throw std::logic_error("numeric_fit: closed-form family");
  }

  auto objective = [&](std::span<const double> z) {
    const auto p = to_params(family, z);
    if (!margin_params_valid(family, p)) return kInf;
    double ll = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i)
      ll += d.w[i] * margin_logpdf_unchecked(family, p, d.x[i]);
    return std::isfinite(ll) ? -ll : kInf;
  };

  OptimizeOptions options;
  options.max_iter = 5000;
  options.ftol = 1e-13;
  options.xtol = 1e-9;
  OptimizeResult r = nelder_mead(objective, z0, step, options);
  if (r.converged) {
    // Restart from the optimum to guard against simplex collapse.
    for (double& s : step) s *= 0.1;
    OptimizeResult again = nelder_mead(objective, r.x, step, options);
    if (again.value <= r.value) r = std::move(again);
  }
  if (!r.converged || !std::isfinite(r.value)) {
    throw ConvergenceError("fit_margin: optimizer did not converge for " +
                               std::string(to_string(family)),
                           to_params(family, r.x));
  }
  return to_params(family, r.x);
}

}  // namespace

MarginModel fit_margin(std::span<const double> x, std::span<const double> w, MarginFamily family) {
  const WeightedData d = prepare(x, w, family);
  std::vector<double> params;
  switch (family) {
    case MarginFamily::Normal: {
      const auto m = weighted_moments(d.x, d.w);
      params = {m.mean, m.sd};
      break;
    }
    case MarginFamily::LogNormal: {
      std::vector<double> lx(d.x.size());
      std::transform(d.x.begin(), d.x.end(), lx.begin(), [](double v) { return std::log(v); });
      const auto m = weighted_moments(lx, d.w);
      params = {m.mean, m.sd};
      break;
    }
    case MarginFamily::Exponential: {
      double sw = 0.0, swx = 0.0;
      for (std::size_t i = 0; i < d.x.size(); ++i) {
        sw += d.w[i];
        swx += d.w[i] * d.x[i];
      }
      params = {sw / swx};
      break;
    }
    default:
      params = numeric_fit(d, family);
  }

  MarginModel model;
  model.family = family;
  model.params = std::move(params);
  double ll = 0.0, n = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    const double wi = d.w[i] * d.scale;
    ll += wi * margin_logpdf(model, d.x[i]);
    n += wi;
  }
  model.loglik = ll;
  model.n_obs = n;
  return model;
}

MarginModel fit_margin(std::span<const double> x, MarginFamily family) {
  const std::vector<double> w(x.size(), 1.0);
  return fit_margin(x, w, family);
}

double margin_bic(double loglik, int n_params, double n) {
  return -2.0 * loglik + static_cast<double>(n_params) * std::log(n);
}

MarginModel select_margin(std::span<const double> x, std::span<const MarginFamily> candidates) {
  if (candidates.empty()) throw ConfigError("select_margin: empty candidate set");
  if (x.size() < 5) throw DegenerateDataError("select_margin: need at least 5 observations");
  const double xmin = *std::min_element(x.begin(), x.end());
  const double n = static_cast<double>(x.size());

  std::ostringstream failures;
  std::vector<MarginModel> fitted;
  std::vector<double> bics;
  for (MarginFamily family : candidates) {
    if (has_positive_support(family) && xmin <= 0.0) {
      failures << ' ' << to_string(family) << ": support excludes observations;";
      continue;
    }
    try {
      fitted.push_back(fit_margin(x, family));
      bics.push_back(margin_bic(fitted.back().loglik, fitted.back().n_params(), n));
    } catch (const Error& e) {
      failures << ' ' << to_string(family) << ": " << e.what() << ';';
    }
  }
  if (fitted.empty()) throw SelectionError("select_margin: no feasible candidate:" + failures.str());
  // First candidate wins ties.
  const auto best = std::min_element(bics.begin(), bics.end()) - bics.begin();
  return fitted[static_cast<std::size_t>(best)];
}

}  // namespace vcmm
