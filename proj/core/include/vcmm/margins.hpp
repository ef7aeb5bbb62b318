#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcmm {

/// Univariate parametric families. Parameter order:
///   Normal(mean, sd), StudentT3(mean, sd) with 3 degrees of freedom,
///   Logistic(location, scale), LogNormal(meanlog, sdlog),
///   LogLogistic(shape, scale), Gamma(shape, rate), Exponential(rate).
enum class MarginFamily { Normal, StudentT3, Logistic, LogNormal, LogLogistic, Gamma, Exponential };

std::string_view to_string(MarginFamily family);
MarginFamily margin_family_from_string(std::string_view name);

int margin_param_count(MarginFamily family);

/// True for families supported on (0, inf).
bool has_positive_support(MarginFamily family);

/// The candidate set used by default: every family except Exponential.
std::vector<MarginFamily> default_margin_candidates();

std::vector<MarginFamily> all_margin_families();

struct MarginModel {
  MarginFamily family = MarginFamily::Normal;
  std::vector<double> params;
  /// Weighted log-likelihood at `params` of the data the model was fitted to.
  double loglik = 0.0;
  /// Number of observations behind the fit (0 for hand-built models).
  double n_obs = 0.0;

  int n_params() const { return static_cast<int>(params.size()); }

  friend bool operator==(const MarginModel&, const MarginModel&) = default;
};

/// Builds a model from explicit parameters; throws DomainError when the
/// parameters are outside the family's parameter space.
MarginModel make_margin(MarginFamily family, std::vector<double> params);

/// True when `params` is a valid parameter vector for `family`.
bool margin_params_valid(MarginFamily family, std::span<const double> params);

bool in_support(MarginFamily family, double x);

double margin_pdf(const MarginModel& model, double x);
double margin_cdf(const MarginModel& model, double x);
double margin_quantile(const MarginModel& model, double p);

/// log-density; returns -inf outside the support instead of throwing.
double margin_logpdf(const MarginModel& model, double x) noexcept;

/// Same as margin_logpdf / margin_cdf without parameter or support checks;
/// x outside the support yields -inf / 0.
double margin_logpdf_unchecked(MarginFamily family, std::span<const double> params, double x) noexcept;
double margin_cdf_unchecked(MarginFamily family, std::span<const double> params, double x) noexcept;

/// Weighted maximum likelihood: maximizes sum_i w_i log f(x_i).
MarginModel fit_margin(std::span<const double> x, std::span<const double> w, MarginFamily family);

/// Unweighted convenience overload.
MarginModel fit_margin(std::span<const double> x, MarginFamily family);

/// -2 loglik + n_params log(n).
double margin_bic(double loglik, int n_params, double n);

/// Fits every feasible candidate and returns the one with minimal BIC.
/// Candidates whose support excludes an observation are skipped.
MarginModel select_margin(std::span<const double> x, std::span<const MarginFamily> candidates);

}  // namespace vcmm
