#include "vcmm/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "numerics.hpp"
#include "vcmm/errors.hpp"
#include "vcmm/optimize.hpp"

namespace vcmm {

using detail::kInf;

namespace {

constexpr double kMinResponsibility = 1e-12;

// Per-row log(pi_j) + log g_j(x_i).
Matrix weighted_log_densities(const MixtureModel& m, const Matrix& x) {
  Matrix out(x.rows(), static_cast<std::size_t>(m.k()));
  for (int j = 0; j < m.k(); ++j) {
    const Component& c = m.components[static_cast<std::size_t>(j)];
    const double lw = std::log(c.weight);
    const auto col = component_logpdf(c, x);
    for (std::size_t i = 0; i < x.rows(); ++i) out(i, static_cast<std::size_t>(j)) = lw + col[i];
  }
  return out;
}

double row_log_sum(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  if (mx == -kInf) return -kInf;
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

double loglik_from(const Matrix& logd) {
  double ll = 0.0;
  for (std::size_t i = 0; i < logd.rows(); ++i) {
    const double l = row_log_sum(logd.row(i));
    if (l == -kInf)
      throw DomainError("observation " + std::to_string(i + 1) +
                        " lies outside the support of every component");
    ll += l;
  }
  return ll;
}

Matrix posterior_from(const Matrix& logd) {
  Matrix r(logd.rows(), logd.cols());
  for (std::size_t i = 0; i < logd.rows(); ++i) {
    const double l = row_log_sum(logd.row(i));
    if (l == -kInf)
      throw DomainError("observation " + std::to_string(i + 1) +
                        " lies outside the support of every component");
    for (std::size_t j = 0; j < logd.cols(); ++j) r(i, j) = std::exp(logd(i, j) - l);
  }
  return r;
}

void check_data(const MixtureModel& m, const Matrix& x) {
  if (static_cast<int>(x.cols()) != m.dim())
    throw SchemaError("data has " + std::to_string(x.cols()) + " columns, model expects " +
                      std::to_string(m.dim()));
}

// Margin parameters in unconstrained coordinates: scales and shapes on the log scale.
bool positive_param(MarginFamily f, std::size_t i) {
  switch (f) {
    case MarginFamily::LogLogistic:
    case MarginFamily::Gamma:
    case MarginFamily::Exponential:
      return true;
    default:
      return i == 1;
  }
}

struct Rows {
  Matrix x;
  std::vector<double> w;
};

Rows weighted_rows(const Matrix& x, const Matrix& r, std::size_t j) {
  std::vector<std::size_t> keep;
  Rows out;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (r(i, j) >= kMinResponsibility) {
      keep.push_back(i);
      out.w.push_back(r(i, j));
    }
  }
  out.x = x.select_rows(keep);
  return out;
}

}  // namespace

void validate(const MixtureModel& m) {
  if (m.components.empty()) throw DomainError("mixture needs at least one component");
  const int d = m.dim();
  double total = 0.0;
  for (const auto& c : m.components) {
    if (c.dim() != d) throw DomainError("components disagree in dimension");
    if (c.vine.dim() != d) throw DomainError("vine dimension does not match the margins");
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw DomainError("component weight outside (0, 1]");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("component weights do not sum to one");
}

double component_logpdf(const Component& c, std::span<const double> x) {
  if (static_cast<int>(x.size()) != c.dim()) throw DomainError("component: dimension mismatch");
  double ll = 0.0;
  std::vector<double> u(x.size());
  for (std::size_t p = 0; p < x.size(); ++p) {
    const MarginModel& mm = c.margins[p];
    if (!std::isfinite(x[p]) || !in_support(mm.family, x[p]))
      throw DomainError("variable " + std::to_string(p + 1) + " value " + std::to_string(x[p]) +
                        " is outside the support of its " + std::string(to_string(mm.family)) +
                        " margin");
    ll += margin_logpdf_unchecked(mm.family, mm.params, x[p]);
    u[p] = margin_cdf_unchecked(mm.family, mm.params, x[p]);
  }
  return ll + c.vine.logpdf(u);
}

Matrix component_uniforms(const Component& c, const Matrix& x) {
  Matrix u(x.rows(), x.cols());
  for (std::size_t p = 0; p < x.cols(); ++p) {
    const MarginModel& mm = c.margins[p];
    for (std::size_t i = 0; i < x.rows(); ++i)
      u(i, p) = in_support(mm.family, x(i, p)) ? margin_cdf_unchecked(mm.family, mm.params, x(i, p))
                                               : 0.0;
  }
  return u;
}

std::vector<double> component_logpdf(const Component& c, const Matrix& x) {
  std::vector<double> out(x.rows(), 0.0);
  std::vector<double> u(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double ll = 0.0;
    for (std::size_t p = 0; p < x.cols() && ll != -kInf; ++p) {
      const MarginModel& mm = c.margins[p];
      const double xp = x(i, p);
      if (!in_support(mm.family, xp)) {
        ll = -kInf;
        break;
      }
      ll += margin_logpdf_unchecked(mm.family, mm.params, xp);
      u[p] = margin_cdf_unchecked(mm.family, mm.params, xp);
    }
    out[i] = ll == -kInf ? ll : ll + c.vine.logpdf(u);
    if (std::isnan(out[i])) out[i] = -kInf;
  }
  return out;
}

double mixture_logpdf(const MixtureModel& m, std::span<const double> x) {
  std::vector<double> terms;
  for (const auto& c : m.components) {
    double l = -kInf;
    try {
      l = std::log(c.weight) + component_logpdf(c, x);
    } catch (const DomainError&) {
    }
    terms.push_back(l);
  }
  return row_log_sum(terms);
}

double data_loglik(const MixtureModel& m, const Matrix& x) {
  check_data(m, x);
  return loglik_from(weighted_log_densities(m, x));
}

Matrix e_step(const MixtureModel& m, const Matrix& x) {
  check_data(m, x);
  return posterior_from(weighted_log_densities(m, x));
}

std::vector<double> cm_step1(const Matrix& r) {
  const double n = static_cast<double>(r.rows());
  std::vector<double> pi(r.cols(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) pi[j] += r(i, j);
  for (std::size_t j = 0; j < r.cols(); ++j) {
    if (pi[j] < n * 1e-6)
      throw EmptyComponentError("component " + std::to_string(j + 1) + " has no posterior mass",
                                static_cast<int>(j), 0);
    pi[j] /= n;
  }
  return pi;
}

MixtureModel cm_step2(const MixtureModel& m, const Matrix& x, const Matrix& r, bool* flagged) {
  check_data(m, x);
  MixtureModel out = m;
  const std::size_t d = x.cols();
  for (std::size_t j = 0; j < out.components.size(); ++j) {
    Component& c = out.components[j];
    const Rows rows = weighted_rows(x, r, j);
    if (rows.w.empty()) continue;

    std::vector<double> z0;
    for (const auto& mm : c.margins)
      for (std::size_t q = 0; q < mm.params.size(); ++q)
        z0.push_back(positive_param(mm.family, q) ? std::log(mm.params[q]) : mm.params[q]);

    auto unpack = [&](std::span<const double> z, std::vector<std::vector<double>>& params) {
      std::size_t at = 0;
      params.resize(d);
      for (std::size_t p = 0; p < d; ++p) {
        const auto& mm = c.margins[p];
        params[p].resize(mm.params.size());
        for (std::size_t q = 0; q < mm.params.size(); ++q, ++at)
          params[p][q] = positive_param(mm.family, q) ? std::exp(z[at]) : z[at];
      }
    };
    std::vector<std::vector<double>> params;
    std::vector<double> u(d);
    auto objective = [&](std::span<const double> z) {
      unpack(z, params);
      for (std::size_t p = 0; p < d; ++p)
        if (!margin_params_valid(c.margins[p].family, params[p])) return kInf;
      double total = 0.0;
      for (std::size_t i = 0; i < rows.x.rows(); ++i) {
        double ll = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
          const double xp = rows.x(i, p);
          ll += margin_logpdf_unchecked(c.margins[p].family, params[p], xp);
          u[p] = margin_cdf_unchecked(c.margins[p].family, params[p], xp);
        }
        total += rows.w[i] * (ll + c.vine.logpdf(u));
      }
      return std::isfinite(total) ? -total : kInf;
    };

    const double before = objective(z0);
    OptimizeOptions opt;
    opt.max_iter = 40;
    opt.ftol = 1e-10;
    opt.xtol = 1e-7;
    OptimizeResult res;
    bool ok = true;
    try {
      res = bfgs(objective, z0, opt);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok || !(res.value <= before)) {
      if (flagged) *flagged = true;
      continue;
    }
    unpack(res.x, params);
    for (std::size_t p = 0; p < d; ++p) {
      MarginModel& mm = c.margins[p];
      mm.params = params[p];
      double ll = 0.0, mass = 0.0;
      for (std::size_t i = 0; i < rows.x.rows(); ++i) {
        ll += rows.w[i] * margin_logpdf_unchecked(mm.family, mm.params, rows.x(i, p));
        mass += rows.w[i];
      }
      mm.loglik = ll;
      mm.n_obs = mass;
    }
  }
  return out;
}

MixtureModel cm_step3(const MixtureModel& m, const Matrix& x, const Matrix& r, bool* flagged) {
  check_data(m, x);
  MixtureModel out = m;
  for (std::size_t j = 0; j < out.components.size(); ++j) {
    Component& c = out.components[j];
    if (c.vine.free_params() == 0) continue;
    const Rows rows = weighted_rows(x, r, j);
    if (rows.w.size() < 2) continue;
    try {
      c.vine = refit_parameters(c.vine, component_uniforms(c, rows.x), rows.w, kMinResponsibility);
    } catch (const Error&) {
      if (flagged) *flagged = true;
    }
  }
  return out;
}

EcmResult ecm_run(const MixtureModel& m0, const Matrix& x, double tol, int max_iter) {
  validate(m0);
  check_data(m0, x);
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  EcmResult res;
  res.model = m0;
  res.trace.tol = tol;
  Matrix logd = weighted_log_densities(res.model, x);
  double prev = loglik_from(logd);
  res.trace.loglik.push_back(prev);
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix r = posterior_from(logd);
    std::vector<double> pi;
    try {
      pi = cm_step1(r);
    } catch (const EmptyComponentError& e) {
      throw EmptyComponentError(std::string(e.what()) + " at ECM iteration " + std::to_string(it),
                                e.component(), it);
    }
    MixtureModel next = res.model;
    for (std::size_t j = 0; j < pi.size(); ++j) next.components[j].weight = pi[j];
    bool flagged = false;
    next = cm_step2(next, x, r, &flagged);
    next = cm_step3(next, x, r, &flagged);
    if (flagged) res.trace.flagged.push_back(it);

    res.model = std::move(next);
    logd = weighted_log_densities(res.model, x);
    const double cur = loglik_from(logd);
    res.trace.loglik.push_back(cur);
    res.trace.iterations = it;
    const double rel = std::abs(cur - prev) / std::abs(prev);
    prev = cur;
    if (rel < tol) {
      res.trace.converged = true;
      break;
    }
  }
  res.posterior = posterior_from(logd);
  return res;
}

int free_param_count(const MixtureModel& m) {
  int count = m.k() - 1;
  for (const auto& c : m.components) {
    for (const auto& mm : c.margins) count += mm.n_params();
    count += c.vine.free_params();
  }
  return count;
}

double bic(double loglik, int free_params, std::size_t n) {
  return -2.0 * loglik + free_params * std::log(static_cast<double>(n));
}

double mixture_bic(const MixtureModel& m, const Matrix& x) {
  return bic(data_loglik(m, x), free_param_count(m), x.rows());
}

std::vector<int> hard_assignment(const Matrix& r) {
  std::vector<int> out(r.rows());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto row = r.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace vcmm
