#include "vcmm/bicop.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>
#include <boost/math/tools/roots.hpp>

#include "archimedean.hpp"
#include "numerics.hpp"
#include "vcmm/errors.hpp"
#include "vcmm/optimize.hpp"

namespace vcmm {

using detail::clamp_unit;
using detail::kInf;
using detail::kUnitEps;

namespace {

struct Named {
  CopulaFamily family;
  std::string_view name;
};

constexpr Named kNames[] = {
    {CopulaFamily::Independence, "indep"}, {CopulaFamily::Gaussian, "gaussian"},
    {CopulaFamily::StudentT, "t"},         {CopulaFamily::Clayton, "clayton"},
    {CopulaFamily::Gumbel, "gumbel"},      {CopulaFamily::Frank, "frank"},
    {CopulaFamily::Joe, "joe"},            {CopulaFamily::BB1, "bb1"},
    {CopulaFamily::BB6, "bb6"},            {CopulaFamily::BB8, "bb8"},
};

detail::ArchimedeanSpec arch_spec(CopulaFamily f, const std::vector<double>& p) {
  return {f, p[0], p.size() > 1 ? p[1] : 1.0};
}

using boost::math::students_t_distribution;

double t_quantile(double nu, double p) {
  return boost::math::quantile(students_t_distribution<double>(nu), p);
}

double t_cdf(double nu, double x) {
  return boost::math::cdf(students_t_distribution<double>(nu), x);
}

double t_log_norm_const(double nu) {
  return std::lgamma(0.5 * (nu + 2.0)) + std::lgamma(0.5 * nu) - 2.0 * std::lgamma(0.5 * (nu + 1.0));
}

// Log density of the t copula given the marginal t quantiles.
double t_log_density(double x, double y, double rho, double nu, double log_const) {
  const double r2 = 1.0 - rho * rho;
  const double q = (x * x + y * y - 2.0 * rho * x * y) / (nu * r2);
  return log_const - 0.5 * std::log(r2) - 0.5 * (nu + 2.0) * std::log1p(q) +
         0.5 * (nu + 1.0) * (std::log1p(x * x / nu) + std::log1p(y * y / nu));
}

double gauss_log_density(double x, double y, double rho) {
  const double r2 = 1.0 - rho * rho;
  return -0.5 * std::log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
}

// Bivariate standard normal cdf through Owen's T function.
double bivariate_normal_cdf(double h, double k, double rho) {
  if (h == 0.0 && k == 0.0) return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
  if (h == 0.0) h = 1e-12;
  if (k == 0.0) k = 1e-12;
  const double s = std::sqrt(1.0 - rho * rho);
  const double ah = (k - rho * h) / (h * s);
  const double ak = (h - rho * k) / (k * s);
  const double beta = h * k > 0.0 ? 0.0 : 0.5;
  const double out = 0.5 * (detail::norm_cdf(h) + detail::norm_cdf(k)) -
                     boost::math::owens_t(h, ah) - boost::math::owens_t(k, ak) - beta;
  return std::clamp(out, 0.0, 1.0);
}

template <class F>
double solve_increasing(F&& f, double target, double lo, double hi) {
  const double flo = f(lo) - target;
  if (flo >= 0.0) return lo;
  const double fhi = f(hi) - target;
  if (fhi <= 0.0) return hi;
  std::uintmax_t iters = 200;
  auto g = [&](double x) { return f(x) - target; };
  auto r = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi,
                                              boost::math::tools::eps_tolerance<double>(45), iters);
  return 0.5 * (r.first + r.second);
}

double base_tau(CopulaFamily family, const std::vector<double>& p) {
  switch (family) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Gaussian:
    case CopulaFamily::StudentT:
      return 2.0 / std::numbers::pi * std::asin(p[0]);
    default:
      return detail::archimedean_tau(arch_spec(family, p));
  }
}

bool flips_sign(Rotation r) { return r == Rotation::Deg90 || r == Rotation::Deg270; }

}  // namespace

std::string_view to_string(CopulaFamily family) {
  for (const auto& n : kNames)
    if (n.family == family) return n.name;
  return "unknown";
}

CopulaFamily copula_family_from_string(std::string_view name) {
  for (const auto& n : kNames)
    if (n.name == name) return n.family;
  throw ConfigError("unknown copula family '" + std::string(name) + "'");
}

Rotation rotation_from_degrees(int degrees) {
  switch (degrees) {
    case 0:
      return Rotation::Deg0;
    case 90:
      return Rotation::Deg90;
    case 180:
      return Rotation::Deg180;
    case 270:
      return Rotation::Deg270;
    default:
      throw DomainError("rotation must be 0, 90, 180 or 270, got " + std::to_string(degrees));
  }
}

int copula_param_count(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Independence:
      return 0;
    case CopulaFamily::StudentT:
    case CopulaFamily::BB1:
    case CopulaFamily::BB6:
    case CopulaFamily::BB8:
      return 2;
    default:
      return 1;
  }
}

bool is_rotatable(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Clayton:
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe:
    case CopulaFamily::BB1:
    case CopulaFamily::BB6:
    case CopulaFamily::BB8:
      return true;
    default:
      return false;
  }
}

bool rotation_allowed(CopulaFamily family, Rotation rotation) {
  return rotation == Rotation::Deg0 || is_rotatable(family);
}

std::vector<CopulaFamily> default_copula_candidates() {
  return {CopulaFamily::Gaussian, CopulaFamily::StudentT, CopulaFamily::Clayton,
          CopulaFamily::Gumbel,   CopulaFamily::Frank,    CopulaFamily::Joe,
          CopulaFamily::BB1,      CopulaFamily::BB6,      CopulaFamily::BB8};
}

ParamBounds estimation_bounds(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Independence:
      return {};
    case CopulaFamily::Gaussian:
      return {{-0.995}, {0.995}};
    case CopulaFamily::StudentT:
      return {{-0.995, 2.05}, {0.995, 30.0}};
    case CopulaFamily::Clayton:
      return {{1e-4}, {28.0}};
    case CopulaFamily::Gumbel:
      return {{1.0}, {17.0}};
    case CopulaFamily::Frank:
      return {{-35.0}, {35.0}};
    case CopulaFamily::Joe:
      return {{1.0}, {30.0}};
    case CopulaFamily::BB1:
      return {{1e-4, 1.0}, {7.0, 7.0}};
    case CopulaFamily::BB6:
      return {{1.0, 1.0}, {6.0, 8.0}};
    case CopulaFamily::BB8:
      return {{1.0, 1e-4}, {8.0, 1.0}};
  }
  return {};
}

bool PairCopula::params_valid(CopulaFamily family, std::span<const double> p) {
  if (static_cast<int>(p.size()) != copula_param_count(family)) return false;
  for (double x : p)
    if (!std::isfinite(x)) return false;
  switch (family) {
    case CopulaFamily::Independence:
      return true;
    case CopulaFamily::Gaussian:
      return std::abs(p[0]) < 1.0;
    case CopulaFamily::StudentT:
      return std::abs(p[0]) < 1.0 && p[1] > 2.0;
    case CopulaFamily::Clayton:
      return p[0] > 0.0;
    case CopulaFamily::Gumbel:
    case CopulaFamily::Joe:
      return p[0] >= 1.0;
    case CopulaFamily::Frank:
      return p[0] != 0.0;
    case CopulaFamily::BB1:
      return p[0] > 0.0 && p[1] >= 1.0;
    case CopulaFamily::BB6:
      return p[0] >= 1.0 && p[1] >= 1.0;
    case CopulaFamily::BB8:
      return p[0] >= 1.0 && p[1] > 0.0 && p[1] <= 1.0;
  }
  return false;
}

PairCopula::PairCopula(CopulaFamily family, std::vector<double> params, Rotation rotation)
    : family_(family), rotation_(rotation), params_(std::move(params)) {
  if (!params_valid(family_, params_)) {
    std::ostringstream msg;
    msg << "invalid parameters for " << to_string(family_) << " copula:";
    for (double x : params_) msg << ' ' << x;
    throw DomainError(msg.str());
  }
  if (!rotation_allowed(family_, rotation_))
    throw DomainError(std::string(to_string(family_)) + " copula does not admit rotation " +
                      std::to_string(static_cast<int>(rotation_)));
}

double PairCopula::base_log_pdf(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Gaussian:
      return gauss_log_density(detail::norm_quantile(u), detail::norm_quantile(v), params_[0]);
    case CopulaFamily::StudentT: {
      const double nu = params_[1];
      return t_log_density(t_quantile(nu, u), t_quantile(nu, v), params_[0], nu,
                           t_log_norm_const(nu));
    }
    default:
      return detail::archimedean_log_pdf(arch_spec(family_, params_), u, v);
  }
}

double PairCopula::base_h2(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence:
      return u;
    case CopulaFamily::Gaussian: {
      const double rho = params_[0];
      const double x = detail::norm_quantile(u);
      const double y = detail::norm_quantile(v);
      return detail::norm_cdf((x - rho * y) / std::sqrt(1.0 - rho * rho));
    }
    case CopulaFamily::StudentT: {
      const double rho = params_[0];
      const double nu = params_[1];
      const double x = t_quantile(nu, u);
      const double y = t_quantile(nu, v);
      const double scale = std::sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0));
      return t_cdf(nu + 1.0, (x - rho * y) / scale);
    }
    default:
      return detail::archimedean_h2(arch_spec(family_, params_), u, v);
  }
}

double PairCopula::base_cdf(double u, double v) const {
  switch (family_) {
    case CopulaFamily::Independence:
      return u * v;
    case CopulaFamily::Gaussian:
      return bivariate_normal_cdf(detail::norm_quantile(u), detail::norm_quantile(v), params_[0]);
    case CopulaFamily::StudentT: {
      auto integrand = [&](double s) { return base_h2(u, clamp_unit(s)); };
      const double c = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          integrand, 0.0, v, 12, 1e-11);
      return std::clamp(c, 0.0, std::min(u, v));
    }
    default:
      return detail::archimedean_cdf(arch_spec(family_, params_), u, v);
  }
}

double PairCopula::base_hinv2(double p, double v) const {
  switch (family_) {
    case CopulaFamily::Independence:
      return p;
    case CopulaFamily::Gaussian: {
      const double rho = params_[0];
      const double z = detail::norm_quantile(p) * std::sqrt(1.0 - rho * rho) +
                       rho * detail::norm_quantile(v);
      return detail::norm_cdf(z);
    }
    case CopulaFamily::StudentT: {
      const double rho = params_[0];
      const double nu = params_[1];
      const double y = t_quantile(nu, v);
      const double scale = std::sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0));
      return t_cdf(nu, t_quantile(nu + 1.0, p) * scale + rho * y);
    }
    default: {
      const auto spec = arch_spec(family_, params_);
      return solve_increasing([&](double x) { return detail::archimedean_h2(spec, x, v); }, p,
                              kUnitEps, 1.0 - kUnitEps);
    }
  }
}

double PairCopula::log_pdf(double u, double v) const {
  if (family_ == CopulaFamily::Independence) return 0.0;
  u = clamp_unit(u);
  v = clamp_unit(v);
  switch (rotation_) {
    case Rotation::Deg0:
      return base_log_pdf(u, v);
    case Rotation::Deg90:
      return base_log_pdf(u, 1.0 - v);
    case Rotation::Deg180:
      return base_log_pdf(1.0 - u, 1.0 - v);
    case Rotation::Deg270:
      return base_log_pdf(1.0 - u, v);
  }
  return -kInf;
}

double PairCopula::pdf(double u, double v) const { return std::exp(log_pdf(u, v)); }

double PairCopula::cdf(double u, double v) const {
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return std::min(v, 1.0);
  if (v >= 1.0) return u;
  u = clamp_unit(u);
  v = clamp_unit(v);
  double c = 0.0;
  switch (rotation_) {
    case Rotation::Deg0:
      c = base_cdf(u, v);
      break;
    case Rotation::Deg90:
      c = u - base_cdf(u, 1.0 - v);
      break;
    case Rotation::Deg180:
      c = u + v - 1.0 + base_cdf(1.0 - u, 1.0 - v);
      break;
    case Rotation::Deg270:
      c = v - base_cdf(1.0 - u, v);
      break;
  }
  return std::clamp(c, std::max(0.0, u + v - 1.0), std::min(u, v));
}

double PairCopula::hfunc(double u, double v, HDirection direction) const {
  u = clamp_unit(u);
  v = clamp_unit(v);
  if (family_ == CopulaFamily::Independence) return direction == HDirection::H2 ? u : v;
  // dC/du of an exchangeable copula is dC/dv with the arguments swapped.
  auto h = [&](double a, double b) {
    return direction == HDirection::H2 ? base_h2(a, b) : base_h2(b, a);
  };
  const bool h2 = direction == HDirection::H2;
  double out = 0.0;
  switch (rotation_) {
    case Rotation::Deg0:
      out = h(u, v);
      break;
    case Rotation::Deg90:
      out = h2 ? h(u, 1.0 - v) : 1.0 - h(u, 1.0 - v);
      break;
    case Rotation::Deg180:
      out = 1.0 - h(1.0 - u, 1.0 - v);
      break;
    case Rotation::Deg270:
      out = h2 ? 1.0 - h(1.0 - u, v) : h(1.0 - u, v);
      break;
  }
  return std::clamp(out, 0.0, 1.0);
}

double PairCopula::hinv(double p, double cond, HDirection direction) const {
  p = clamp_unit(p);
  cond = clamp_unit(cond);
  if (family_ == CopulaFamily::Independence) return p;
  const bool h2 = direction == HDirection::H2;
  double out = 0.0;
  switch (rotation_) {
    case Rotation::Deg0:
      out = base_hinv2(p, cond);
      break;
    case Rotation::Deg90:
      out = h2 ? base_hinv2(p, 1.0 - cond) : 1.0 - base_hinv2(1.0 - p, cond);
      break;
    case Rotation::Deg180:
      out = 1.0 - base_hinv2(1.0 - p, 1.0 - cond);
      break;
    case Rotation::Deg270:
      out = h2 ? 1.0 - base_hinv2(1.0 - p, cond) : base_hinv2(p, 1.0 - cond);
      break;
  }
  return clamp_unit(out);
}

double PairCopula::tau() const {
  const double t = base_tau(family_, params_);
  return flips_sign(rotation_) ? -t : t;
}

std::string PairCopula::label() const {
  std::ostringstream out;
  out << to_string(family_);
  if (rotation_ != Rotation::Deg0) out << '@' << static_cast<int>(rotation_);
  out << '(';
  for (std::size_t i = 0; i < params_.size(); ++i) out << (i ? "," : "") << params_[i];
  out << ')';
  return out.str();
}

std::vector<double> tau_inverse(CopulaFamily family, Rotation rotation, double tau,
                                std::optional<double> second) {
  if (!rotation_allowed(family, rotation))
    throw DomainError(std::string(to_string(family)) + " copula does not admit this rotation");
  const double t = flips_sign(rotation) ? -tau : tau;
  auto unattainable = [&]() {
    return DomainError("tau " + std::to_string(tau) + " is not attainable by " +
                       std::string(to_string(family)));
  };
  if (!(std::abs(t) < 1.0)) throw unattainable();
  // Solve base_tau(first) = t on [lo, hi] with tau increasing in the first parameter.
  auto solve = [&](double lo, double hi, double other) {
    auto f = [&](double x) {
      std::vector<double> p{x};
      if (copula_param_count(family) == 2) p.push_back(other);
      return base_tau(family, p);
    };
    if (t < f(lo) - 1e-12 || t > f(hi) + 1e-12) throw unattainable();
    return solve_increasing(f, t, lo, hi);
  };
  switch (family) {
    case CopulaFamily::Independence:
      if (t != 0.0) throw unattainable();
      return {};
    case CopulaFamily::Gaussian:
      return {std::sin(std::numbers::pi * t / 2.0)};
    case CopulaFamily::StudentT:
      return {std::sin(std::numbers::pi * t / 2.0), second.value_or(4.0)};
    case CopulaFamily::Clayton:
      if (t <= 0.0) throw unattainable();
      return {2.0 * t / (1.0 - t)};
    case CopulaFamily::Gumbel:
      if (t < 0.0) throw unattainable();
      return {1.0 / (1.0 - t)};
    case CopulaFamily::Frank: {
      if (t == 0.0) throw unattainable();
      const double a = std::abs(t);
      auto f = [](double x) { return detail::archimedean_tau({CopulaFamily::Frank, x}); };
      if (a > f(200.0)) throw unattainable();
      const double theta = solve_increasing(f, a, 1e-8, 200.0);
      return {t < 0.0 ? -theta : theta};
    }
    case CopulaFamily::Joe:
      if (t < 0.0) throw unattainable();
      return {solve(1.0, 200.0, 0.0)};
    case CopulaFamily::BB1: {
      const double delta = second.value_or(1.5);
      const double theta = 2.0 / (delta * (1.0 - t)) - 2.0;
      if (theta <= 0.0) throw unattainable();
      return {theta, delta};
    }
    case CopulaFamily::BB6: {
      const double delta = second.value_or(1.5);
      return {solve(1.0, 100.0, delta), delta};
    }
    case CopulaFamily::BB8: {
      const double delta = second.value_or(0.8);
      return {solve(1.0, 100.0, delta), delta};
    }
  }
  throw unattainable();
}

double bicop_aic(double loglik, int n_params) { return -2.0 * loglik + 2.0 * n_params; }

// ---------------------------------------------------------------------------
// Estimation

namespace {

struct Sample {
  std::vector<double> u, v, w;
};

Sample prepare(std::span<const double> u, std::span<const double> v, std::span<const double> w) {
  if (u.size() != v.size() || (!w.empty() && w.size() != u.size()))
    throw DomainError("pair-copula data columns differ in length");
  Sample s;
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!(wi > 0.0)) continue;
    if (!std::isfinite(u[i]) || !std::isfinite(v[i]) || !std::isfinite(wi))
      throw DomainError("non-finite pseudo-observation or weight");
    s.u.push_back(clamp_unit(u[i]));
    s.v.push_back(clamp_unit(v[i]));
    s.w.push_back(wi);
    total += wi;
  }
  if (s.u.size() < 2) throw DegenerateDataError("fewer than two weighted pseudo-observations");
  const double scale = static_cast<double>(s.u.size()) / total;
  for (double& x : s.w) x *= scale;
  return s;
}

double loglik_of(const PairCopula& c, const Sample& s) {
  double ll = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) ll += s.w[i] * c.log_pdf(s.u[i], s.v[i]);
  return std::isfinite(ll) ? ll : -kInf;
}

double logit(double x) { return std::log(x / (1.0 - x)); }
double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Maps a box to R^k and back.
struct BoxMap {
  ParamBounds b;
  double to_param(double z, std::size_t i) const {
    return b.lower[i] + (b.upper[i] - b.lower[i]) * expit(z);
  }
  double to_free(double p, std::size_t i) const {
    const double width = b.upper[i] - b.lower[i];
    const double x = std::clamp((p - b.lower[i]) / width, 1e-6, 1.0 - 1e-6);
    return logit(x);
  }
};

struct Fitted {
  std::vector<double> params;
  double loglik;
};

// Flip the bounds of a family whose dependence sign is fixed by the data.
ParamBounds bounds_for(CopulaFamily family, double sign_hint) {
  ParamBounds b = estimation_bounds(family);
  if (family == CopulaFamily::Frank) {
    if (sign_hint >= 0.0)
      b = {{1e-4}, {35.0}};
    else
      b = {{-35.0}, {-1e-4}};
  }
  return b;
}

Fitted fit_one_param(const Sample& s, CopulaFamily family, Rotation rot, const ParamBounds& b,
                     const PairCopula* start) {
  auto nll = [&](double x) {
    if (!PairCopula::params_valid(family, std::span<const double>(&x, 1))) return kInf;
    return -loglik_of(PairCopula(family, {x}, rot), s);
  };
  if (start != nullptr) {
    const double x0 = std::clamp(start->params()[0], b.lower[0], b.upper[0]);
    const BoxMap map{b};
    auto f = [&](std::span<const double> z) { return nll(map.to_param(z[0], 0)); };
    OptimizeOptions opt;
    opt.max_iter = 200;
    opt.ftol = 1e-11;
    opt.xtol = 1e-3;
    auto r = nelder_mead(f, {map.to_free(x0, 0)}, {0.2}, opt);
    const double x = map.to_param(r.x[0], 0);
    return {{x}, -r.value};
  }
  const auto [x, value] = brent_minimize(nll, b.lower[0], b.upper[0]);
  return {{x}, -value};
}

// Gaussian and t use pre-computed marginal quantiles.
Fitted fit_gaussian(const Sample& s, const ParamBounds& b) {
  const std::size_t n = s.u.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = detail::norm_quantile(s.u[i]);
    y[i] = detail::norm_quantile(s.v[i]);
  }
  auto nll = [&](double rho) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) ll += s.w[i] * gauss_log_density(x[i], y[i], rho);
    return -ll;
  };
  const auto [rho, value] = brent_minimize(nll, b.lower[0], b.upper[0]);
  return {{rho}, -value};
}

Fitted fit_student(const Sample& s, const ParamBounds& b, const PairCopula* start) {
  const std::size_t n = s.u.size();
  std::vector<double> x(n), y(n);
  // Profile likelihood in nu: quantiles are computed once per nu, rho by Brent.
  auto profile = [&](double nu) -> std::pair<double, double> {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = t_quantile(nu, s.u[i]);
      y[i] = t_quantile(nu, s.v[i]);
    }
    const double lc = t_log_norm_const(nu);
    auto nll = [&](double rho) {
      double ll = 0.0;
      for (std::size_t i = 0; i < n; ++i) ll += s.w[i] * t_log_density(x[i], y[i], rho, nu, lc);
      return std::isfinite(ll) ? -ll : kInf;
    };
    const auto [rho, value] = brent_minimize(nll, b.lower[0], b.upper[0], 30);
    return {rho, -value};
  };
  const double lo = std::log(b.lower[1]);
  const double hi = std::log(b.upper[1]);
  double left = lo, right = hi;
  if (start != nullptr) {
    const double l0 = std::log(std::clamp(start->params()[1], b.lower[1], b.upper[1]));
    left = std::max(lo, l0 - 0.3);
    right = std::min(hi, l0 + 0.3);
  } else {
    const double grid[] = {2.5, 4.0, 7.0, 12.0, 20.0, 30.0};
    double best = -kInf;
    std::size_t at = 0;
    for (std::size_t g = 0; g < std::size(grid); ++g) {
      const double ll = profile(grid[g]).second;
      if (ll > best) {
        best = ll;
        at = g;
      }
    }
    left = at == 0 ? lo : std::log(grid[at - 1]);
    right = at + 1 == std::size(grid) ? hi : std::log(grid[at + 1]);
  }
  const auto [lnu, value] =
      brent_minimize([&](double l) { return -profile(std::exp(l)).second; }, left, right, 12, 20);
  const double nu = std::exp(lnu);
  const auto [rho, ll] = profile(nu);
  return {{rho, nu}, ll};
}

std::vector<std::vector<double>> two_param_starts(CopulaFamily family, double tau) {
  std::vector<std::vector<double>> out;
  const double t = std::clamp(std::abs(tau), 0.05, 0.9);
  switch (family) {
    case CopulaFamily::BB1:
      for (double d : {1.05, 1.3, 1.8, 2.8}) {
        const double theta = 2.0 / (d * (1.0 - t)) - 2.0;
        out.push_back({std::clamp(theta, 0.05, 6.5), d});
      }
      break;
    case CopulaFamily::BB6:
      for (double th : {1.05, 1.5, 2.5, 4.0})
        for (double d : {1.05, 1.5, 2.5, 4.0, 6.0}) out.push_back({th, d});
      break;
    default:
      for (double th : {1.5, 2.5, 4.0, 6.0, 7.5})
        for (double d : {0.3, 0.6, 0.8, 0.95}) out.push_back({th, d});
      break;
  }
  return out;
}

Fitted fit_two_param(const Sample& s, CopulaFamily family, Rotation rot, double tau,
                     const PairCopula* start) {
  const ParamBounds b = estimation_bounds(family);
  auto nll = [&](const std::vector<double>& p) {
    if (!PairCopula::params_valid(family, p)) return kInf;
    return -loglik_of(PairCopula(family, p, rot), s);
  };
  std::vector<double> x0;
  if (start != nullptr) {
    x0 = start->params();
  } else {
    double best = kInf;
    for (auto& p : two_param_starts(family, tau)) {
      const double value = nll(p);
      if (x0.empty() || value < best) {
        best = value;
        x0 = p;
      }
    }
  }
  const BoxMap map{b};
  auto f = [&](std::span<const double> z) {
    return nll({map.to_param(z[0], 0), map.to_param(z[1], 1)});
  };
  OptimizeOptions opt;
  opt.max_iter = start != nullptr ? 100 : 200;
  opt.ftol = 1e-10;
  opt.xtol = 1e-2;
  auto r = nelder_mead(f, {map.to_free(x0[0], 0), map.to_free(x0[1], 1)},
                       {start != nullptr ? 0.1 : 0.3, start != nullptr ? 0.1 : 0.3}, opt);
  return {{map.to_param(r.x[0], 0), map.to_param(r.x[1], 1)}, -r.value};
}

}  // namespace

BicopFit fit_bicop_family(std::span<const double> u, std::span<const double> v,
                          std::span<const double> w, CopulaFamily family, Rotation rotation,
                          const PairCopula* start) {
  if (!rotation_allowed(family, rotation))
    throw DomainError(std::string(to_string(family)) + " copula does not admit this rotation");
  const Sample s = prepare(u, v, w);
  if (start != nullptr && (start->family() != family || start->rotation() != rotation))
    start = nullptr;
  BicopFit out;
  out.empirical_tau = empirical_tau(s.u, s.v);
  out.near_degenerate = std::abs(out.empirical_tau) > 0.99;
  Fitted fitted{{}, 0.0};
  switch (family) {
    case CopulaFamily::Independence:
      break;
    case CopulaFamily::Gaussian:
      fitted = fit_gaussian(s, estimation_bounds(family));
      break;
    case CopulaFamily::StudentT:
      fitted = fit_student(s, estimation_bounds(family), start);
      break;
    case CopulaFamily::BB1:
    case CopulaFamily::BB6:
    case CopulaFamily::BB8:
      fitted = fit_two_param(s, family, rotation, out.empirical_tau, start);
      break;
    default: {
      const double hint = start != nullptr ? start->params()[0] : out.empirical_tau;
      fitted = fit_one_param(s, family, rotation, bounds_for(family, hint), start);
      break;
    }
  }
  if (!std::isfinite(fitted.loglik))
    throw ConvergenceError("no finite likelihood for " + std::string(to_string(family)) +
                               " copula",
                           fitted.params);
  out.copula = PairCopula(family, fitted.params, rotation);
  // Log-likelihood under the normalized weights, re-evaluated at the returned parameters.
  const double ll = loglik_of(out.copula, s);
  out.loglik = ll;
  out.aic = bicop_aic(ll, out.copula.n_params());
  return out;
}

BicopFit fit_bicop(std::span<const double> u, std::span<const double> v,
                   std::span<const double> w, std::span<const CopulaFamily> candidates) {
  if (candidates.empty()) throw ConfigError("no candidate copula families");
  std::vector<CopulaFamily> families(candidates.begin(), candidates.end());
  std::sort(families.begin(), families.end());
  families.erase(std::unique(families.begin(), families.end()), families.end());

  const Sample s = prepare(u, v, w);
  const double tau = empirical_tau(s.u, s.v);
  std::optional<BicopFit> best;
  std::string failures;
  for (CopulaFamily family : families) {
    std::vector<Rotation> rotations{Rotation::Deg0};
    if (is_rotatable(family)) {
      if (tau >= 0.0)
        rotations = {Rotation::Deg0, Rotation::Deg180};
      else
        rotations = {Rotation::Deg90, Rotation::Deg270};
    }
    for (Rotation rot : rotations) {
      try {
        BicopFit fit = fit_bicop_family(u, v, w, family, rot);
        if (!best || fit.aic < best->aic) best = std::move(fit);
      } catch (const Error& e) {
        failures += std::string(" ") + e.what() + ";";
      }
    }
  }
  if (!best) throw SelectionError("no pair-copula family could be fitted:" + failures);
  return *best;
}

}  // namespace vcmm
