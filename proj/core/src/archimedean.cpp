#include "archimedean.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "numerics.hpp"

namespace vcmm::detail {
namespace {

// A point of the unit interval carried as (t, 1 - t) so that both ends keep
// full relative precision.
struct UnitPoint {
  double t;
  double tbar;
};

struct ClaytonGen {
  double theta;

  double log_phi(UnitPoint p) const { return log_expm1(-theta * log_unit(p.t, p.tbar)); }
  double log_neg_dphi(UnitPoint p) const {
    return std::log(theta) - (theta + 1.0) * log_unit(p.t, p.tbar);
  }
  double log_d2phi(UnitPoint p) const {
    return std::log(theta) + std::log1p(theta) - (theta + 2.0) * log_unit(p.t, p.tbar);
  }
  UnitPoint inverse(double log_s) const {
    const double a = softplus(log_s) / theta;
    return {std::exp(-a), -std::expm1(-a)};
  }
};

struct GumbelGen {
  double theta;

  double log_phi(UnitPoint p) const { return theta * std::log(-log_unit(p.t, p.tbar)); }
  double log_neg_dphi(UnitPoint p) const {
    const double lt = -log_unit(p.t, p.tbar);
    return std::log(theta) + (theta - 1.0) * std::log(lt) + lt;
  }
  double log_d2phi(UnitPoint p) const {
    const double lt = -log_unit(p.t, p.tbar);
    return std::log(theta) + (theta - 2.0) * std::log(lt) + 2.0 * lt + std::log(theta - 1.0 + lt);
  }
  UnitPoint inverse(double log_s) const {
    const double r = std::exp(log_s / theta);
    return {std::exp(-r), -std::expm1(-r)};
  }
};

struct FrankGen {
  double theta;

  double log_phi(UnitPoint p) const {
    double phi;
    if (p.t <= 0.5) {
      phi = -std::log(std::expm1(-theta * p.t) / std::expm1(-theta));
    } else {
      phi = -std::log1p(std::exp(-theta) * std::expm1(theta * p.tbar) / std::expm1(-theta));
    }
    return std::log(phi);
  }
  double log_neg_dphi(UnitPoint p) const {
    return std::log(std::abs(theta)) - std::log(std::abs(std::expm1(theta * p.t)));
  }
  double log_d2phi(UnitPoint p) const {
    return 2.0 * std::log(std::abs(theta)) + theta * p.t -
           2.0 * std::log(std::abs(std::expm1(theta * p.t)));
  }
  UnitPoint inverse(double log_s) const {
    const double s = std::exp(log_s);
    const double t = -std::log1p(std::exp(-s) * std::expm1(-theta)) / theta;
    if (t > 0.5) {
      const double tbar = std::log1p(-std::expm1(-s) * std::expm1(theta)) / theta;
      return {1.0 - tbar, tbar};
    }
    return {t, 1.0 - t};
  }
};

struct JoeGen {
  double theta;

  struct Parts {
    double ltb;   // log(1 - t)
    double q;     // (1 - t)^theta
    double l1mq;  // log(1 - q)
  };
  Parts parts(UnitPoint p) const {
    const double ltb = log_unit(p.tbar, p.t);
    const double q = std::exp(theta * ltb);
    const double l1mq = q < 0.5 ? std::log1p(-q) : std::log(-std::expm1(theta * ltb));
    return {ltb, q, l1mq};
  }

  double log_phi(UnitPoint p) const { return std::log(-parts(p).l1mq); }
  double log_neg_dphi(UnitPoint p) const {
    const Parts k = parts(p);
    return std::log(theta) + (theta - 1.0) * k.ltb - k.l1mq;
  }
  double log_d2phi(UnitPoint p) const {
    const Parts k = parts(p);
    return std::log(theta) + (theta - 2.0) * k.ltb + std::log(theta - 1.0 + k.q) - 2.0 * k.l1mq;
  }
  UnitPoint inverse(double log_s) const {
    const double lm = log1m_exp_neg(std::exp(log_s)) / theta;
    return {-std::expm1(lm), std::exp(lm)};
  }
};

// phi = g^delta for an inner generator g.
template <class Inner>
struct PowerGen {
  Inner inner;
  double delta;

  double log_phi(UnitPoint p) const { return delta * inner.log_phi(p); }
  double log_neg_dphi(UnitPoint p) const {
    return std::log(delta) + (delta - 1.0) * inner.log_phi(p) + inner.log_neg_dphi(p);
  }
  double log_d2phi(UnitPoint p) const {
    const double lg = inner.log_phi(p);
    const double curvature = lg + inner.log_d2phi(p);
    const double slope =
        delta > 1.0 ? std::log(delta - 1.0) + 2.0 * inner.log_neg_dphi(p) : -kInf;
    return std::log(delta) + (delta - 2.0) * lg + log_add_exp(slope, curvature);
  }
  UnitPoint inverse(double log_s) const { return inner.inverse(log_s / delta); }
};

// phi = -log((1 - (1 - delta t)^theta) / (1 - (1 - delta)^theta)), 0 < delta < 1.
struct BB8Gen {
  double theta;
  double delta;

  struct Parts {
    double lw;    // log(1 - delta t)
    double q;     // (1 - delta t)^theta
    double l1mq;  // log(1 - q)
  };
  Parts parts(UnitPoint p) const {
    const double lw = std::log1p(-delta * p.t);
    const double q = std::exp(theta * lw);
    return {lw, q, std::log(-std::expm1(theta * lw))};
  }
  double log_a() const { return theta * std::log1p(-delta); }

  double log_phi(UnitPoint p) const {
    const Parts k = parts(p);
    double phi;
    if (p.tbar < 0.5) {
      const double grow = std::expm1(theta * std::log1p(delta * p.tbar / (1.0 - delta)));
      phi = std::log1p(std::exp(log_a() - k.l1mq) * grow);
    } else {
      phi = std::log(-std::expm1(log_a())) - k.l1mq;
    }
    return std::log(phi);
  }
  double log_neg_dphi(UnitPoint p) const {
    const Parts k = parts(p);
    return std::log(theta) + std::log(delta) + (theta - 1.0) * k.lw - k.l1mq;
  }
  double log_d2phi(UnitPoint p) const {
    const Parts k = parts(p);
    return std::log(theta) + 2.0 * std::log(delta) + (theta - 2.0) * k.lw +
           std::log(theta - 1.0 + k.q) - 2.0 * k.l1mq;
  }
  UnitPoint inverse(double log_s) const {
    const double s = std::exp(log_s);
    const double eta = -std::expm1(log_a());
    const double l = std::log1p(-eta * std::exp(-s)) / theta;
    const double t = -std::expm1(l) / delta;
    if (t > 0.5) {
      const double x = -eta * std::expm1(-s) / std::exp(log_a());
      const double tbar = (1.0 - delta) / delta * std::expm1(std::log1p(x) / theta);
      return {1.0 - tbar, tbar};
    }
    return {t, 1.0 - t};
  }
};

template <class Gen>
UnitPoint copula_point(const Gen& g, UnitPoint u, UnitPoint v) {
  return g.inverse(log_add_exp(g.log_phi(u), g.log_phi(v)));
}

template <class Gen>
double log_pdf_impl(const Gen& g, UnitPoint u, UnitPoint v) {
  const UnitPoint c = copula_point(g, u, v);
  const double out = g.log_d2phi(c) + g.log_neg_dphi(u) + g.log_neg_dphi(v) -
                     3.0 * g.log_neg_dphi(c);
  return std::isnan(out) ? -kInf : out;
}

template <class Gen>
double cdf_impl(const Gen& g, UnitPoint u, UnitPoint v) {
  return copula_point(g, u, v).t;
}

template <class Gen>
double h2_impl(const Gen& g, UnitPoint u, UnitPoint v) {
  const UnitPoint c = copula_point(g, u, v);
  const double h = std::exp(g.log_neg_dphi(v) - g.log_neg_dphi(c));
  return std::isnan(h) ? 0.0 : std::clamp(h, 0.0, 1.0);
}

template <class Gen>
double tau_impl(const Gen& g) {
  auto ratio = [&](double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const UnitPoint p{t, 1.0 - t};
    const double r = std::exp(g.log_phi(p) - g.log_neg_dphi(p));
    return std::isfinite(r) ? r : 0.0;
  };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(ratio, 0.0, 1.0, 15, 1e-12);
  return 1.0 + 4.0 * -integral;
}

template <class F>
auto dispatch(const ArchimedeanSpec& s, F&& f) {
  const double th = s.theta;
  const double de = s.delta;
  switch (s.family) {
    case CopulaFamily::Clayton:
      return f(ClaytonGen{th});
    case CopulaFamily::Gumbel:
      return f(GumbelGen{th});
    case CopulaFamily::Frank:
      return f(FrankGen{th});
    case CopulaFamily::Joe:
      return f(JoeGen{th});
    case CopulaFamily::BB1:
      return f(PowerGen<ClaytonGen>{ClaytonGen{th}, de});
    case CopulaFamily::BB6:
      return f(PowerGen<JoeGen>{JoeGen{th}, de});
    case CopulaFamily::BB8:
      if (de >= 1.0 - 1e-12) return f(JoeGen{th});
      return f(BB8Gen{th, de});
    default:
      throw std::logic_error("not an Archimedean family");
  }
}

UnitPoint point(double u) { return {u, 1.0 - u}; }

}  // namespace

double archimedean_log_pdf(const ArchimedeanSpec& spec, double u, double v) {
  return dispatch(spec, [&](const auto& g) { return log_pdf_impl(g, point(u), point(v)); });
}

double archimedean_cdf(const ArchimedeanSpec& spec, double u, double v) {
  return dispatch(spec, [&](const auto& g) { return cdf_impl(g, point(u), point(v)); });
}

double archimedean_h2(const ArchimedeanSpec& spec, double u, double v) {
  return dispatch(spec, [&](const auto& g) { return h2_impl(g, point(u), point(v)); });
}

double archimedean_tau(const ArchimedeanSpec& spec) {
  switch (spec.family) {
    case CopulaFamily::Clayton:
      return spec.theta / (spec.theta + 2.0);
    case CopulaFamily::Gumbel:
      return 1.0 - 1.0 / spec.theta;
    case CopulaFamily::BB1:
      return 1.0 - 2.0 / (spec.delta * (spec.theta + 2.0));
    case CopulaFamily::Frank: {
      const double a = std::abs(spec.theta);
      auto debye = [](double t) { return t < 1e-10 ? 1.0 : t / std::expm1(t); };
      const double d1 =
          boost::math::quadrature::gauss_kronrod<double, 61>::integrate(debye, 0.0, a, 15, 1e-13) /
          a;
      const double tau = 1.0 - 4.0 / a * (1.0 - d1);
      return spec.theta < 0.0 ? -tau : tau;
    }
    default:
      return dispatch(spec, [](const auto& g) { return tau_impl(g); });
  }
}

}  // namespace vcmm::detail
