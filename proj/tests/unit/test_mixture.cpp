#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vcmm/errors.hpp"
#include "vcmm/mixture.hpp"
#include "vcmm/pipeline.hpp"
#include "vcmm/simgen.hpp"

using namespace vcmm;

namespace {

Component normal_1d(double w, double mu, double sd) {
  return Component{w, {make_margin(MarginFamily::Normal, {mu, sd})}, VineCopula::independence(1)};
}

Component scenario_component(const ClusterSpec& c, double w) { return Component{w, c.margins, c.vine}; }

Matrix column_matrix(const std::vector<double>& x) {
  Matrix m(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) m(i, 0) = x[i];
  return m;
}

}  // namespace

TEST_CASE("component density reduces to the margins") {
  const auto c1 = normal_1d(1.0, 0.5, 2.0);
  CHECK(component_logpdf(c1, std::vector<double>{1.3}) == margin_logpdf(c1.margins[0], 1.3));

  const auto s1 = builtin_scenario("s1");
  const Component ind{1.0, s1.clusters[0].margins, VineCopula::independence(3)};
  const std::vector<double> x{1.0, 5.0, 2.0};
  double sum = 0.0;
  for (int p = 0; p < 3; ++p) sum += margin_logpdf(ind.margins[static_cast<std::size_t>(p)], x[static_cast<std::size_t>(p)]);
  CHECK(component_logpdf(ind, x) == doctest::Approx(sum).epsilon(1e-15));
}

TEST_CASE("component density composed term by term") {
  const auto c = scenario_component(builtin_scenario("s1").clusters[0], 1.0);
  const std::vector<double> x{1.0, 5.0, 2.0};
  double margins = 0.0;
  std::vector<double> u(3);
  for (std::size_t p = 0; p < 3; ++p) {
    margins += margin_logpdf(c.margins[p], x[p]);
    u[p] = margin_cdf(c.margins[p], x[p]);
  }
  CHECK(component_logpdf(c, x) == margins + c.vine.logpdf(u));
  CHECK_THROWS_AS(component_logpdf(c, std::vector<double>{1.0, -5.0, 2.0}), DomainError);
}

TEST_CASE("mixture density identities") {
  const auto spec = builtin_scenario("s2");
  const auto c = scenario_component(spec.clusters[0], 1.0);
  const std::vector<double> x{1.0, 4.0, 2.0};
  const MixtureModel one{{c}};
  CHECK(mixture_logpdf(one, x) == doctest::Approx(component_logpdf(c, x)).epsilon(1e-15));

  auto half = c;
  half.weight = 0.5;
  const MixtureModel twin{{half, half}};
  CHECK(mixture_logpdf(twin, x) == doctest::Approx(component_logpdf(c, x)).epsilon(1e-14));
}

TEST_CASE("mixture density does not underflow") {
  const MixtureModel m{{normal_1d(0.3, 0.0, 1.0), normal_1d(0.7, 0.5, 1.0)}};
  const double x = 40.0;
  const double a = std::log(0.3) + margin_logpdf(m.components[0].margins[0], x);
  const double b = std::log(0.7) + margin_logpdf(m.components[1].margins[0], x);
  REQUIRE(a < -700.0);
  const double got = mixture_logpdf(m, std::vector<double>{x});
  CHECK(std::isfinite(got));
  CHECK(got == doctest::Approx(oracle::direct_log_sum_exp({a, b})).epsilon(1e-14));
}

TEST_CASE("e-step posteriors") {
  const std::vector<double> xs{-1.0, 0.2, 0.9, 2.5};
  const Matrix x = column_matrix(xs);

  const MixtureModel one{{normal_1d(1.0, 0.0, 1.0)}};
  const Matrix r1 = e_step(one, x);
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(r1(i, 0) == 1.0);

  const MixtureModel same{{normal_1d(1.0 / 3, 0.0, 1.0), normal_1d(1.0 / 3, 0.0, 1.0), normal_1d(1.0 / 3, 0.0, 1.0)}};
  const Matrix r3 = e_step(same, x);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(r3(i, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const MixtureModel two{{normal_1d(0.4, 0.0, 1.0), normal_1d(0.6, 2.0, 0.5)}};
  const Matrix r = e_step(two, x);
  auto phi = [](double z, double mu, double s) {
    return std::exp(-0.5 * (z - mu) * (z - mu) / (s * s)) / (s * std::sqrt(2 * M_PI));
  };
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double a = 0.4 * phi(xs[i], 0.0, 1.0), b = 0.6 * phi(xs[i], 2.0, 0.5);
    CHECK(std::abs(r(i, 0) - a / (a + b)) < 1e-12);
    CHECK(std::abs(r(i, 0) + r(i, 1) - 1.0) < 1e-15);
  }
}

TEST_CASE("cm-step 1 takes column means") {
  Matrix hard(10, 2);
  for (std::size_t i = 0; i < 10; ++i) hard(i, i < 3 ? 0 : 1) = 1.0;
  CHECK(cm_step1(hard)[0] == doctest::Approx(0.3));

  Matrix uniform(6, 2, 0.5);
  CHECK(cm_step1(uniform) == std::vector<double>{0.5, 0.5});

  std::mt19937_64 rng(4);
  std::gamma_distribution<double> g(1.0, 1.0);
  Matrix r(100, 3);
  for (std::size_t i = 0; i < 100; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += (r(i, j) = g(rng));
    for (std::size_t j = 0; j < 3; ++j) r(i, j) /= s;
  }
  const auto pi = cm_step1(r);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 100; ++i) s += r(i, j);
    CHECK(std::abs(pi[j] - s / 100.0) < 1e-15);
  }

  Matrix empty(5, 2);
  for (std::size_t i = 0; i < 5; ++i) empty(i, 0) = 1.0;
  CHECK_THROWS_AS(cm_step1(empty), EmptyComponentError);
}

TEST_CASE("cm-step 2 with hard weights and independence is a margin MLE") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(3.0, 1.5);
  std::lognormal_distribution<double> ln(0.5, 0.4);
  const std::size_t n = 200;
  Matrix x(n, 2);
  Matrix r(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = ln(rng);
    r(i, i % 3 == 0 ? 1 : 0) = 1.0;
  }
  const Component c0{0.5, {make_margin(MarginFamily::Logistic, {2.0, 1.0}), make_margin(MarginFamily::Gamma, {2.0, 1.0})},
                     VineCopula::independence(2)};
  const MixtureModel m{{c0, c0}};
  bool flagged = false;
  const auto out = cm_step2(m, x, r, &flagged);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < n; ++i)
    if (r(i, 0) == 1.0) rows.push_back(i);
  const Matrix xs = x.select_rows(rows);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto mle = fit_margin(xs.column(p), c0.margins[p].family);
    for (std::size_t q = 0; q < 2; ++q)
      CHECK(out.components[0].margins[p].params[q] == doctest::Approx(mle.params[q]).epsilon(1e-4));
  }
}

TEST_CASE("cm sweep increases the likelihood and zero-weight rows are inert") {
  const auto spec = builtin_scenario("s1");
  const Sample s = generate(spec, 150, 3);
  std::vector<std::size_t> first;
  for (std::size_t i = 0; i < 150; ++i) first.push_back(i);
  const Matrix x = s.x.select_rows(first);
  FitConfig cfg;
  const MixtureModel m0 = model_from_partition(x, Partition(150, 0), 1, 1, cfg);
  const double before = data_loglik(m0, x);
  const Matrix r(150, 1, 1.0);
  bool flagged = false;
  auto m1 = cm_step2(m0, x, r, &flagged);
  m1 = cm_step3(m1, x, r, &flagged);
  CHECK(data_loglik(m1, x) >= before);

  // two-component version where component 2 owns extra rows with r = 0 for component 1
  Matrix r2(300, 2);
  for (std::size_t i = 0; i < 150; ++i) r2(i, 0) = 1.0;
  for (std::size_t i = 150; i < 300; ++i) r2(i, 1) = 1.0;
  MixtureModel m2{{m0.components[0], m0.components[0]}};
  m2.components[0].weight = m2.components[1].weight = 0.5;
  const auto a = cm_step3(cm_step2(m2, s.x, r2, &flagged), s.x, r2, &flagged);
  CHECK(a.components[0].margins == m1.components[0].margins);
  CHECK(a.components[0].vine == m1.components[0].vine);
}

TEST_CASE("ECM on an independence model converges to the margin MLE") {
  std::mt19937_64 rng(10);
  std::gamma_distribution<double> g(3.0, 2.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix x(300, 2);
  for (std::size_t i = 0; i < 300; ++i) {
    x(i, 0) = g(rng);
    x(i, 1) = nd(rng);
  }
  const MixtureModel m0{{Component{1.0,
                                   {make_margin(MarginFamily::Gamma, {1.0, 1.0}), make_margin(MarginFamily::Normal, {1.0, 2.0})},
                                   VineCopula::independence(2)}}};
  const auto res = ecm_run(m0, x, 1e-5, 200);
  CHECK(res.trace.converged);
  CHECK(res.trace.iterations <= 3);
  const auto mle = fit_margin(x.column(0), MarginFamily::Gamma);
  CHECK(res.model.components[0].margins[0].params[0] == doctest::Approx(mle.params[0]).epsilon(1e-4));
  CHECK(res.model.components[0].margins[1].params[1] ==
        doctest::Approx(fit_margin(x.column(1), MarginFamily::Normal).params[1]).epsilon(1e-5));

  const auto again = ecm_run(res.model, x, 1e-5, 200);
  CHECK(again.trace.iterations == 1);
}

TEST_CASE("ECM log-likelihood trace is monotone") {
  const Sample s = generate(builtin_scenario("s2"), 120, 5);
  FitConfig cfg;
  const auto m0 = model_from_partition(s.x, kmeans(s.x, 2, 5), 2, 1, cfg);
  const auto res = ecm_run(m0, s.x, 1e-5, 200);
  for (std::size_t i = 1; i < res.trace.loglik.size(); ++i)
    CHECK(res.trace.loglik[i] >= res.trace.loglik[i - 1] - 1e-8 * std::abs(res.trace.loglik[i - 1]));
  CHECK(res.trace.loglik.size() == static_cast<std::size_t>(res.trace.iterations) + 1);
}

TEST_CASE("free parameters and BIC") {
  const MixtureModel one{{normal_1d(1.0, 0.0, 1.0)}};
  CHECK(free_param_count(one) == 2);

  const auto spec = builtin_scenario("s1");
  const MixtureModel a{{scenario_component(spec.clusters[0], 1.0)}};
  const MixtureModel b{{scenario_component(spec.clusters[1], 1.0)}};
  const MixtureModel ab{{scenario_component(spec.clusters[0], 0.5), scenario_component(spec.clusters[1], 0.5)}};
  CHECK(free_param_count(ab) == free_param_count(a) + free_param_count(b) + 1);
  CHECK(free_param_count(a) == 5 + 4);

  CHECK(bic(-100.0, 5, 50) == doctest::Approx(200.0 + 5 * std::log(50.0)));
  const Sample s = generate(spec, 50, 1);
  CHECK(mixture_bic(ab, s.x) == doctest::Approx(-2 * data_loglik(ab, s.x) + 20 * std::log(100.0)));
}

TEST_CASE("posterior argmax ties go to the lowest index") {
  Matrix r(2, 3);
  r(0, 1) = r(0, 2) = 0.5;
  r(1, 0) = r(1, 2) = 0.5;
  CHECK(hard_assignment(r) == std::vector<int>{1, 0});
}
