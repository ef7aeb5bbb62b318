#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "vcmm/errors.hpp"
#include "vcmm/simgen.hpp"

using namespace vcmm;

TEST_CASE("built-in scenarios carry the published parameters") {
  const auto s1 = builtin_scenario("s1");
  REQUIRE(s1.k() == 2);
  REQUIRE(s1.dim() == 3);
  const auto& t1 = s1.clusters[0].vine.trees()[0];
  CHECK(std::abs(t1[0].copula.tau() - 0.8) < 0.05);
  CHECK(std::abs(t1[1].copula.tau() - 0.6) < 0.05);
  CHECK(s1.clusters[0].margins[0] == make_margin(MarginFamily::LogLogistic, {1.5, 1.25}));
  CHECK(s1.clusters[0].margins[1] == make_margin(MarginFamily::Exponential, {0.1}));
  CHECK(s1.clusters[0].margins[2] == make_margin(MarginFamily::LogNormal, {0.1, 1.3}));

  const auto s2 = builtin_scenario("s2");
  const auto& c1 = s2.clusters[0].vine.trees();
  CHECK(c1[0][0].copula.family() == CopulaFamily::Gumbel);
  CHECK(c1[0][1].copula.family() == CopulaFamily::Gumbel);
  CHECK(c1[0][1].copula.rotation() == Rotation::Deg180);
  CHECK(c1[1][0].copula.family() == CopulaFamily::Clayton);
  CHECK(s2.clusters[1].margins[1] == make_margin(MarginFamily::Normal, {18.0, 5.0}));

  const auto g = builtin_scenario("gauss");
  CHECK(g.clusters[1].margins[2] == make_margin(MarginFamily::Normal, {-2.0, 2.0}));
  CHECK(g.clusters[1].vine.trees()[0][0].copula.params()[0] == -0.7);

  CHECK_THROWS_AS(builtin_scenario("s3"), ConfigError);
}

TEST_CASE("scenario tau values agree with the published figures") {
  const std::vector<std::vector<double>> s1{{0.8, 0.6, 0.2}, {0.7, 0.5, 0.2}};
  const std::vector<std::vector<double>> s2{{0.6, 0.8, 0.3}, {0.7, 0.5, 0.2}};
  const std::vector<std::vector<double>> gs{{0.5, 0.6, 0.2}, {-0.5, 0.6, 0.2}};
  auto check = [](const ScenarioSpec& spec, const std::vector<std::vector<double>>& taus) {
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& tr = spec.clusters[j].vine.trees();
      CHECK(std::abs(tr[0][0].copula.tau() - taus[j][0]) < 0.05);
      CHECK(std::abs(tr[0][1].copula.tau() - taus[j][1]) < 0.05);
      CHECK(std::abs(tr[1][0].copula.tau() - taus[j][2]) < 0.05);
    }
  };
  check(builtin_scenario("s1"), s1);
  check(builtin_scenario("s2"), s2);
  check(builtin_scenario("gauss"), gs);
}

TEST_CASE("generated data follow the scenario") {
  const auto spec = builtin_scenario("s1");
  const Sample s = generate(spec, 10000, 3);
  REQUIRE(s.x.rows() == 20000);
  std::vector<std::size_t> c1, c2;
  for (std::size_t i = 0; i < 20000; ++i) (s.truth[i] == 0 ? c1 : c2).push_back(i);
  REQUIRE(c1.size() == 10000);
  const Matrix x1 = s.x.select_rows(c1), x2 = s.x.select_rows(c2);
  CHECK(std::abs(empirical_tau(x1.column(0), x1.column(1)) - 0.8) < 0.03);
  CHECK(std::abs(empirical_tau(x1.column(1), x1.column(2)) - 0.6) < 0.03);
  CHECK(std::abs(empirical_tau(x2.column(0), x2.column(2)) - 0.7) < 0.03);
  CHECK(std::abs(empirical_tau(x2.column(2), x2.column(1)) - 0.5) < 0.03);
  const auto x1v2 = x1.column(1);
  double mean = 0.0;
  for (double v : x1v2) mean += v / 10000.0;
  CHECK(std::abs(mean - 10.0) < 0.5);
  for (std::size_t i = 0; i < x1.rows(); ++i) {
    CHECK(x1(i, 0) > 0.0);
    CHECK(x1(i, 1) > 0.0);
    CHECK(x1(i, 2) > 0.0);
  }
}

TEST_CASE("generation is deterministic") {
  const auto spec = builtin_scenario("s2");
  const auto a = generate(spec, 30, 5), b = generate(spec, 30, 5), c = generate(spec, 30, 6);
  CHECK(a.x == b.x);
  CHECK(a.truth == b.truth);
  CHECK_FALSE(a.x == c.x);
  CHECK(generate(spec, 1, 1).x.rows() == 2);
}

TEST_CASE("one replication equals one pipeline run") {
  const auto spec = builtin_scenario("s2");
  const auto study = replicate_study(spec, 60, 1, 40, FitConfig{});
  REQUIRE(study.records.size() == 1);
  const auto& rec = study.records[0];
  REQUIRE(rec.ok);
  CHECK(rec.seed == 40);
  const Sample s = generate(spec, 60, 40);
  InitSpec init;
  init.seed = 40;
  const auto r = vcmm_fit(s.x, 2, init, FitConfig{});
  CHECK(rec.vcmm_miscl == misclassification_rate(r.labels, s.truth));
  CHECK(rec.kmeans_miscl == misclassification_rate(r.initial, s.truth));
  CHECK(rec.bic == r.bic);
  CHECK(rec.iterations == r.trace.iterations);
  CHECK(study.vcmm_miscl.count == 1);
  CHECK(study.vcmm_miscl.mean == rec.vcmm_miscl);
}

TEST_CASE("replication tables") {
  const auto spec = builtin_scenario("gauss");
  const auto study = replicate_study(spec, 40, 3, 1, FitConfig{});
  std::ostringstream wide, lng;
  write_replication_csv(wide, study);
  write_long_csv(lng, study);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  CHECK(lines(wide.str()) == 1 + 3);
  CHECK(lines(lng.str()) == 1 + static_cast<long>(3 - study.failures) * 2 * 1);
  CHECK(lng.str().rfind("replication,method,metric,value\n", 0) == 0);
  CHECK(study.records[1].seed == 2);
}

TEST_CASE("summaries") {
  const auto s = summarize({4.0, 1.0, 3.0, 2.0});
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(s.median == 2.5);
  CHECK(s.q25 == doctest::Approx(1.75));
}
