#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "vcmm/errors.hpp"
#include "vcmm/pipeline.hpp"
#include "vcmm/simgen.hpp"

using namespace vcmm;

namespace {

double brute_force_miscl(const Partition& pred, const Partition& truth, int k) {
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (perm[static_cast<std::size_t>(pred[i])] == truth[i]) ++ok;
    best = std::max(best, ok);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - static_cast<double>(best) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("k-means separates distant blobs") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 0.5);
  Matrix x(200, 2);
  Partition truth(200);
  for (std::size_t i = 0; i < 200; ++i) {
    const double c = i < 100 ? -10.0 : 10.0;
    truth[i] = i < 100 ? 0 : 1;
    x(i, 0) = c + nd(rng);
    x(i, 1) = c + nd(rng);
  }
  const auto labels = kmeans(x, 2, 3);
  CHECK(misclassification_rate(labels, truth) == 0.0);
  CHECK(labels == kmeans(x, 2, 3));
  CHECK(labels[0] == 0);
  CHECK(kmeans(x, 1, 3) == Partition(200, 0));
  CHECK_THROWS_AS(kmeans(x.select_rows(std::vector<std::size_t>{0}), 2, 1), DomainError);
}

TEST_CASE("misclassification rate") {
  const Partition truth{0, 0, 1, 1, 1, 0, 1, 0, 0, 1};
  Partition swapped = truth;
  for (int& l : swapped) l = 1 - l;
  CHECK(misclassification_rate(swapped, truth) == 0.0);
  Partition one_off = truth;
  one_off[4] = 0;
  CHECK(misclassification_rate(one_off, truth) == doctest::Approx(0.1));
  CHECK_THROWS_AS(misclassification_rate(Partition{0, 1}, truth), DomainError);

  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coin(0, 1);
  Partition a(10000), b(10000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = coin(rng);
    b[i] = coin(rng);
  }
  CHECK(std::abs(misclassification_rate(a, b) - 0.5) < 0.02);

  // k = 9 goes through the assignment solver
  std::uniform_int_distribution<int> nine(0, 8);
  Partition p(400), t(400);
  for (std::size_t i = 0; i < p.size(); ++i) {
    t[i] = nine(rng);
    p[i] = coin(rng) ? (t[i] * 4) % 9 : nine(rng);
  }
  CHECK(misclassification_rate(p, t) == doctest::Approx(brute_force_miscl(p, t, 9)).epsilon(1e-15));
}

TEST_CASE("single component fit degenerates to a margin and vine fit") {
  const auto spec = builtin_scenario("s2");
  const Matrix u = spec.clusters[0].vine.sample(300, 4);
  Matrix x(300, 3);
  for (std::size_t i = 0; i < 300; ++i)
    for (std::size_t p = 0; p < 3; ++p) x(i, p) = margin_quantile(spec.clusters[0].margins[p], u(i, p));
  const auto r = vcmm_fit(x, 1, InitSpec{}, FitConfig{});
  CHECK(r.labels == Partition(300, 0));
  for (std::size_t i = 0; i < 300; ++i) CHECK(r.posterior(i, 0) == 1.0);
  CHECK(r.model.components[0].weight == 1.0);
}

TEST_CASE("pipeline report is self-consistent and deterministic") {
  const Sample s = generate(builtin_scenario("s1"), 120, 11);
  FitConfig cfg;
  InitSpec init;
  init.seed = 11;
  const auto r = vcmm_fit(s.x, 2, init, cfg);
  CHECK(r.initial == kmeans(s.x, 2, 11));
  CHECK(r.labels == hard_assignment(r.posterior));
  CHECK(r.labels == hard_assignment(e_step(r.model, s.x)));
  CHECK(r.markov == hard_assignment(e_step(r.markov_model, s.x)));
  CHECK(r.loglik == data_loglik(r.model, s.x));
  CHECK(r.loglik_markov == r.trace.loglik.back());
  CHECK(r.free_params == free_param_count(r.model));
  CHECK(r.bic == bic(r.loglik, r.free_params, s.x.rows()));
  // final mixture weights are the ECM weights
  for (std::size_t j = 0; j < 2; ++j) CHECK(r.model.components[j].weight == r.markov_model.components[j].weight);
  // the final vines are full, the ECM vines Markov trees
  for (const auto& c : r.markov_model.components) CHECK(c.vine.truncation() == 1);
  for (const auto& c : r.model.components) CHECK(c.vine.truncation() == 2);

  const auto again = vcmm_fit(s.x, 2, init, cfg);
  CHECK(again.labels == r.labels);
  CHECK(again.model == r.model);
  CHECK(again.trace == r.trace);
  CHECK(again.posterior == r.posterior);
}

TEST_CASE("explicit partitions and initialization errors") {
  const Sample s = generate(builtin_scenario("gauss"), 60, 2);
  InitSpec init;
  init.partition = s.truth;
  const auto r = vcmm_fit(s.x, 2, init, FitConfig{});
  CHECK(r.initial == s.truth);

  Partition tiny = s.truth;
  std::fill(tiny.begin(), tiny.end(), 0);
  for (int i = 0; i < 5; ++i) tiny[static_cast<std::size_t>(i)] = 1;
  init.partition = tiny;
  CHECK_THROWS_AS(vcmm_fit(s.x, 2, init, FitConfig{}), InitializationError);

  init.partition = Partition(10, 0);
  CHECK_THROWS_AS(vcmm_fit(s.x, 2, init, FitConfig{}), InitializationError);

  FitConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(vcmm_fit(s.x, 2, InitSpec{}, bad), ConfigError);
}

TEST_CASE("multi-start keeps the lowest BIC") {
  const Sample s = generate(builtin_scenario("s2"), 80, 21);
  const auto best = vcmm_fit_multistart(s.x, 2, 21, 3, FitConfig{});
  for (std::uint64_t seed = 21; seed < 24; ++seed) {
    InitSpec init;
    init.seed = seed;
    CHECK(best.bic <= vcmm_fit(s.x, 2, init, FitConfig{}).bic);
  }
}

TEST_CASE("sweep over k") {
  const Sample s = generate(builtin_scenario("s2"), 80, 8);
  InitSpec init;
  init.seed = 8;
  const auto sweep = sweep_k(s.x, {2}, init, 1, FitConfig{});
  REQUIRE(sweep.rows.size() == 1);
  REQUIRE(sweep.rows[0].report);
  CHECK(sweep.best_k == 2);
  const auto direct = vcmm_fit(s.x, 2, init, FitConfig{});
  CHECK(sweep.rows[0].report->bic == direct.bic);
  CHECK(sweep.rows[0].report->labels == direct.labels);

  const auto many = sweep_k(s.x, {3, 1, 2}, init, 1, FitConfig{});
  CHECK(many.rows.size() == 3);
  CHECK(many.rows[0].k == 1);
  CHECK(many.rows[2].k == 3);

  CHECK_THROWS_AS(sweep_k(s.x.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}), {3}, init, 1, FitConfig{}),
                  SelectionError);
}
