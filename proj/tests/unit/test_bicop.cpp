#include <cmath>
#include <random>

#include "copula_checks.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "vcmm/bicop.hpp"
#include "vcmm/errors.hpp"

using namespace vcmm;

namespace {

// Pairs (u, v) from pc by conditional inversion.
void simulate(const PairCopula& pc, std::size_t n, std::uint64_t seed, std::vector<double>& u,
              std::vector<double>& v) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  u.resize(n);
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = unif(rng);
    u[i] = pc.hinv(unif(rng), v[i], HDirection::H2);
  }
}

}  // namespace

TEST_CASE("kendall tau of the scenario copulas") {
  struct Row {
    CopulaFamily f;
    Rotation r;
    std::vector<double> p;
    double tau;
  };
  const std::vector<Row> rows{
      {CopulaFamily::BB1, Rotation::Deg0, {3, 2}, 0.8},
      {CopulaFamily::Clayton, Rotation::Deg0, {4.7}, 4.7 / 6.7},
      {CopulaFamily::Gumbel, Rotation::Deg0, {2.5}, 0.6},
      {CopulaFamily::Gumbel, Rotation::Deg180, {5.0}, 0.8},
      {CopulaFamily::Gaussian, Rotation::Deg0, {-0.7}, 2.0 / M_PI * std::asin(-0.7)},
  };
  for (const auto& r : rows) CHECK(PairCopula(r.f, r.p, r.r).tau() == doctest::Approx(r.tau).epsilon(1e-10));
  CHECK(PairCopula(CopulaFamily::Frank, {8.0}).tau() == doctest::Approx(0.602).epsilon(1e-3));

  // Joe: 1 + 4 * integral of phi / phi' with phi(t) = -log(1 - (1 - t)^theta)
  const double th = 1.4;
  const double joe = 1.0 + 4.0 * oracle::integrate_smooth(
                                     [&](double t) {
                                       const double s = std::pow(1.0 - t, th);
                                       return std::log(1.0 - s) * (1.0 - s) / (th * std::pow(1.0 - t, th - 1.0));
                                     },
                                     0.0, 1.0);
  CHECK(PairCopula(CopulaFamily::Joe, {th}).tau() == doctest::Approx(joe).epsilon(1e-8));
  CHECK(std::abs(joe - 0.2) < 0.05);
}

TEST_CASE("independence limits") {
  const PairCopula g0(CopulaFamily::Gaussian, {0.0});
  const PairCopula fr(CopulaFamily::Frank, {1e-6});
  for (double u : {0.1, 0.5, 0.77})
    for (double v : {0.2, 0.5, 0.95}) {
      CHECK(g0.pdf(u, v) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::abs(fr.pdf(u, v) - 1.0) < 1e-4);
      CHECK(g0.h2(u, v) == doctest::Approx(u).epsilon(1e-14));
      CHECK(g0.hinv(u, v, HDirection::H2) == doctest::Approx(u).epsilon(1e-12));
    }
}

TEST_CASE("clayton density equals the mixed partial of the cdf") {
  const PairCopula c(CopulaFamily::Clayton, {4.7});
  const double h = 1e-5, u = 0.5, v = 0.5;
  const double fd = (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h) + c.cdf(u - h, v - h)) /
                    (4 * h * h);
  CHECK(std::abs(c.pdf(u, v) - fd) < 1e-4);
}

TEST_CASE("gaussian h-function in closed form") {
  const PairCopula g(CopulaFamily::Gaussian, {0.8});
  const double u = 0.3, v = 0.7;
  const double expected =
      oracle::norm_cdf((oracle::norm_quantile(u) - 0.8 * oracle::norm_quantile(v)) / std::sqrt(1 - 0.64));
  CHECK(g.h2(u, v) == doctest::Approx(expected).epsilon(1e-12));
  const double h = 1e-5;
  CHECK(std::abs(g.h2(u, v) - (g.cdf(u, v + h) - g.cdf(u, v - h)) / (2 * h)) < 1e-5);
}

TEST_CASE("h-function reaches one at the upper boundary") {
  std::mt19937_64 rng(7);
  for (auto [f, r] : checks::all_combinations()) {
    const auto pc = checks::random_copula(f, r, rng);
    CAPTURE(pc.label());
    for (double v : {0.2, 0.5, 0.8}) {
      CHECK(std::abs(pc.h2(1.0 - 1e-12, v) - 1.0) < 1e-6);
      CHECK(std::abs(pc.h1(v, 1.0 - 1e-12) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("copula calculus for every family and rotation") {
  std::mt19937_64 rng(99);
  for (auto [f, r] : checks::all_combinations()) {
    const auto pc = checks::random_copula(f, r, rng);
    CAPTURE(pc.label());
    CHECK(std::abs(checks::density_integral(pc) - 1.0) < 1e-3);
    CHECK(checks::h_fd_error(pc, rng) < 1e-4);
    CHECK(checks::hinv_roundtrip_error(pc, rng) < 1e-7);
  }
}

TEST_CASE("hinv round trip property sweep") {
  const PairCopula c(CopulaFamily::Clayton, {2.0});
  CHECK(std::abs(c.h2(c.hinv(0.4, 0.6, HDirection::H2), 0.6) - 0.4) < 1e-8);

  std::mt19937_64 rng(1000);
  const auto combos = checks::all_combinations();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto [f, r] = combos[static_cast<std::size_t>(i) % combos.size()];
    const auto pc = checks::random_copula(f, r, rng);
    worst = std::max(worst, checks::hinv_roundtrip_error(pc, rng, 1));
  }
  CHECK(worst < 1e-7);
}

TEST_CASE("rotation coherence") {
  std::mt19937_64 rng(3);
  for (auto f : {CopulaFamily::Clayton, CopulaFamily::Gumbel, CopulaFamily::Joe, CopulaFamily::BB1,
                 CopulaFamily::BB6, CopulaFamily::BB8}) {
    const auto base = checks::random_copula(f, Rotation::Deg0, rng);
    const PairCopula r90(f, base.params(), Rotation::Deg90);
    const PairCopula r180(f, base.params(), Rotation::Deg180);
    const PairCopula r270(f, base.params(), Rotation::Deg270);
    CAPTURE(base.label());
    for (double u : {0.15, 0.4, 0.85})
      for (double v : {0.1, 0.55, 0.9}) {
        CHECK(r180.pdf(u, v) == doctest::Approx(base.pdf(1 - u, 1 - v)).epsilon(1e-12));
        CHECK(r90.pdf(u, v) == doctest::Approx(base.pdf(u, 1 - v)).epsilon(1e-12));
        CHECK(r270.pdf(u, v) == doctest::Approx(base.pdf(1 - u, v)).epsilon(1e-12));
      }
    CHECK(r180.tau() == doctest::Approx(base.tau()).epsilon(1e-12));
    CHECK(r90.tau() == doctest::Approx(-base.tau()).epsilon(1e-12));
    CHECK(r270.tau() == doctest::Approx(-base.tau()).epsilon(1e-12));
  }
}

TEST_CASE("tau inverse undoes tau for one-parameter families") {
  for (auto [f, p] : std::vector<std::pair<CopulaFamily, double>>{{CopulaFamily::Gaussian, 0.45},
                                                                   {CopulaFamily::Clayton, 2.3},
                                                                   {CopulaFamily::Gumbel, 1.7},
                                                                   {CopulaFamily::Frank, -6.0},
                                                                   {CopulaFamily::Joe, 2.2}}) {
    const PairCopula pc(f, {p});
    CAPTURE(pc.label());
    CHECK(tau_inverse(f, Rotation::Deg0, pc.tau())[0] == doctest::Approx(p).epsilon(1e-8));
  }
  CHECK_THROWS_AS(tau_inverse(CopulaFamily::Clayton, Rotation::Deg0, -0.3), DomainError);
}

TEST_CASE("AIC formula") { CHECK(bicop_aic(50.0, 2) == doctest::Approx(-96.0)); }

TEST_CASE("empirical tau") {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{10, 20, 30, 40, 50}, c{5, 4, 3, 2, 1};
  CHECK(empirical_tau(a, b) == doctest::Approx(1.0));
  CHECK(empirical_tau(a, c) == doctest::Approx(-1.0));

  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> small(0, 6);
  std::vector<double> x(300), y(300);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = small(rng);
    y[i] = small(rng) + 0.5 * x[i];
  }
  CHECK(empirical_tau(x, y) == doctest::Approx(oracle::kendall_tau(x, y)).epsilon(1e-12));

  std::vector<double> u, v;
  simulate(PairCopula(CopulaFamily::Clayton, {2.0}), 10000, 17, u, v);
  CHECK(std::abs(empirical_tau(u, v) - 0.5) < 0.02);

  const std::vector<double> constant(5, 1.0);
  CHECK_THROWS_AS(empirical_tau(a, constant), DegenerateDataError);
}

TEST_CASE("unit weights equal the unweighted fit and scaling does not matter") {
  std::vector<double> u, v;
  simulate(PairCopula(CopulaFamily::Gumbel, {2.0}), 400, 4, u, v);
  const std::vector<double> ones(u.size(), 1.0), fives(u.size(), 5.0);
  const auto cands = default_copula_candidates();
  const auto a = fit_bicop(u, v, ones, cands);
  const auto b = fit_bicop(u, v, fives, cands);
  CHECK(a.copula == b.copula);
  CHECK(a.aic == b.aic);
}

TEST_CASE("zero-weight rows do not change a fit") {
  std::vector<double> u, v;
  simulate(PairCopula(CopulaFamily::Frank, {5.0}), 300, 21, u, v);
  std::vector<double> w(u.size(), 1.0);
  auto u2 = u, v2 = v, w2 = w;
  for (int i = 0; i < 50; ++i) {
    u2.push_back(0.01 + 0.019 * i);
    v2.push_back(0.99 - 0.019 * i);
    w2.push_back(0.0);
  }
  const auto a = fit_bicop_family(u, v, w, CopulaFamily::Frank, Rotation::Deg0);
  const auto b = fit_bicop_family(u2, v2, w2, CopulaFamily::Frank, Rotation::Deg0);
  CHECK(a.copula == b.copula);
}
