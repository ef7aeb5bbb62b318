#include <benchmark/benchmark.h>

#include <random>

#include "vcmm/bicop.hpp"
#include "vcmm/mixture.hpp"
#include "vcmm/pipeline.hpp"
#include "vcmm/rvine.hpp"
#include "vcmm/simgen.hpp"

using namespace vcmm;

namespace {

std::vector<double> uniforms(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  std::vector<double> out(n);
  for (auto& x : out) x = unif(rng);
  return out;
}

PairCopula bench_copula(int which) {
  switch (which) {
    case 0: return PairCopula(CopulaFamily::Gaussian, {0.6});
    case 1: return PairCopula(CopulaFamily::StudentT, {0.6, 5.0});
    case 2: return PairCopula(CopulaFamily::Clayton, {2.0});
    case 3: return PairCopula(CopulaFamily::Gumbel, {2.0}, Rotation::Deg180);
    case 4: return PairCopula(CopulaFamily::BB1, {0.5, 1.5});
    default: return PairCopula(CopulaFamily::BB8, {3.0, 0.7});
  }
}

MixtureModel truth_model(const ScenarioSpec& spec) {
  MixtureModel m;
  for (const auto& c : spec.clusters)
    m.components.push_back(Component{1.0 / static_cast<double>(spec.k()), c.margins, c.vine});
  return m;
}

}  // namespace

static void BM_bicop_log_pdf(benchmark::State& state) {
  const auto pc = bench_copula(static_cast<int>(state.range(0)));
  const auto u = uniforms(1024, 1), v = uniforms(1024, 2);
  for (auto _ : state)
    for (std::size_t i = 0; i < u.size(); ++i) benchmark::DoNotOptimize(pc.log_pdf(u[i], v[i]));
  state.SetItemsProcessed(state.iterations() * 1024);
  state.SetLabel(pc.label());
}
BENCHMARK(BM_bicop_log_pdf)->DenseRange(0, 5);

static void BM_bicop_h2(benchmark::State& state) {
  const auto pc = bench_copula(static_cast<int>(state.range(0)));
  const auto u = uniforms(1024, 1), v = uniforms(1024, 2);
  for (auto _ : state)
    for (std::size_t i = 0; i < u.size(); ++i) benchmark::DoNotOptimize(pc.h2(u[i], v[i]));
  state.SetItemsProcessed(state.iterations() * 1024);
  state.SetLabel(pc.label());
}
BENCHMARK(BM_bicop_h2)->DenseRange(0, 5);

static void BM_bicop_hinv(benchmark::State& state) {
  const auto pc = bench_copula(static_cast<int>(state.range(0)));
  const auto u = uniforms(256, 1), v = uniforms(256, 2);
  for (auto _ : state)
    for (std::size_t i = 0; i < u.size(); ++i) benchmark::DoNotOptimize(pc.hinv(u[i], v[i], HDirection::H2));
  state.SetItemsProcessed(state.iterations() * 256);
  state.SetLabel(pc.label());
}
BENCHMARK(BM_bicop_hinv)->DenseRange(0, 5);

static void BM_vine_logpdf(benchmark::State& state) {
  const auto spec = builtin_scenario("s1");
  const auto& vine = spec.clusters[0].vine;
  const Matrix u = vine.sample(1000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_loglik(vine, u, std::vector<double>(u.rows(), 1.0)));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_vine_logpdf);

static void BM_select_structure(benchmark::State& state) {
  const auto spec = builtin_scenario("s2");
  const Matrix u = spec.clusters[0].vine.sample(500, 4);
  const auto candidates = default_copula_candidates();
  for (auto _ : state)
    benchmark::DoNotOptimize(select_structure(u, std::vector<double>(u.rows(), 1.0), 2, candidates));
}
BENCHMARK(BM_select_structure)->Unit(benchmark::kMillisecond);

static void BM_e_step(benchmark::State& state) {
  const auto spec = builtin_scenario("s1");
  const auto sample = generate(spec, 500, 5);
  const auto m = truth_model(spec);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(m, sample.x));
}
BENCHMARK(BM_e_step)->Unit(benchmark::kMillisecond);

static void BM_cm_steps(benchmark::State& state) {
  const auto spec = builtin_scenario("s1");
  const auto sample = generate(spec, 200, 6);
  const auto m = truth_model(spec);
  const Matrix r = e_step(m, sample.x);
  for (auto _ : state) {
    auto m2 = cm_step2(m, sample.x, r);
    benchmark::DoNotOptimize(cm_step3(m2, sample.x, r));
  }
}
BENCHMARK(BM_cm_steps)->Unit(benchmark::kMillisecond);

static void BM_kmeans(benchmark::State& state) {
  const auto sample = generate(builtin_scenario("s2"), 500, 7);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(sample.x, 2, 1));
}
BENCHMARK(BM_kmeans)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
