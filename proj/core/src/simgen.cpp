#include "vcmm/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "vcmm/errors.hpp"

namespace vcmm {
namespace {

VineEdge edge(int a, int b, std::vector<int> cond, CopulaFamily f, std::vector<double> params,
              Rotation rot = Rotation::Deg0) {
  return VineEdge{a, b, std::move(cond), PairCopula(f, std::move(params), rot)};
}

ClusterSpec cluster(std::vector<VineEdge> tree1, VineEdge tree2, std::vector<MarginModel> margins) {
  return ClusterSpec{VineCopula(3, {std::move(tree1), {std::move(tree2)}}, 2), std::move(margins)};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using F = CopulaFamily;
using M = MarginFamily;

ScenarioSpec scenario_s1() {
  ScenarioSpec s{"s1", {}};
  s.clusters.push_back(cluster({edge(0, 1, {}, F::BB1, {3.0, 2.0}), edge(1, 2, {}, F::Frank, {8.0})},
                               edge(0, 2, {1}, F::Gumbel, {1.3}),
                               {make_margin(M::LogLogistic, {1.5, 1.25}),
                                make_margin(M::Exponential, {0.1}),
                                make_margin(M::LogNormal, {0.1, 1.3})}));
  s.clusters.push_back(cluster({edge(0, 2, {}, F::Clayton, {4.7}), edge(2, 1, {}, F::BB1, {2.0, 1.0})},
                               edge(0, 1, {2}, F::BB1, {0.5, 1.0}),
                               {make_margin(M::LogNormal, {2.5, 0.5}),
                                make_margin(M::Logistic, {5.0, 3.0}),
                                make_margin(M::Exponential, {0.05})}));
  return s;
}

ScenarioSpec scenario_s2() {
  ScenarioSpec s{"s2", {}};
  s.clusters.push_back(
      cluster({edge(0, 1, {}, F::Gumbel, {2.5}), edge(1, 2, {}, F::Gumbel, {5.0}, Rotation::Deg180)},
              edge(0, 2, {1}, F::Clayton, {0.9}),
              {make_margin(M::Normal, {1.0, 2.0}), make_margin(M::Exponential, {0.2}),
               make_margin(M::LogNormal, {0.8, 0.8})}));
  s.clusters.push_back(
      cluster({edge(0, 1, {}, F::Frank, {11.4}), edge(1, 2, {}, F::Clayton, {2.0}, Rotation::Deg180)},
              edge(0, 2, {1}, F::Joe, {1.4}),
              {make_margin(M::LogNormal, {1.5, 0.4}), make_margin(M::Normal, {18.0, 5.0}),
               make_margin(M::Exponential, {0.2})}));
  return s;
}

ScenarioSpec scenario_gauss() {
  ScenarioSpec s{"gauss", {}};
  s.clusters.push_back(
      cluster({edge(0, 1, {}, F::Gaussian, {0.7}), edge(1, 2, {}, F::Gaussian, {0.8})},
              edge(0, 2, {1}, F::Gaussian, {0.3}),
              {make_margin(M::Normal, {0.0, 2.0}), make_margin(M::Normal, {1.0, 2.0}),
               make_margin(M::Normal, {1.0, 2.0})}));
  s.clusters.push_back(
      cluster({edge(0, 1, {}, F::Gaussian, {-0.7}), edge(1, 2, {}, F::Gaussian, {0.8})},
              edge(0, 2, {1}, F::Gaussian, {0.3}),
              {make_margin(M::Normal, {0.0, 2.0}), make_margin(M::Normal, {1.0, 2.0}),
               make_margin(M::Normal, {-2.0, 2.0})}));
  return s;
}

double quantile_at(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

int ScenarioSpec::dim() const { return clusters.empty() ? 0 : clusters.front().vine.dim(); }

ScenarioSpec builtin_scenario(const std::string& name) {
  if (name == "s1") return scenario_s1();
  if (name == "s2") return scenario_s2();
  if (name == "gauss") return scenario_gauss();
  throw ConfigError("unknown scenario '" + name + "' (expected s1, s2 or gauss)");
}

void validate(const ScenarioSpec& spec) {
  if (spec.clusters.empty()) throw DomainError("scenario has no clusters");
  const int d = spec.dim();
  for (const auto& c : spec.clusters)
    if (c.vine.dim() != d || static_cast<int>(c.margins.size()) != d)
      throw DomainError("scenario clusters disagree in dimension");
}

Sample generate(const ScenarioSpec& spec, std::size_t n_per_cluster, std::uint64_t seed) {
  validate(spec);
  const auto d = static_cast<std::size_t>(spec.dim());
  Sample out{Matrix(0, d), {}};
  for (std::size_t j = 0; j < spec.clusters.size(); ++j) {
    const auto& c = spec.clusters[j];
    const Matrix u = c.vine.sample(n_per_cluster, splitmix64(seed * 0x100 + j));
    std::vector<double> row(d);
    for (std::size_t i = 0; i < u.rows(); ++i) {
      for (std::size_t p = 0; p < d; ++p)
        row[p] = margin_quantile(c.margins[p], u(i, p));
      out.x.append_row(row);
      out.truth.push_back(static_cast<int>(j));
    }
  }
  return out;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size() - 1);
  }
  s.q25 = quantile_at(values, 0.25);
  s.median = quantile_at(values, 0.5);
  s.q75 = quantile_at(values, 0.75);
  return s;
}

StudyResult replicate_study(const ScenarioSpec& spec, std::size_t n_per_cluster, int reps,
                            std::uint64_t seed, const FitConfig& config) {
  if (reps < 1) throw ConfigError("replication count must be at least 1");
  StudyResult out;
  std::vector<double> km, vc, bics;
  for (int r = 0; r < reps; ++r) {
    ReplicationRecord rec;
    rec.replication = r + 1;
    rec.seed = seed + static_cast<std::uint64_t>(r);
    const Sample data = generate(spec, n_per_cluster, rec.seed);
    try {
      InitSpec init;
      init.seed = rec.seed;
      const ClusterReport rep = vcmm_fit(data.x, spec.k(), init, config);
      rec.ok = true;
      rec.kmeans_miscl = misclassification_rate(rep.initial, data.truth);
      rec.vcmm_miscl = misclassification_rate(rep.labels, data.truth);
      rec.bic = rep.bic;
      rec.iterations = rep.trace.iterations;
      rec.loglik_markov = rep.loglik_markov;
      rec.loglik = rep.loglik;
      rec.trace = rep.trace;
      km.push_back(rec.kmeans_miscl);
      vc.push_back(rec.vcmm_miscl);
      bics.push_back(rec.bic);
    } catch (const Error& e) {
      rec.error = e.what();
      ++out.failures;
    }
    out.records.push_back(std::move(rec));
  }
  out.kmeans_miscl = summarize(km);
  out.vcmm_miscl = summarize(vc);
  out.bic = summarize(bics);
  return out;
}

namespace {

std::string quoted_field(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

}  // namespace

void write_replication_csv(std::ostream& os, const StudyResult& study) {
  os << "replication,seed,status,kmeans_miscl,vcmm_miscl,bic,iterations,error\n";
  os.precision(10);
  for (const auto& r : study.records) {
    os << r.replication << ',' << r.seed << ',';
    if (r.ok)
      os << "ok," << r.kmeans_miscl << ',' << r.vcmm_miscl << ',' << r.bic << ',' << r.iterations << ',';
    else
      os << "failed,,,,," << quoted_field(r.error);
    os << '\n';
  }
}

void write_long_csv(std::ostream& os, const StudyResult& study) {
  os << "replication,method,metric,value\n";
  os.precision(10);
  for (const auto& r : study.records) {
    if (!r.ok) continue;
    os << r.replication << ",kmeans,misclassification," << r.kmeans_miscl << '\n';
    os << r.replication << ",vcmm,misclassification," << r.vcmm_miscl << '\n';
  }
}

}  // namespace vcmm
