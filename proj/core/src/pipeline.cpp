#include "vcmm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "vcmm/errors.hpp"

namespace vcmm {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Partition renumber(const Partition& labels) {
  std::map<int, int> seen;
  Partition out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = seen.try_emplace(labels[i], static_cast<int>(seen.size()));
    out[i] = it->second;
  }
  return out;
}

std::vector<std::size_t> members(const Partition& labels, int j) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == j) out.push_back(i);
  return out;
}

void check_partition(const Partition& labels, int k, std::size_t n, int d, const char* what) {
  if (labels.size() != n)
    throw InitializationError(std::string(what) + " has " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(n) + " observations");
  const std::size_t need = static_cast<std::size_t>(std::max(10, d + 2));
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    if (l < 0 || l >= k)
      throw InitializationError(std::string(what) + " contains label " + std::to_string(l + 1) +
                                " outside 1.." + std::to_string(k));
    ++sizes[static_cast<std::size_t>(l)];
  }
  for (int j = 0; j < k; ++j)
    if (sizes[static_cast<std::size_t>(j)] < need)
      throw InitializationError(std::string(what) + ": cluster " + std::to_string(j + 1) +
                                " has " + std::to_string(sizes[static_cast<std::size_t>(j)]) +
                                " observations, at least " + std::to_string(need) +
                                " are needed");
}

// Minimum cost assignment on a square cost matrix (Hungarian method).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(n);
  for (int j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
  return match;
}

int effective_truncation(int requested, int d) { return requested <= 0 ? d - 1 : std::min(requested, d - 1); }

}  // namespace

Partition kmeans(const Matrix& x, int k, std::uint64_t seed, int max_iter) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (k < 1) throw DomainError("k-means needs k >= 1");
  if (n < static_cast<std::size_t>(k))
    throw DomainError("k-means needs at least k observations");
  if (k == 1) return Partition(n, 0);

  Matrix z = x;
  for (std::size_t p = 0; p < d; ++p) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, p);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, p) - mean) * (x(i, p) - mean);
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) z(i, p) = sd > 0.0 ? (x(i, p) - mean) / sd : 0.0;
  }
  auto dist2 = [&](std::size_t i, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t p = 0; p < d; ++p) s += (z(i, p) - c[p]) * (z(i, p) - c[p]);
    return s;
  };

  std::mt19937_64 rng(seed);
  auto uniform = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto row_vec = [&](std::size_t i) {
    auto r = z.row(i);
    return std::vector<double>(r.begin(), r.end());
  };

  std::vector<std::vector<double>> centers;
  centers.push_back(row_vec(static_cast<std::size_t>(uniform() * static_cast<double>(n))));
  std::vector<double> best(n);
  for (std::size_t i = 0; i < n; ++i) best[i] = dist2(i, centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(best.begin(), best.end(), 0.0);
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform() * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= best[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }
    centers.push_back(row_vec(pick));
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], dist2(i, centers.back()));
  }

  Partition labels(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      double m = dist2(i, centers[0]);
      for (int j = 1; j < k; ++j) {
        const double dj = dist2(i, centers[static_cast<std::size_t>(j)]);
        if (dj < m) {
          m = dj;
          arg = j;
        }
      }
      if (labels[i] != arg) {
        labels[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<std::size_t>(labels[i]);
      ++counts[j];
      for (std::size_t p = 0; p < d; ++p) sums[j][p] += z(i, p);
    }
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (counts[j] > 0)
        for (std::size_t p = 0; p < d; ++p)
          centers[j][p] = sums[j][p] / static_cast<double>(counts[j]);
  }
  return renumber(labels);
}

MixtureModel model_from_partition(const Matrix& x, const Partition& labels, int k, int truncation,
                                  const FitConfig& config) {
  const int d = static_cast<int>(x.cols());
  MixtureModel m;
  for (int j = 0; j < k; ++j) {
    const auto rows = members(labels, j);
    const Matrix xj = x.select_rows(rows);
    Component c;
    c.weight = static_cast<double>(rows.size()) / static_cast<double>(x.rows());
    for (int p = 0; p < d; ++p) {
      try {
        c.margins.push_back(select_margin(xj.column(static_cast<std::size_t>(p)), config.margins));
      } catch (const Error& e) {
        throw SelectionError("cluster " + std::to_string(j + 1) + ", variable " +
                             std::to_string(p + 1) + ": " + e.what());
      }
    }
    const Matrix u = component_uniforms(c, xj);
    try {
      c.vine = select_structure(u, {}, std::clamp(truncation, d > 1 ? 1 : 0, std::max(d - 1, 0)),
                                config.copulas);
    } catch (const DegenerateDataError& e) {
      throw DegenerateDataError("cluster " + std::to_string(j + 1) + ": " + e.what());
    }
    m.components.push_back(std::move(c));
  }
  return m;
}

ClusterReport vcmm_fit(const Matrix& x, int k, const InitSpec& init, const FitConfig& config) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (!(config.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (config.max_iter < 1) throw ConfigError("max_iter must be at least 1");
  if (config.margins.empty() || config.copulas.empty())
    throw ConfigError("candidate lists must not be empty");
  const int d = static_cast<int>(x.cols());
  const auto t0 = Clock::now();
  ClusterReport rep;
  rep.k = k;
  rep.seed = init.seed;

  // Step I
  auto t = Clock::now();
  rep.initial = init.partition ? *init.partition : kmeans(x, k, init.seed);
  check_partition(rep.initial, k, x.rows(), d, "initial partition");
  rep.seconds.initial = since(t);

  // Step II
  t = Clock::now();
  MixtureModel m0 = model_from_partition(x, rep.initial, k, effective_truncation(config.ecm_truncation, d), config);
  rep.loglik_initial = data_loglik(m0, x);
  rep.seconds.selection = since(t);

  // Step III
  t = Clock::now();
  EcmResult ecm = ecm_run(m0, x, config.tol, config.max_iter);
  rep.trace = ecm.trace;
  rep.loglik_markov = ecm.trace.loglik.back();
  rep.markov_model = ecm.model;
  rep.seconds.ecm = since(t);

  // Step IV
  rep.markov = hard_assignment(ecm.posterior);

  // Step V: margins and full vines refitted on the Step IV partition; the
  // mixture weights stay at their ECM values.
  t = Clock::now();
  try {
    check_partition(rep.markov, k, x.rows(), d, "step IV partition");
  } catch (const InitializationError& e) {
    throw EmptyComponentError(e.what(), -1, ecm.trace.iterations);
  }
  MixtureModel final_model =
      model_from_partition(x, rep.markov, k, effective_truncation(config.final_truncation, d), config);
  for (int j = 0; j < k; ++j)
    final_model.components[static_cast<std::size_t>(j)].weight =
        ecm.model.components[static_cast<std::size_t>(j)].weight;
  rep.seconds.final_selection = since(t);

  // Step VI
  rep.posterior = e_step(final_model, x);
  rep.labels = hard_assignment(rep.posterior);
  rep.loglik = data_loglik(final_model, x);
  rep.free_params = free_param_count(final_model);
  rep.bic = bic(rep.loglik, rep.free_params, x.rows());
  rep.model = std::move(final_model);
  rep.seconds.total = since(t0);
  return rep;
}

ClusterReport vcmm_fit_multistart(const Matrix& x, int k, std::uint64_t seed, int n_starts,
                                  const FitConfig& config) {
  if (n_starts < 1) throw ConfigError("number of starts must be at least 1");
  std::optional<ClusterReport> best;
  std::vector<Partition> tried;
  std::string last_error;
  for (int s = 0; s < n_starts; ++s) {
    InitSpec init;
    init.seed = seed + static_cast<std::uint64_t>(s);
    Partition start = kmeans(x, k, init.seed);
    if (std::find(tried.begin(), tried.end(), start) != tried.end()) continue;
    tried.push_back(start);
    init.partition = std::move(start);
    try {
      ClusterReport r = vcmm_fit(x, k, init, config);
      if (!best || r.bic < best->bic) best = std::move(r);
    } catch (const InitializationError& e) {
      last_error = e.what();
    } catch (const EmptyComponentError& e) {
      last_error = e.what();
    } catch (const SelectionError& e) {
      last_error = e.what();
    } catch (const DegenerateDataError& e) {
      last_error = e.what();
    }
  }
  if (!best) throw InitializationError("no start produced a model: " + last_error);
  return *best;
}

double misclassification_rate(const Partition& pred, const Partition& truth) {
  if (pred.size() != truth.size()) throw DomainError("partitions differ in length");
  if (pred.empty()) return 0.0;
  int k = 0;
  for (int l : pred) k = std::max(k, l + 1);
  for (int l : truth) k = std::max(k, l + 1);
  std::vector<std::vector<double>> agree(static_cast<std::size_t>(k),
                                         std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) throw DomainError("negative label");
    agree[static_cast<std::size_t>(pred[i])][static_cast<std::size_t>(truth[i])] += 1.0;
  }
  double matched = 0.0;
  if (k <= 8) {
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double s = 0.0;
      for (int j = 0; j < k; ++j)
        s += agree[static_cast<std::size_t>(j)][static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
      matched = std::max(matched, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<std::vector<double>> cost = agree;
    for (auto& row : cost)
      for (double& c : row) c = -c;
    const auto match = hungarian(cost);
    for (int j = 0; j < k; ++j)
      matched += agree[static_cast<std::size_t>(j)][static_cast<std::size_t>(match[static_cast<std::size_t>(j)])];
  }
  return 1.0 - matched / static_cast<double>(pred.size());
}

SweepResult sweep_k(const Matrix& x, const std::vector<int>& ks, const InitSpec& init, int n_starts,
                    const FitConfig& config) {
  if (ks.empty()) throw ConfigError("empty range of k");
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  SweepResult out;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k : sorted) {
    SweepRow row;
    row.k = k;
    try {
      if (init.partition) {
        row.report = vcmm_fit(x, k, init, config);
      } else {
        row.report = vcmm_fit_multistart(x, k, init.seed, n_starts, config);
      }
      if (row.report->bic < best_bic) {
        best_bic = row.report->bic;
        out.best_k = k;
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  if (out.best_k == 0) throw SelectionError("every k in the sweep failed");
  return out;
}

}  // namespace vcmm
