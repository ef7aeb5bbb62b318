#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vcmm/bicop.hpp"
#include "vcmm/margins.hpp"
#include "vcmm/matrix.hpp"
#include "vcmm/mixture.hpp"

namespace vcmm {

/// Labels are 0-based internally; files use 1-based labels.
using Partition = std::vector<int>;

/// Lloyd's algorithm with k-means++ seeding on standardized columns. Labels
/// are renumbered in order of first appearance. Deterministic given the seed.
Partition kmeans(const Matrix& x, int k, std::uint64_t seed, int max_iter = 100);

struct FitConfig {
  std::vector<MarginFamily> margins = default_margin_candidates();
  std::vector<CopulaFamily> copulas = default_copula_candidates();
  double tol = 1e-5;
  int max_iter = 200;
  /// Vine truncation during ECM (Markov tree by default) and for the final
  /// refit; 0 means d - 1.
  int ecm_truncation = 1;
  int final_truncation = 0;
};

/// Starting partition: k-means with the given seed, or an explicit partition.
struct InitSpec {
  std::uint64_t seed = 1;
  std::optional<Partition> partition;
};

struct StepTimings {
  double initial = 0.0;
  double selection = 0.0;
  double ecm = 0.0;
  double final_selection = 0.0;
  double total = 0.0;
};

struct ClusterReport {
  int k = 0;
  std::uint64_t seed = 0;
  Partition initial;  // Step I
  Partition markov;   // Step IV
  Partition labels;   // Step VI
  Matrix posterior;   // final posterior
  MixtureModel markov_model;  // after Step III
  MixtureModel model;         // final
  FitTrace trace;
  double loglik_initial = 0.0;  // Step II model
  double loglik_markov = 0.0;   // Step III model
  double loglik = 0.0;          // final model
  double bic = 0.0;
  int free_params = 0;
  StepTimings seconds;
};

/// Builds one component per cluster: margins chosen by BIC, vine truncated at
/// `truncation` (clamped to d - 1), weights n_j / n.
MixtureModel model_from_partition(const Matrix& x, const Partition& labels, int k, int truncation,
                                  const FitConfig& config);

/// Steps I-VI. Throws InitializationError if an initial cluster has fewer
/// than max(10, d + 2) observations.
ClusterReport vcmm_fit(const Matrix& x, int k, const InitSpec& init, const FitConfig& config);

/// Runs k-means starts seed, seed + 1, ... and keeps the lowest BIC. Starts
/// that produce an already tried partition are skipped. Throws the last error
/// if every start fails.
ClusterReport vcmm_fit_multistart(const Matrix& x, int k, std::uint64_t seed, int n_starts,
                                  const FitConfig& config);

/// Minimum disagreement over matchings of predicted clusters to classes.
double misclassification_rate(const Partition& pred, const Partition& truth);

struct SweepRow {
  int k = 0;
  std::optional<ClusterReport> report;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by k
  int best_k = 0;
};

/// One fit per k; failures are recorded. Throws SelectionError if all fail.
SweepResult sweep_k(const Matrix& x, const std::vector<int>& ks, const InitSpec& init, int n_starts,
                    const FitConfig& config);

}  // namespace vcmm
