#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vcmm/margins.hpp"
#include "vcmm/matrix.hpp"
#include "vcmm/pipeline.hpp"
#include "vcmm/rvine.hpp"

namespace vcmm {

struct ClusterSpec {
  VineCopula vine;
  std::vector<MarginModel> margins;
};

struct ScenarioSpec {
  std::string name;
  std::vector<ClusterSpec> clusters;

  int dim() const;
  int k() const { return static_cast<int>(clusters.size()); }
};

/// "s1", "s2" or "gauss". Throws ConfigError for other names.
ScenarioSpec builtin_scenario(const std::string& name);

/// Throws DomainError if clusters disagree in dimension or margins.
void validate(const ScenarioSpec& spec);

struct Sample {
  Matrix x;
  Partition truth;
};

/// n_per_cluster rows per cluster, clusters stacked in order.
Sample generate(const ScenarioSpec& spec, std::size_t n_per_cluster, std::uint64_t seed);

struct ReplicationRecord {
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double kmeans_miscl = 0.0;
  double vcmm_miscl = 0.0;
  double bic = 0.0;
  int iterations = 0;
  double loglik_markov = 0.0;
  double loglik = 0.0;
  FitTrace trace;
};

struct Summary {
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
};

struct StudyResult {
  std::vector<ReplicationRecord> records;  // sorted by seed
  int failures = 0;
  Summary kmeans_miscl;
  Summary vcmm_miscl;
  Summary bic;
};

/// Replication r uses seed + r for both data generation and k-means.
StudyResult replicate_study(const ScenarioSpec& spec, std::size_t n_per_cluster, int reps,
                            std::uint64_t seed, const FitConfig& config);

Summary summarize(std::vector<double> values);

/// Columns: replication,seed,status,kmeans_miscl,vcmm_miscl,bic,iterations
void write_replication_csv(std::ostream& os, const StudyResult& study);

/// Columns: replication,method,metric,value. Failed replications are skipped.
void write_long_csv(std::ostream& os, const StudyResult& study);

}  // namespace vcmm
