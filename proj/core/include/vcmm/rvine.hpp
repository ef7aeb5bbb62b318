#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vcmm/bicop.hpp"
#include "vcmm/matrix.hpp"

namespace vcmm {

/// One pair copula of a vine. The copula's first argument is F(a | conditioning),
/// its second F(b | conditioning). Variables are 0-based.
struct VineEdge {
  int a = 0;
  int b = 0;
  std::vector<int> conditioning;
  PairCopula copula;

  friend bool operator==(const VineEdge&, const VineEdge&) = default;
};

/// Lower-triangular R-vine matrix: entry [row][col], -1 above the diagonal.
/// Column i holds the variable m[i][i] on its diagonal; entry (k, i), k > i,
/// is the edge {m[i][i], m[k][i] ; m[k+1..d-1][i]}, so row d-1 is the first tree.
using RVineMatrix = std::vector<std::vector<int>>;

/// Regular vine copula: trees T_1..T_{d-1}, each edge carrying a pair copula.
/// Immutable apart from set_copula.
class VineCopula {
 public:
  VineCopula() = default;

  /// trees[m] lists the d - 1 - m edges of tree m + 1. Children in the
  /// previous tree are recovered from the conditioned and conditioning sets.
  /// Throws DomainError if the trees do not form a regular vine or if an edge
  /// above `truncation` carries a non-independence copula.
  VineCopula(int dim, std::vector<std::vector<VineEdge>> trees, int truncation);

  /// D-vine 0-1-...-(d-1) with independence everywhere.
  static VineCopula independence(int dim);

  int dim() const noexcept { return dim_; }
  int truncation() const noexcept { return truncation_; }
  const std::vector<std::vector<VineEdge>>& trees() const noexcept { return trees_; }
  const VineEdge& edge(std::size_t tree, std::size_t index) const { return trees_.at(tree).at(index); }

  void set_copula(std::size_t tree, std::size_t index, PairCopula copula);

  /// Log copula density at u (each entry clamped to [1e-10, 1 - 1e-10]).
  double logpdf(std::span<const double> u) const;
  /// Row-wise log density.
  std::vector<double> logpdf(const Matrix& u) const;

  /// Inverse-Rosenblatt sampling; deterministic given the seed.
  Matrix sample(std::size_t n, std::uint64_t seed) const;

  /// Number of copula parameters over non-independence edges.
  int free_params() const;

  RVineMatrix rvine_matrix() const;

  friend bool operator==(const VineCopula& x, const VineCopula& y) {
    return x.dim_ == y.dim_ && x.truncation_ == y.truncation_ && x.trees_ == y.trees_;
  }

  // Child edges in the previous tree and which of their h-values feed the
  // copula arguments. Filled by the constructor.
  struct Link {
    int left = -1;
    int right = -1;
    bool left_uses_hb = false;
    bool right_uses_hb = false;
  };
  const std::vector<std::vector<Link>>& links() const noexcept { return links_; }

 private:
  void link_and_validate();

  int dim_ = 0;
  int truncation_ = 0;
  std::vector<std::vector<VineEdge>> trees_;
  std::vector<std::vector<Link>> links_;
};

/// Copula arguments of every edge for every row of u:
/// out[tree][edge] = {F(a | D) column, F(b | D) column}.
struct EdgeArguments {
  std::vector<double> first;
  std::vector<double> second;
};
std::vector<std::vector<EdgeArguments>> edge_arguments(const VineCopula& vine, const Matrix& u);

/// Dissmann's sequential selection: each tree is the maximum spanning tree on
/// |empirical tau| among admissible pairs, each edge's family chosen by AIC.
/// Rows with w <= 0 are ignored. Trees above `truncation` get independence.
/// Throws DegenerateDataError naming the variable if a column is constant.
VineCopula select_structure(const Matrix& u, std::span<const double> w, int truncation,
                            std::span<const CopulaFamily> candidates);

/// Re-estimates the parameters of every non-independence edge, tree by tree,
/// keeping structure and families. Rows with w < min_weight are ignored.
/// Returns the previous model if the weighted log density got worse.
VineCopula refit_parameters(const VineCopula& vine, const Matrix& u, std::span<const double> w,
                            double min_weight = 1e-12);

/// Weighted sum of row log densities.
double weighted_loglik(const VineCopula& vine, const Matrix& u, std::span<const double> w);

}  // namespace vcmm
