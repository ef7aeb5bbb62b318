#pragma once

#include <span>
#include <vector>

#include "vcmm/margins.hpp"
#include "vcmm/matrix.hpp"
#include "vcmm/rvine.hpp"

namespace vcmm {

struct Component {
  double weight = 1.0;
  std::vector<MarginModel> margins;
  VineCopula vine;

  int dim() const noexcept { return static_cast<int>(margins.size()); }
  friend bool operator==(const Component&, const Component&) = default;
};

struct MixtureModel {
  std::vector<Component> components;

  int k() const noexcept { return static_cast<int>(components.size()); }
  int dim() const noexcept { return components.empty() ? 0 : components.front().dim(); }
  friend bool operator==(const MixtureModel&, const MixtureModel&) = default;
};

/// Throws DomainError if the components disagree in dimension, a vine does
/// not match its margins, or the weights are not a probability vector.
void validate(const MixtureModel& model);

struct FitTrace {
  /// Data log-likelihood before the first iteration and after each one.
  std::vector<double> loglik;
  int iterations = 0;
  double tol = 1e-5;
  bool converged = false;
  /// Iterations in which a CM step kept the previous parameters.
  std::vector<int> flagged;

  friend bool operator==(const FitTrace&, const FitTrace&) = default;
};

/// Sum of margin log densities plus the vine log density at u = F(x).
/// Throws DomainError naming the variable if x is outside a margin's support.
double component_logpdf(const Component& c, std::span<const double> x);

/// Row-wise component log density; -inf outside the support.
std::vector<double> component_logpdf(const Component& c, const Matrix& x);

/// Probability-integral transform of every row through the margins.
Matrix component_uniforms(const Component& c, const Matrix& x);

double mixture_logpdf(const MixtureModel& m, std::span<const double> x);
double data_loglik(const MixtureModel& m, const Matrix& x);

/// Responsibilities r[i][j] = pi_j g_j(x_i) / sum_j' pi_j' g_j'(x_i), in log space.
/// Throws DomainError if a row has zero density under every component.
Matrix e_step(const MixtureModel& m, const Matrix& x);

/// Column means of r. Throws EmptyComponentError if a column sum is below n * 1e-6.
std::vector<double> cm_step1(const Matrix& r);

/// Updates the margin parameters of every component with its vine held fixed,
/// maximizing sum_i r_ij log g_j(x_i). A component whose objective would get
/// worse keeps its parameters and sets *flagged.
MixtureModel cm_step2(const MixtureModel& m, const Matrix& x, const Matrix& r,
                      bool* flagged = nullptr);

/// Updates the pair-copula parameters of every component with margins fixed.
MixtureModel cm_step3(const MixtureModel& m, const Matrix& x, const Matrix& r,
                      bool* flagged = nullptr);

struct EcmResult {
  MixtureModel model;
  FitTrace trace;
  /// Posterior under the returned model.
  Matrix posterior;
};

/// Alternates E-step and CM-steps 1-3 until the relative change of the data
/// log-likelihood falls below tol or max_iter iterations have run.
EcmResult ecm_run(const MixtureModel& m0, const Matrix& x, double tol = 1e-5, int max_iter = 200);

/// Sum over components of margin and copula parameters, plus k - 1 weights.
int free_param_count(const MixtureModel& m);

/// -2 loglik + p log n.
double bic(double loglik, int free_params, std::size_t n);
double mixture_bic(const MixtureModel& m, const Matrix& x);

/// Row-wise argmax of r, ties to the lowest index (0-based labels).
std::vector<int> hard_assignment(const Matrix& r);

}  // namespace vcmm
