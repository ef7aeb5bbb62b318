#pragma once

#include <functional>
#include <span>
#include <vector>

namespace vcmm {

/// Objective to minimize. Infeasible points should return +infinity.
using Objective = std::function<double(std::span<const double>)>;

struct OptimizeOptions {
  int max_iter = 500;
  /// Relative tolerance on the objective.
  double ftol = 1e-10;
  /// Absolute tolerance on the simplex / step size.
  double xtol = 1e-8;
};

struct OptimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex search. `step` gives the initial simplex edge per
/// coordinate.
OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0, std::vector<double> step,
                           const OptimizeOptions& options = {});

/// Quasi-Newton BFGS with central-difference gradients and a backtracking
/// line search. Falls back to Nelder-Mead when the line search stalls before
/// the gradient is small. Never returns a point worse than `x0`.
OptimizeResult bfgs(const Objective& f, std::vector<double> x0, const OptimizeOptions& options = {});

/// Bounded scalar minimization (Brent). Returns {argmin, min}.
std::pair<double, double> brent_minimize(const std::function<double(double)>& f, double lo,
                                         double hi, int bits = 40, int max_iter = 200);

}  // namespace vcmm
