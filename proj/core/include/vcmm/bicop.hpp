#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcmm {

enum class CopulaFamily { Independence, Gaussian, StudentT, Clayton, Gumbel, Frank, Joe, BB1, BB6, BB8 };

/// Counter-clockwise rotation of the copula density. For the exchangeable
/// families implemented here:
///   90:  c(u, 1 - v)        180: c(1 - u, 1 - v)        270: c(1 - u, v)
enum class Rotation : int { Deg0 = 0, Deg90 = 90, Deg180 = 180, Deg270 = 270 };

/// H1 = dC/du (law of the second argument given the first),
/// H2 = dC/dv (law of the first argument given the second).
enum class HDirection { H1, H2 };

std::string_view to_string(CopulaFamily family);
CopulaFamily copula_family_from_string(std::string_view name);
Rotation rotation_from_degrees(int degrees);

int copula_param_count(CopulaFamily family);

/// Families with one-sided dependence that admit 90/180/270 rotations.
bool is_rotatable(CopulaFamily family);
bool rotation_allowed(CopulaFamily family, Rotation rotation);

/// Gaussian, t, Clayton, Gumbel, Frank, Joe, BB1, BB6, BB8.
std::vector<CopulaFamily> default_copula_candidates();

/// Box constraints used when estimating parameters.
struct ParamBounds {
  std::vector<double> lower;
  std::vector<double> upper;
};
ParamBounds estimation_bounds(CopulaFamily family);

class PairCopula {
 public:
  /// Independence copula.
  PairCopula() = default;

  /// Throws DomainError if the parameters or the rotation are invalid.
  PairCopula(CopulaFamily family, std::vector<double> params, Rotation rotation = Rotation::Deg0);

  static bool params_valid(CopulaFamily family, std::span<const double> params);

  CopulaFamily family() const noexcept { return family_; }
  Rotation rotation() const noexcept { return rotation_; }
  const std::vector<double>& params() const noexcept { return params_; }
  int n_params() const noexcept { return static_cast<int>(params_.size()); }
  bool is_independence() const noexcept { return family_ == CopulaFamily::Independence; }

  // Arguments are clamped to [1e-10, 1 - 1e-10] before evaluation.
  double pdf(double u, double v) const;
  double log_pdf(double u, double v) const;
  double cdf(double u, double v) const;
  double hfunc(double u, double v, HDirection direction) const;
  double h1(double u, double v) const { return hfunc(u, v, HDirection::H1); }
  double h2(double u, double v) const { return hfunc(u, v, HDirection::H2); }

  /// Inverse of the h-function in its free argument. For H2, returns u with
  /// h2(u, cond) = p; for H1, returns v with h1(cond, v) = p.
  double hinv(double p, double cond, HDirection direction) const;

  /// Kendall's tau.
  double tau() const;

  /// Short human-readable form, e.g. "clayton(4.7)" or "gumbel@180(5)".
  std::string label() const;

  friend bool operator==(const PairCopula&, const PairCopula&) = default;

 private:
  double base_log_pdf(double u, double v) const;
  double base_h2(double u, double v) const;
  double base_cdf(double u, double v) const;
  double base_hinv2(double p, double v) const;

  CopulaFamily family_ = CopulaFamily::Independence;
  Rotation rotation_ = Rotation::Deg0;
  std::vector<double> params_;
};

/// Parameters with the given Kendall's tau. Two-parameter families solve
/// for the first parameter with the second held at `second`:
///   t: second = degrees of freedom (default 4), rho = sin(pi tau / 2);
///   BB1/BB6: second = delta (default 1.5); BB8: second = delta (default 0.8).
/// Rotations by 90/270 negate tau. Throws DomainError if tau is unattainable.
std::vector<double> tau_inverse(CopulaFamily family, Rotation rotation, double tau,
                                std::optional<double> second = std::nullopt);

/// Kendall's tau-b (tie corrected), O(n log n).
double empirical_tau(std::span<const double> u, std::span<const double> v);

/// -2 loglik + 2 n_params.
double bicop_aic(double loglik, int n_params);

struct BicopFit {
  PairCopula copula;
  double loglik = 0.0;
  double aic = 0.0;
  double empirical_tau = 0.0;
  /// |empirical tau| > 0.99: parameters sit at the estimation bounds.
  bool near_degenerate = false;
};

/// Weighted maximum likelihood for a fixed family and rotation. Rows with
/// zero weight are dropped and the rest normalized to mean one. When `start`
/// is given it seeds the local search. The reported log-likelihood and AIC use
/// the normalized weights.
BicopFit fit_bicop_family(std::span<const double> u, std::span<const double> v,
                          std::span<const double> w, CopulaFamily family, Rotation rotation,
                          const PairCopula* start = nullptr);

/// Fits every candidate family (one-sided families in the two rotations that
/// match the sign of the empirical tau) and returns the minimum-AIC model.
BicopFit fit_bicop(std::span<const double> u, std::span<const double> v,
                   std::span<const double> w, std::span<const CopulaFamily> candidates);

}  // namespace vcmm
