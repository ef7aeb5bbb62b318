#include "vcmm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <boost/math/tools/minima.hpp>

#include "numerics.hpp"

namespace vcmm {

namespace {

double eval(const Objective& f, std::span<const double> x, int& count) {
  ++count;
  const double v = f(x);
  return std::isnan(v) ? detail::kInf : v;
}

}  // namespace

OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0, std::vector<double> step,
                           const OptimizeOptions& options) {
  const std::size_t n = x0.size();
  OptimizeResult result;
  if (n == 0) {
    result.value = eval(f, x0, result.evaluations);
    result.x = std::move(x0);
    result.converged = true;
    return result;
  }

  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(f, simplex[i], result.evaluations);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  for (result.iterations = 0; result.iterations < options.max_iter; ++result.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
    const double fspread = values[worst] - values[best];
    if (std::isfinite(values[worst]) &&
        fspread <= options.ftol * std::abs(values[best]) + 1e-14 && spread <= options.xtol) {
      result.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }

    for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double f_reflect = eval(f, trial, result.evaluations);

    if (f_reflect < values[best]) {
      for (std::size_t j = 0; j < n; ++j)
        trial2[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
      const double f_expand = eval(f, trial2, result.evaluations);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        values[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        values[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[second]) {
      simplex[worst] = trial;
      values[worst] = f_reflect;
      continue;
    }

    const bool outside = f_reflect < values[worst];
    for (std::size_t j = 0; j < n; ++j) {
      trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                          : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
    }
    const double f_contract = eval(f, trial2, result.evaluations);
    if (f_contract < std::min(f_reflect, values[worst])) {
      simplex[worst] = trial2;
      values[worst] = f_contract;
      continue;
    }

    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j)
        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
      values[i] = eval(f, simplex[i], result.evaluations);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  result.x = simplex[best];
  result.value = values[best];
  return result;
}

namespace {

std::vector<double> numeric_gradient(const Objective& f, const std::vector<double>& x, double fx,
                                     int& count) {
  std::vector<double> g(x.size());
  std::vector<double> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = eval(f, probe, count);
    probe[i] = x[i] - h;
    const double fm = eval(f, probe, count);
    probe[i] = x[i];
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g[i] = (fp - fm) / (2.0 * h);
    } else if (std::isfinite(fp)) {
      g[i] = (fp - fx) / h;
    } else if (std::isfinite(fm)) {
      g[i] = (fx - fm) / h;
    } else {
      g[i] = 0.0;
    }
  }
  return g;
}

}  // namespace

OptimizeResult bfgs(const Objective& f, std::vector<double> x0, const OptimizeOptions& options) {
  const std::size_t n = x0.size();
  OptimizeResult result;
  std::vector<double> x = std::move(x0);
  double fx = eval(f, x, result.evaluations);
  if (n == 0 || !std::isfinite(fx)) {
    result.x = std::move(x);
    result.value = fx;
    result.converged = n == 0;
    return result;
  }

  std::vector<double> hinv(n * n, 0.0);
  auto reset = [&] {
    std::fill(hinv.begin(), hinv.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
  };
  reset();

  std::vector<double> g = numeric_gradient(f, x, fx, result.evaluations);
  std::vector<double> dir(n), xn(n), s(n), y(n), hy(n);
  bool stalled = false;

  for (result.iterations = 0; result.iterations < options.max_iter; ++result.iterations) {
    double gnorm = 0.0;
    for (double gi : g) gnorm = std::max(gnorm, std::abs(gi));
    if (gnorm <= 1e-7 * (1.0 + std::abs(fx))) {
      result.converged = true;
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) dir[i] -= hinv[i * n + j] * g[j];
    }
    double slope = std::inner_product(dir.begin(), dir.end(), g.begin(), 0.0);
    if (!(slope < 0.0)) {
      reset();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }

    // Keep the first trial step bounded in the unconstrained coordinates.
    double dmax = 0.0;
    for (double di : dir) dmax = std::max(dmax, std::abs(di));
    double alpha = dmax > 2.0 ? 2.0 / dmax : 1.0;

    double fn = detail::kInf;
    bool accepted = false;
    for (int k = 0; k < 50; ++k) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + alpha * dir[i];
      fn = eval(f, xn, result.evaluations);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      stalled = true;
      break;
    }

    const double fold = fx;
    std::vector<double> gn = numeric_gradient(f, xn, fn, result.evaluations);
    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
      step_norm = std::max(step_norm, std::abs(s[i]));
    }
    x = xn;
    fx = fn;
    g = std::move(gn);

    if (fold - fx <= options.ftol * (std::abs(fx) + 1e-12) && step_norm <= options.xtol * 100.0) {
      result.converged = true;
      break;
    }
    if (fold - fx <= 1e-15 * (std::abs(fx) + 1.0)) {
      result.converged = true;
      break;
    }

    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12) {
      for (std::size_t i = 0; i < n; ++i) {
        hy[i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) hy[i] += hinv[i * n + j] * y[j];
      }
      const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          hinv[i * n + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] -
                             rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
      }
    }
  }

  if (stalled || !result.converged) {
    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = 0.05 * std::max(1.0, std::abs(x[i]));
    OptimizeOptions nm_options = options;
    nm_options.max_iter = std::max(options.max_iter, 200 * static_cast<int>(n));
    OptimizeResult nm = nelder_mead(f, x, step, nm_options);
    result.evaluations += nm.evaluations;
    if (nm.value <= fx) {
      x = std::move(nm.x);
      fx = nm.value;
    }
    result.converged = nm.converged;
  }

  result.x = std::move(x);
  result.value = fx;
  return result;
}

std::pair<double, double> brent_minimize(const std::function<double(double)>& f, double lo,
                                         double hi, int bits, int max_iter) {
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto safe = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : 1e300;
  };
  return boost::math::tools::brent_find_minima(safe, lo, hi, bits, iters);
}

}  // namespace vcmm
