#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcmm/bicop.hpp"
#include "vcmm/errors.hpp"

namespace vcmm {
namespace {

// Sum of t (t - 1) / 2 over runs of equal keys in a sorted range.
template <class Eq>
double tied_pairs(std::size_t n, Eq&& equal) {
  double ties = 0.0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += 0.5 * static_cast<double>(run) * static_cast<double>(run - 1);
      run = 1;
    }
  }
  return ties;
}

// Merge sort counting the inversions.
double sort_count(std::vector<double>& a, std::vector<double>& buf, std::size_t lo,
                  std::size_t hi) {
  if (hi - lo < 2) return 0.0;
  const std::size_t mid = lo + (hi - lo) / 2;
  double swaps = sort_count(a, buf, lo, mid) + sort_count(a, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (a[j] < a[i]) {
      swaps += static_cast<double>(mid - i);
      buf[k++] = a[j++];
    } else {
      buf[k++] = a[i++];
    }
  }
  while (i < mid) buf[k++] = a[i++];
  while (j < hi) buf[k++] = a[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            a.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double empirical_tau(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("tau: columns differ in length");
  const std::size_t n = u.size();
  if (n < 2) throw DegenerateDataError("tau needs at least two observations");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return u[a] < u[b] || (u[a] == u[b] && v[a] < v[b]);
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = v[order[i]];

  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double n1 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return u[order[a]] == u[order[b]];
  });
  const double n3 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return u[order[a]] == u[order[b]] && v[order[a]] == v[order[b]];
  });
  std::vector<double> buf(n);
  const double swaps = sort_count(ys, buf, 0, n);
  const double n2 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const double denom = std::sqrt((n0 - n1) * (n0 - n2));
  if (!(denom > 0.0)) throw DegenerateDataError("tau undefined for a constant column");
  return (n0 - n1 - n2 + n3 - 2.0 * swaps) / denom;
}

}  // namespace vcmm
