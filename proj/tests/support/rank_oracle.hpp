#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace wt::testing {

// 1 - 6 sum d^2 / (n (n^2 - 1)) for tie-free inputs, evaluated as a single
// integer fraction so the only rounding is the final division.
inline double spearman_no_ties(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<long long> r(n);
    for (std::size_t i = 0; i < n; ++i) r[order[i]] = static_cast<long long>(i + 1);
    return r;
  };
  const auto rx = ranks(xs), ry = ranks(ys);
  long long d2 = 0;
  for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const long long nn = static_cast<long long>(n);
  const long long denom = nn * (nn * nn - 1);
  return static_cast<double>(denom - 6 * d2) / static_cast<double>(denom);
}

}  // namespace wt::testing
