#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace oracle {

using Parents = std::vector<std::optional<std::size_t>>;

inline Parents heap_parents(std::size_t n, int d) {
  Parents p(n);
  for (std::size_t i = 1; i < n; ++i)
    p[i] = (i - 1) / static_cast<std::size_t>(d);
  return p;
}

inline bool rooted(const Parents &parent, const std::vector<std::size_t> &set) {
  std::vector<char> in(parent.size(), 0);
  for (std::size_t i : set)
    in[i] = 1;
  bool has_root = false;
  for (std::size_t i : set) {
    if (!parent[i])
      has_root = true;
    else if (!in[*parent[i]])
      return false;
  }
  return has_root;
}

/// Every rooted k-subset, by scanning all 2^N subsets (N <= 20).
inline std::vector<std::vector<std::size_t>> rooted_subsets(const Parents &parent, std::size_t k) {
  const std::size_t n = parent.size();
  std::vector<std::vector<std::size_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k)
      continue;
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u)
        set.push_back(i);
    if (rooted(parent, set))
      out.push_back(set);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double energy(const std::vector<double> &x, const std::vector<std::size_t> &set) {
  double e = 0.0;
  for (std::size_t i : set)
    e += x[i] * x[i];
  return e;
}

/// Number of ordered rooted trees with k nodes and at most d ordered child
/// slots per node: t(k) = sum over (k_1..k_d) with sum k-1 of prod t(k_i).
inline std::vector<long double> tree_counts(int d, std::size_t kmax) {
  std::vector<long double> t(kmax + 1, 0.0L);
  t[0] = 1.0L;
  for (std::size_t k = 1; k <= kmax; ++k) {
    // d-fold convolution of t[0..k-1] evaluated at k-1.
    std::vector<long double> conv(k, 0.0L);
    conv[0] = 1.0L;
    for (int slot = 0; slot < d; ++slot) {
      std::vector<long double> next(k, 0.0L);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; a + b < k; ++b)
          next[a + b] += conv[a] * t[b];
      conv = std::move(next);
    }
    t[k] = conv[k - 1];
  }
  return t;
}

inline double entropy(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

/// Plain bisection for an increasing-or-decreasing f with a sign change.
inline double bisection(const std::function<double(double)> &f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi)
      break;
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// lambda^max - 1 from the large-deviation equation, written out directly.
inline double tu(int d, double rho) {
  const double ex = d * rho * entropy(1.0 / d);
  auto f = [&](double l) {
    return 0.5 * ((1 + rho) * std::log(l) + 1 + rho - rho * std::log(rho) - l) + ex;
  };
  double hi = 2 + 2 * rho;
  while (f(hi) > 0)
    hi *= 2;
  return bisection(f, 1 + rho, hi) - 1;
}

inline double tl(int d, double rho) {
  const double ex = d * rho * entropy(1.0 / d);
  auto f = [&](double l) {
    return entropy(rho) + 0.5 * ((1 - rho) * std::log(l) + 1 - rho + rho * std::log(rho) - l) +
           ex;
  };
  return 1 - bisection(f, 1e-300, 1 - rho);
}

} // namespace oracle
