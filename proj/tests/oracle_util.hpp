// Small brute-force oracles shared by the test suites. Everything here is
// deliberately independent of the library's computation paths: plain
// enumeration and direct arithmetic only.
#ifndef STABSEL_TESTS_ORACLE_UTIL_HPP
#define STABSEL_TESTS_ORACLE_UTIL_HPP

#include <functional>
#include <vector>

namespace oracle {

// Calls visit(subset) for every k-subset of {0,...,n-1}.
inline void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> subset(k);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      visit(subset);
      return;
    }
    for (int v = start; v < n; ++v) {
      subset[depth] = v;
      rec(v + 1, depth + 1);
    }
  };
  rec(0, 0);
}

inline double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

}  // namespace oracle

#endif
