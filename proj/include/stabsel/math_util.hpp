#ifndef STABSEL_MATH_UTIL_HPP
#define STABSEL_MATH_UTIL_HPP

#include <cmath>
#include <cstdint>

namespace stabsel {

// Gaussian brackets on values that are rationals computed in floating point
// (c*n_sub, gamma*B, B*(pi+ - pi_thr), ...). The nudge keeps e.g.
// floor(0.95*1000) from landing on 949.
inline long long floor_gaussian(double x) {
  return static_cast<long long>(std::floor(x + 1e-9));
}

inline long long ceil_gaussian(double x) {
  return static_cast<long long>(std::ceil(x - 1e-9));
}

}  // namespace stabsel

#endif
