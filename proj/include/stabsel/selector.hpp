#ifndef STABSEL_SELECTOR_HPP
#define STABSEL_SELECTOR_HPP

#include <span>
#include <vector>

#include "stabsel/matrix.hpp"

namespace stabsel {

struct SelectorConfig {
  int target_nonzeros = 7;      // stop refining lambda once this many variables are active
  int lambda_grid_size = 50;
  double lambda_min_ratio = 0.01;
  int max_iterations = 10000;   // coordinate-descent sweeps per grid point
  double tolerance = 1e-7;

  void validate() const;
};

struct SelectionResult {
  std::vector<int> selected;         // 0-based, ascending; j selected <=> coefficients[j] != 0
  std::vector<double> coefficients;  // length p, original (unstandardized) scale
  double intercept = 0.0;
};

// L1-penalized least squares along a geometric lambda path, fitted by cyclic
// coordinate descent on internally standardized columns. Returns the result
// at the first (largest) lambda whose active set reaches target_nonzeros, or
// at the last grid point. Constant columns are never selected; a constant
// response yields the empty selection with intercept mean(y).
SelectionResult fit_l1_path(const Matrix& X, std::span<const double> y, const SelectorConfig& cfg);

// Mean squared residual of the fitted model over the supplied rows.
double in_sample_loss(const SelectionResult& result, const Matrix& X, std::span<const double> y);

}  // namespace stabsel

#endif
