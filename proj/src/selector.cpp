#include "stabsel/selector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stabsel {

namespace {
inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}
}  // namespace

void SelectorConfig::validate() const {
  if (target_nonzeros < 0) throw std::invalid_argument("SelectorConfig: target_nonzeros < 0");
  if (lambda_grid_size < 1) throw std::invalid_argument("SelectorConfig: lambda_grid_size < 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw std::invalid_argument("SelectorConfig: lambda_min_ratio must lie in (0,1)");
  if (max_iterations < 1) throw std::invalid_argument("SelectorConfig: max_iterations < 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("SelectorConfig: tolerance must be > 0");
}

SelectionResult fit_l1_path(const Matrix& X, std::span<const double> y, const SelectorConfig& cfg) {
  cfg.validate();
  const int n = X.rows();
  const int p = X.cols();
  if (n < 2) throw std::invalid_argument("fit_l1_path: need at least 2 rows");
  if (static_cast<int>(y.size()) != n) throw std::invalid_argument("fit_l1_path: rows(X) != length(y)");

  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= n;

  SelectionResult empty;
  empty.coefficients.assign(p, 0.0);
  empty.intercept = y_mean;

  // Standardize columns to mean 0 and unit (population) variance. Columns
  // with zero variance standardize to the zero column and drop out of the
  // descent entirely.
  Matrix Z(n, p);
  std::vector<double> col_mean(p), col_sd(p);
  for (int j = 0; j < p; ++j) {
    const auto x = X.col(j);
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += x[i];
    m /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) var += (x[i] - m) * (x[i] - m);
    var /= n;
    col_mean[j] = m;
    col_sd[j] = std::sqrt(var);
    auto z = Z.col(j);
    if (col_sd[j] > 0.0) {
      const double inv = 1.0 / col_sd[j];
      for (int i = 0; i < n; ++i) z[i] = (x[i] - m) * inv;
    } else {
      for (int i = 0; i < n; ++i) z[i] = 0.0;
    }
  }

  // Residual starts at the centered response; beta lives on the standardized
  // scale until the very end.
  std::vector<double> resid(n);
  for (int i = 0; i < n; ++i) resid[i] = y[i] - y_mean;

  double lambda_max = 0.0;
  for (int j = 0; j < p; ++j) {
    if (col_sd[j] == 0.0) continue;
    const auto z = Z.col(j);
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += z[i] * resid[i];
    lambda_max = std::max(lambda_max, std::abs(dot) / n);
  }
  if (lambda_max <= 0.0) return empty;  // constant y (or all columns constant)

  std::vector<double> beta(p, 0.0);
  const double log_step = (cfg.lambda_grid_size > 1)
                              ? std::log(cfg.lambda_min_ratio) / (cfg.lambda_grid_size - 1)
                              : 0.0;

  auto active_count = [&beta, p]() {
    int c = 0;
    for (int j = 0; j < p; ++j)
      if (beta[j] != 0.0) ++c;
    return c;
  };

  for (int g = 0; g < cfg.lambda_grid_size; ++g) {
    const double lambda = lambda_max * std::exp(log_step * g);
    for (int sweep = 0; sweep < cfg.max_iterations; ++sweep) {
      double max_change = 0.0;
      for (int j = 0; j < p; ++j) {
        if (col_sd[j] == 0.0) continue;
        const auto z = Z.col(j);
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += z[i] * resid[i];
        const double candidate = beta[j] + dot / n;
        const double updated = soft_threshold(candidate, lambda);
        const double delta = updated - beta[j];
        if (delta != 0.0) {
          for (int i = 0; i < n; ++i) resid[i] -= delta * z[i];
          beta[j] = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < cfg.tolerance) break;
    }
    if (active_count() >= cfg.target_nonzeros) break;
  }

  SelectionResult result;
  result.coefficients.assign(p, 0.0);
  double intercept = y_mean;
  for (int j = 0; j < p; ++j) {
    if (beta[j] == 0.0) continue;
    result.selected.push_back(j);
    result.coefficients[j] = beta[j] / col_sd[j];
    intercept -= result.coefficients[j] * col_mean[j];
  }
  result.intercept = intercept;
  return result;
}

double in_sample_loss(const SelectionResult& result, const Matrix& X, std::span<const double> y) {
  const int n = X.rows();
  if (static_cast<int>(y.size()) != n)
    throw std::invalid_argument("in_sample_loss: rows(X) != length(y)");
  if (static_cast<int>(result.coefficients.size()) != X.cols())
    throw std::invalid_argument("in_sample_loss: coefficient length != cols(X)");

  std::vector<double> pred(n, result.intercept);
  for (int j : result.selected) {
    const auto x = X.col(j);
    const double b = result.coefficients[j];
    for (int i = 0; i < n; ++i) pred[i] += b * x[i];
  }
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - pred[i];
    loss += r * r;
  }
  return loss / n;
}

}  // namespace stabsel
