#ifndef STABSEL_MATRIX_HPP
#define STABSEL_MATRIX_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace stabsel {

// Dense column-major matrix. Column access has to be contiguous because the
// selector's coordinate descent walks columns in the inner loop.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[idx(i, j)]; }
  double operator()(int i, int j) const { return data_[idx(i, j)]; }

  std::span<double> col(int j) { return {data_.data() + idx(0, j), static_cast<std::size_t>(rows_)}; }
  std::span<const double> col(int j) const {
    return {data_.data() + idx(0, j), static_cast<std::size_t>(rows_)};
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * rows_ + static_cast<std::size_t>(i);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace stabsel

#endif
