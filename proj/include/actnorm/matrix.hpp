#pragma once

#include <cstddef>
#include <random>
#include <vector>

namespace actnorm {

/// Dense row-major matrix of doubles. Deliberately minimal: the project only
/// needs products, transposes and elementwise passes.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  bool all_finite() const;
  double max_abs() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

namespace kernels {

// Each product comes in a parallel flavor (OpenMP over output rows) and a
// serial reference. Both call the same per-row worker, so results are bitwise
// identical at any thread count; the tests rely on that.

/// C = A * B
Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_nn_serial(const Matrix& a, const Matrix& b);

/// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_nt_serial(const Matrix& a, const Matrix& b);

/// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_tn_serial(const Matrix& a, const Matrix& b);

}  // namespace kernels

/// Square Haar-distributed orthogonal matrix (Gaussian draw, Householder QR,
/// diagonal sign correction).
Matrix haar_orthogonal(std::size_t n, std::mt19937_64& rng);

/// rows x cols matrix with orthonormal rows (requires rows <= cols).
Matrix haar_orthonormal_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace actnorm
