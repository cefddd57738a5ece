#pragma once

#include <cstddef>
#include <vector>

namespace dfi {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }

  static Matrix identity(std::size_t d);
};

Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& x);
// out = m * v for a row vector v of length m.cols.
std::vector<double> matvec(const Matrix& m, const double* v);

struct EigenSym {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are the matching eigenvectors
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
// a = vectors * diag(values) * vectors^T to working precision.
EigenSym jacobi_eigen(const Matrix& sym);

// Lower-triangular l with l*l^T = sym; throws std::runtime_error when a
// pivot is not strictly positive.
Matrix cholesky_lower(const Matrix& sym);

// Minimum-norm least squares via eigendecomposition of x^T x; eigenvalues
// below 1e-12 * lambda_max are treated as zero.
std::vector<double> least_squares(const Matrix& x, const std::vector<double>& y);

double max_abs_diff(const Matrix& x, const Matrix& y);
double frobenius(const Matrix& x);

}  // namespace dfi
