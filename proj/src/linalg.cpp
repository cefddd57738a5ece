#include "dfi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dfi/kernels.hpp"

namespace dfi {

Matrix Matrix::identity(std::size_t d) {
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& x, const Matrix& y) {
  if (x.cols != y.rows) throw std::invalid_argument("matmul: shape mismatch");
  Matrix yt = transpose(y);
  Matrix out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j)
      out(i, j) = kern::dot(x.row(i), yt.row(j), x.cols);
  return out;
}

Matrix transpose(const Matrix& x) {
  Matrix t(x.cols, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) t(j, i) = x(i, j);
  return t;
}

std::vector<double> matvec(const Matrix& m, const double* v) {
  std::vector<double> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = kern::dot(m.row(i), v, m.cols);
  return out;
}

EigenSym jacobi_eigen(const Matrix& sym) {
  if (sym.rows != sym.cols) throw std::invalid_argument("jacobi_eigen: not square");
  const std::size_t d = sym.rows;
  Matrix a = sym;
  Matrix v = Matrix::identity(d);

  auto offdiag = [&]() {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) s += a(p, q) * a(p, q);
    return s;
  };
  double norm = frobenius(a);
  const double tol = (norm == 0.0) ? 0.0 : 1e-28 * norm * norm;

  for (int sweep = 0; sweep < 100 && offdiag() > tol; ++sweep) {
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double apq = a(p, q);
        if (apq == 0.0) continue;
        double app = a(p, p), aqq = a(q, q);
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSym out;
  out.values.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.values[i] = a(i, i);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return out.values[i] < out.values[j];
  });
  EigenSym sorted;
  sorted.values.resize(d);
  sorted.vectors = Matrix(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (std::size_t i = 0; i < d; ++i) sorted.vectors(i, j) = v(i, order[j]);
  }
  return sorted;
}

Matrix cholesky_lower(const Matrix& sym) {
  if (sym.rows != sym.cols) throw std::invalid_argument("cholesky: not square");
  const std::size_t d = sym.rows;
  Matrix l(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    double diag = sym(j, j) - kern::sumsq(l.row(j), j);
    if (!(diag > 0.0))
      throw std::runtime_error("cholesky: nonpositive pivot at index " +
                               std::to_string(j));
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i)
      l(i, j) = (sym(i, j) - kern::dot(l.row(i), l.row(j), j)) / l(j, j);
  }
  return l;
}

std::vector<double> least_squares(const Matrix& x, const std::vector<double>& y) {
  if (x.rows != y.size()) throw std::invalid_argument("least_squares: shape mismatch");
  const std::size_t d = x.cols;
  Matrix xt = transpose(x);
  Matrix gram(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j)
      gram(i, j) = gram(j, i) = kern::dot(xt.row(i), xt.row(j), x.rows);
  std::vector<double> xty(d);
  for (std::size_t i = 0; i < d; ++i) xty[i] = kern::dot(xt.row(i), y.data(), x.rows);

  EigenSym eig = jacobi_eigen(gram);
  double lmax = 0.0;
  for (double v : eig.values) lmax = std::max(lmax, std::fabs(v));
  const double cut = 1e-12 * lmax;
  // coef = V diag(1/lambda) V^T x^T y, dropping near-zero eigenvalues.
  std::vector<double> proj(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    if (!(eig.values[k] > cut)) continue;
    double vk_dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) vk_dot += eig.vectors(i, k) * xty[i];
    double scale = vk_dot / eig.values[k];
    for (std::size_t i = 0; i < d; ++i) proj[i] += scale * eig.vectors(i, k);
  }
  return proj;
}

double max_abs_diff(const Matrix& x, const Matrix& y) {
  if (x.rows != y.rows || x.cols != y.cols)
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i)
    m = std::max(m, std::fabs(x.a[i] - y.a[i]));
  return m;
}

double frobenius(const Matrix& x) { return std::sqrt(kern::sumsq(x.a.data(), x.a.size())); }

}  // namespace dfi
