#include "dfi/transport.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dfi/kernels.hpp"
#include "dfi/stats.hpp"

namespace dfi {

CovarianceEstimate estimate_covariance(const Dataset& ds) {
  ds.validate();
  const std::size_t n = ds.n(), d = ds.d();
  if (n < 2) throw std::invalid_argument("covariance needs at least 2 rows");

  // Centered columns, contiguous so the pairwise dots vectorize.
  Matrix cols(d, n);
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += ds.x(i, j);
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) cols(j, i) = ds.x(i, j) - m;
  }

  CovarianceEstimate out;
  out.n_used = n;
  out.sigma = Matrix(d, d);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j; k < d; ++k) {
      double v = kern::dot(cols.row(j), cols.row(k), n) / denom;
      out.sigma(j, k) = v;
      out.sigma(k, j) = v;
    }
  return out;
}

namespace {

// Shared eigendecomposition guard: every eigenvalue must clear eps.
EigenSym checked_eigen(const Matrix& sigma, double& eps) {
  EigenSym eig = jacobi_eigen(sigma);
  const double lmax = eig.values.empty() ? 0.0 : eig.values.back();
  if (eps < 0.0) eps = 1e-10 * lmax;
  for (double v : eig.values)
    if (!(v > eps))
      throw std::runtime_error(
          "singular or near-singular covariance: eigenvalue " + std::to_string(v) +
          " <= " + std::to_string(eps));
  return eig;
}

Matrix lower_triangular_inverse(const Matrix& l) {
  const std::size_t d = l.rows;
  Matrix inv(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    inv(j, j) = 1.0 / l(j, j);
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += l(i, k) * inv(k, j);
      inv(i, j) = -s / l(i, i);
    }
  }
  return inv;
}

}  // namespace

std::pair<Matrix, Matrix> sqrt_psd(const Matrix& sigma, double eps) {
  if (sigma.rows != sigma.cols) throw std::invalid_argument("sqrt_psd: not square");
  EigenSym eig = checked_eigen(sigma, eps);
  const std::size_t d = sigma.rows;
  Matrix l(d, d), l_inv(d, d);
  // V diag(sqrt(lambda)) V^T and its inverse, built symmetric by construction.
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      double s = 0.0, si = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        double root = std::sqrt(eig.values[k]);
        double vv = eig.vectors(i, k) * eig.vectors(j, k);
        s += root * vv;
        si += vv / root;
      }
      l(i, j) = l(j, i) = s;
      l_inv(i, j) = l_inv(j, i) = si;
    }
  return {l, l_inv};
}

LinearTransport transport_from_covariance(const Matrix& sigma, TransportKind kind,
                                          double eps) {
  LinearTransport t;
  t.kind = kind;
  double eps_used = eps;
  EigenSym eig = checked_eigen(sigma, eps_used);
  t.condition_number = eig.values.back() / eig.values.front();
  if (kind == TransportKind::bures_wasserstein) {
    auto [l, l_inv] = sqrt_psd(sigma, eps);
    t.l = std::move(l);
    t.l_inv = std::move(l_inv);
  } else {
    t.l = cholesky_lower(sigma);
    t.l_inv = lower_triangular_inverse(t.l);
  }
  return t;
}

LinearTransport fit_bw_transport(const Dataset& ds, double eps) {
  return transport_from_covariance(estimate_covariance(ds).sigma,
                                   TransportKind::bures_wasserstein, eps);
}

LinearTransport fit_triangular_transport(const Dataset& ds, double eps) {
  return transport_from_covariance(estimate_covariance(ds).sigma,
                                   TransportKind::triangular, eps);
}

namespace {
Matrix apply_rowwise(const Matrix& map, const Matrix& rows) {
  if (rows.cols != map.cols)
    throw std::invalid_argument("transport: row width " + std::to_string(rows.cols) +
                                " does not match dimension " + std::to_string(map.cols));
  Matrix out(rows.rows, rows.cols);
  for (std::size_t i = 0; i < rows.rows; ++i)
    for (std::size_t r = 0; r < map.rows; ++r)
      out(i, r) = kern::dot(map.row(r), rows.row(i), map.cols);
  return out;
}
}  // namespace

Matrix forward(const LinearTransport& t, const Matrix& x_rows) {
  return apply_rowwise(t.l_inv, x_rows);
}

Matrix inverse(const LinearTransport& t, const Matrix& z_rows) {
  return apply_rowwise(t.l, z_rows);
}

AttributionWeights attribution_weights(const LinearTransport& t) {
  const std::size_t d = t.l.rows;
  AttributionWeights w;
  w.w = Matrix(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t l = 0; l < d; ++l) w.w(j, l) = t.l(l, j) * t.l(l, j);
  return w;
}

}  // namespace dfi
