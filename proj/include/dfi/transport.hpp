#pragma once

#include "dfi/core.hpp"
#include "dfi/linalg.hpp"

namespace dfi {

struct CovarianceEstimate {
  Matrix sigma;  // d x d, exactly symmetrized
  std::size_t n_used = 0;
};

// Linear disentangling map: X = L * Z, Z = L_inv * X.
struct LinearTransport {
  Matrix l;
  Matrix l_inv;
  TransportKind kind = TransportKind::bures_wasserstein;
  double condition_number = 1.0;
};

// w(j, l) = (dX_l / dZ_j)^2 = L[l][j]^2. Row j is a latent coordinate,
// column l a raw feature: attributed[l] = sum_j w(j, l) * latent[j].
// Column sums equal diag(L L^T); row sums equal diag(L^T L).
struct AttributionWeights {
  Matrix w;
};

// Sample covariance with the n-1 denominator about the sample mean.
CovarianceEstimate estimate_covariance(const Dataset& ds);

// Symmetric PSD square root via Jacobi eigendecomposition. Any eigenvalue
// <= eps fails loudly; eps < 0 selects the default 1e-10 * lambda_max.
// Returns (l, l_inv) with l*l = sigma and l_inv = l^{-1}.
std::pair<Matrix, Matrix> sqrt_psd(const Matrix& sigma, double eps);

// Builds the transport from an already-estimated covariance.
LinearTransport transport_from_covariance(const Matrix& sigma, TransportKind kind,
                                          double eps = -1.0);

LinearTransport fit_bw_transport(const Dataset& ds, double eps = -1.0);
LinearTransport fit_triangular_transport(const Dataset& ds, double eps = -1.0);

// Row-wise application: forward maps x rows to z = L^{-1} x, inverse maps
// z rows back to x = L z.
Matrix forward(const LinearTransport& t, const Matrix& x_rows);
Matrix inverse(const LinearTransport& t, const Matrix& z_rows);

AttributionWeights attribution_weights(const LinearTransport& t);

}  // namespace dfi
