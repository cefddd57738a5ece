#pragma once

#include <cstddef>

// Arithmetic kernels with runtime-dispatched SIMD backends.
//
// Every backend computes reductions in one fixed order so results are
// bit-identical across scalar, AVX2 and NEON paths:
//   - eight partial accumulators p0..p7, p[k] accumulating elements i with
//     i%8==k over the first 8*floor(n/8) elements,
//   - combined as ((p0+p4)+(p2+p6)) + ((p1+p5)+(p3+p7)),
//   - remaining tail elements added sequentially afterwards.
// No FMA is used; the build disables floating-point contraction.

namespace dfi::kern {

double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
// Squared Euclidean distance between a and b.
double sqdist(const double* a, const double* b, std::size_t n);
// y[i] += alpha * x[i]; elementwise, backend-independent by construction.
void axpy(double alpha, const double* x, double* y, std::size_t n);

// Name of the backend selected at startup: "scalar", "avx2" or "neon".
const char* active_backend();

// Reference implementations, exposed so tests can assert bit-exact
// equivalence against the dispatched path.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

}  // namespace dfi::kern
