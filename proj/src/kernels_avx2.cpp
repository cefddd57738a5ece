// AVX2 backend; this translation unit alone is compiled with -mavx2.
// Reduction order matches the scalar reference exactly (see kernels.hpp):
// accumulator va holds partials p0..p3, vb holds p4..p7; va+vb then
// low128+high128 then lane0+lane1 reproduces
// ((p0+p4)+(p2+p6)) + ((p1+p5)+(p3+p7)). Multiplication and addition stay
// separate instructions: FMA would change the rounding.

#include "dfi/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace dfi::kern::avx2 {

namespace {
inline double combine(__m256d va, __m256d vb) {
  __m256d vs = _mm256_add_pd(va, vb);
  __m128d lo = _mm256_castpd256_pd128(vs);
  __m128d hi = _mm256_extractf128_pd(vs, 1);
  __m128d t = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(t) + _mm_cvtsd_f64(_mm_unpackhi_pd(t, t));
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d va = _mm256_setzero_pd(), vb = _mm256_setzero_pd();
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    va = _mm256_add_pd(va, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    vb = _mm256_add_pd(vb, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double r = combine(va, vb);
  for (std::size_t i = main; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum(const double* a, std::size_t n) {
  __m256d va = _mm256_setzero_pd(), vb = _mm256_setzero_pd();
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    va = _mm256_add_pd(va, _mm256_loadu_pd(a + i));
    vb = _mm256_add_pd(vb, _mm256_loadu_pd(a + i + 4));
  }
  double r = combine(va, vb);
  for (std::size_t i = main; i < n; ++i) r += a[i];
  return r;
}

double sumsq(const double* a, std::size_t n) {
  __m256d va = _mm256_setzero_pd(), vb = _mm256_setzero_pd();
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    __m256d x0 = _mm256_loadu_pd(a + i);
    __m256d x1 = _mm256_loadu_pd(a + i + 4);
    va = _mm256_add_pd(va, _mm256_mul_pd(x0, x0));
    vb = _mm256_add_pd(vb, _mm256_mul_pd(x1, x1));
  }
  double r = combine(va, vb);
  for (std::size_t i = main; i < n; ++i) r += a[i] * a[i];
  return r;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  __m256d va = _mm256_setzero_pd(), vb = _mm256_setzero_pd();
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    va = _mm256_add_pd(va, _mm256_mul_pd(d0, d0));
    vb = _mm256_add_pd(vb, _mm256_mul_pd(d1, d1));
  }
  double r = combine(va, vb);
  for (std::size_t i = main; i < n; ++i) {
    double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  std::size_t main = n - n % 4;
  for (std::size_t i = 0; i < main; i += 4) {
    __m256d yi = _mm256_loadu_pd(y + i);
    yi = _mm256_add_pd(yi, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, yi);
  }
  for (std::size_t i = main; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace dfi::kern::avx2

#endif
