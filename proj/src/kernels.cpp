#include "dfi/kernels.hpp"

namespace dfi::kern {

namespace scalar {

namespace {
// Combine the eight partials in the fixed documented order.
inline double combine(const double* p) {
  return ((p[0] + p[4]) + (p[2] + p[6])) + ((p[1] + p[5]) + (p[3] + p[7]));
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8)
    for (std::size_t k = 0; k < 8; ++k) p[k] += a[i + k] * b[i + k];
  double r = combine(p);
  for (std::size_t i = main; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum(const double* a, std::size_t n) {
  double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8)
    for (std::size_t k = 0; k < 8; ++k) p[k] += a[i + k];
  double r = combine(p);
  for (std::size_t i = main; i < n; ++i) r += a[i];
  return r;
}

double sumsq(const double* a, std::size_t n) {
  double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8)
    for (std::size_t k = 0; k < 8; ++k) p[k] += a[i + k] * a[i + k];
  double r = combine(p);
  for (std::size_t i = main; i < n; ++i) r += a[i] * a[i];
  return r;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  double p[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8)
    for (std::size_t k = 0; k < 8; ++k) {
      double d = a[i + k] - b[i + k];
      p[k] += d * d;
    }
  double r = combine(p);
  for (std::size_t i = main; i < n; ++i) {
    double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

namespace {
bool have_avx2() {
  static const bool ok = __builtin_cpu_supports("avx2");
  return ok;
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return have_avx2() ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}
double sum(const double* a, std::size_t n) {
  return have_avx2() ? avx2::sum(a, n) : scalar::sum(a, n);
}
double sumsq(const double* a, std::size_t n) {
  return have_avx2() ? avx2::sumsq(a, n) : scalar::sumsq(a, n);
}
double sqdist(const double* a, const double* b, std::size_t n) {
  return have_avx2() ? avx2::sqdist(a, b, n) : scalar::sqdist(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  have_avx2() ? avx2::axpy(alpha, x, y, n) : scalar::axpy(alpha, x, y, n);
}
const char* active_backend() { return have_avx2() ? "avx2" : "scalar"; }

#elif defined(__aarch64__)

namespace neon {

#include <arm_neon.h>

namespace {
// Four float64x2 accumulators q0..q3 hold partials {p0,p1},{p2,p3},{p4,p5},
// {p6,p7}; (q0+q2) + (q1+q3) yields lanes {(p0+p4)+(p2+p6),(p1+p5)+(p3+p7)},
// matching the scalar combine order exactly.
inline double combine(float64x2_t q0, float64x2_t q1, float64x2_t q2,
                      float64x2_t q3) {
  float64x2_t u = vaddq_f64(vaddq_f64(q0, q2), vaddq_f64(q1, q3));
  return vgetq_lane_f64(u, 0) + vgetq_lane_f64(u, 1);
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t q0 = vdupq_n_f64(0), q1 = q0, q2 = q0, q3 = q0;
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    q0 = vaddq_f64(q0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    q1 = vaddq_f64(q1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    q2 = vaddq_f64(q2, vmulq_f64(vld1q_f64(a + i + 4), vld1q_f64(b + i + 4)));
    q3 = vaddq_f64(q3, vmulq_f64(vld1q_f64(a + i + 6), vld1q_f64(b + i + 6)));
  }
  double r = combine(q0, q1, q2, q3);
  for (std::size_t i = main; i < n; ++i) r += a[i] * b[i];
  return r;
}

double sum(const double* a, std::size_t n) {
  float64x2_t q0 = vdupq_n_f64(0), q1 = q0, q2 = q0, q3 = q0;
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    q0 = vaddq_f64(q0, vld1q_f64(a + i));
    q1 = vaddq_f64(q1, vld1q_f64(a + i + 2));
    q2 = vaddq_f64(q2, vld1q_f64(a + i + 4));
    q3 = vaddq_f64(q3, vld1q_f64(a + i + 6));
  }
  double r = combine(q0, q1, q2, q3);
  for (std::size_t i = main; i < n; ++i) r += a[i];
  return r;
}

double sumsq(const double* a, std::size_t n) {
  float64x2_t q0 = vdupq_n_f64(0), q1 = q0, q2 = q0, q3 = q0;
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    float64x2_t v0 = vld1q_f64(a + i), v1 = vld1q_f64(a + i + 2);
    float64x2_t v2 = vld1q_f64(a + i + 4), v3 = vld1q_f64(a + i + 6);
    q0 = vaddq_f64(q0, vmulq_f64(v0, v0));
    q1 = vaddq_f64(q1, vmulq_f64(v1, v1));
    q2 = vaddq_f64(q2, vmulq_f64(v2, v2));
    q3 = vaddq_f64(q3, vmulq_f64(v3, v3));
  }
  double r = combine(q0, q1, q2, q3);
  for (std::size_t i = main; i < n; ++i) r += a[i] * a[i];
  return r;
}

double sqdist(const double* a, const double* b, std::size_t n) {
  float64x2_t q0 = vdupq_n_f64(0), q1 = q0, q2 = q0, q3 = q0;
  std::size_t main = n - n % 8;
  for (std::size_t i = 0; i < main; i += 8) {
    float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    float64x2_t d2 = vsubq_f64(vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
    float64x2_t d3 = vsubq_f64(vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
    q0 = vaddq_f64(q0, vmulq_f64(d0, d0));
    q1 = vaddq_f64(q1, vmulq_f64(d1, d1));
    q2 = vaddq_f64(q2, vmulq_f64(d2, d2));
    q3 = vaddq_f64(q3, vmulq_f64(d3, d3));
  }
  double r = combine(q0, q1, q2, q3);
  for (std::size_t i = main; i < n; ++i) {
    double d = a[i] - b[i];
    r += d * d;
  }
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  float64x2_t va = vdupq_n_f64(alpha);
  std::size_t main = n - n % 2;
  for (std::size_t i = 0; i < main; i += 2)
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  for (std::size_t i = main; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace neon

double dot(const double* a, const double* b, std::size_t n) { return neon::dot(a, b, n); }
double sum(const double* a, std::size_t n) { return neon::sum(a, n); }
double sumsq(const double* a, std::size_t n) { return neon::sumsq(a, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return neon::sqdist(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { neon::axpy(alpha, x, y, n); }
const char* active_backend() { return "neon"; }

#else

double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double sum(const double* a, std::size_t n) { return scalar::sum(a, n); }
double sumsq(const double* a, std::size_t n) { return scalar::sumsq(a, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return scalar::sqdist(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
const char* active_backend() { return "scalar"; }

#endif

}  // namespace dfi::kern
