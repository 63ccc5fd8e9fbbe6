// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include "rsvol/simd/kernels.hpp"

namespace rsvol::simd {
namespace {

void tridiag_apply(const double* lo, const double* di, const double* up, const double* x,
                   double* y, std::size_t m) {
  if (m < 2) {
    if (m == 1) y[0] = di[0] * x[0];
    return;
  }
  y[0] = di[0] * x[0] + up[0] * x[1];
  std::size_t k = 1;
  for (; k + 4 < m; k += 4) {
    const __m256d xm = _mm256_loadu_pd(x + k - 1);
    const __m256d xc = _mm256_loadu_pd(x + k);
    const __m256d xp = _mm256_loadu_pd(x + k + 1);
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(lo + k), xm);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(di + k), xc, acc);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(up + k), xp, acc);
    _mm256_storeu_pd(y + k, acc);
  }
  for (; k + 1 < m; ++k) {
    y[k] = lo[k] * x[k - 1] + di[k] * x[k] + up[k] * x[k + 1];
  }
  y[m - 1] = lo[m - 1] * x[m - 2] + di[m - 1] * x[m - 1];
}

void axpy(double a, const double* x, double* y, std::size_t m) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= m; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < m; ++k) y[k] += a * x[k];
}

void second_difference(const double* u, double* out, std::size_t m, double inv_h2) {
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d scale = _mm256_set1_pd(inv_h2);
  std::size_t k = 1;
  for (; k + 4 < m; k += 4) {
    const __m256d um = _mm256_loadu_pd(u + k - 1);
    const __m256d uc = _mm256_loadu_pd(u + k);
    const __m256d up = _mm256_loadu_pd(u + k + 1);
    const __m256d s = _mm256_sub_pd(_mm256_add_pd(um, up), _mm256_mul_pd(two, uc));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(s, scale));
  }
  for (; k + 1 < m; ++k) {
    out[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_h2;
  }
}

void first_difference(const double* u, double* out, std::size_t m, double inv_2h) {
  const __m256d scale = _mm256_set1_pd(inv_2h);
  std::size_t k = 1;
  for (; k + 4 < m; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(u + k + 1), _mm256_loadu_pd(u + k - 1));
    _mm256_storeu_pd(out + k, _mm256_mul_pd(d, scale));
  }
  for (; k + 1 < m; ++k) out[k] = (u[k + 1] - u[k - 1]) * inv_2h;
}

double weighted_sum_squares(const double* w, const double* x, std::size_t m) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= m; k += 4) {
    const __m256d xv = _mm256_loadu_pd(x + k);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + k), xv), xv, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; k < m; ++k) s += w[k] * x[k] * x[k];
  return s;
}

void multiply(const double* a, const double* b, double* out, std::size_t m) {
  std::size_t k = 0;
  for (; k + 4 <= m; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
  }
  for (; k < m; ++k) out[k] = a[k] * b[k];
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2",           tridiag_apply,    axpy,
                                 second_difference, first_difference, weighted_sum_squares,
                                 multiply};
  return table;
}

}  // namespace rsvol::simd
