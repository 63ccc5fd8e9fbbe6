#include "rsvol/simd/kernels.hpp"

namespace rsvol::simd {
namespace {

void tridiag_apply(const double* lo, const double* di, const double* up, const double* x,
                   double* y, std::size_t m) {
  if (m == 0) return;
  if (m == 1) {
    y[0] = di[0] * x[0];
    return;
  }
  y[0] = di[0] * x[0] + up[0] * x[1];
  for (std::size_t k = 1; k + 1 < m; ++k) {
    y[k] = lo[k] * x[k - 1] + di[k] * x[k] + up[k] * x[k + 1];
  }
  y[m - 1] = lo[m - 1] * x[m - 2] + di[m - 1] * x[m - 1];
}

void axpy(double a, const double* x, double* y, std::size_t m) {
  for (std::size_t k = 0; k < m; ++k) y[k] += a * x[k];
}

void second_difference(const double* u, double* out, std::size_t m, double inv_h2) {
  for (std::size_t k = 1; k + 1 < m; ++k) {
    out[k] = (u[k - 1] - 2.0 * u[k] + u[k + 1]) * inv_h2;
  }
}

void first_difference(const double* u, double* out, std::size_t m, double inv_2h) {
  for (std::size_t k = 1; k + 1 < m; ++k) {
    out[k] = (u[k + 1] - u[k - 1]) * inv_2h;
  }
}

double weighted_sum_squares(const double* w, const double* x, std::size_t m) {
  double s = 0.0;
  for (std::size_t k = 0; k < m; ++k) s += w[k] * x[k] * x[k];
  return s;
}

void multiply(const double* a, const double* b, double* out, std::size_t m) {
  for (std::size_t k = 0; k < m; ++k) out[k] = a[k] * b[k];
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",          tridiag_apply,        axpy,
                                 second_difference, first_difference,     weighted_sum_squares,
                                 multiply};
  return table;
}

}  // namespace rsvol::simd
