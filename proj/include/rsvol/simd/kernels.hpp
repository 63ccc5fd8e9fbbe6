#pragma once

#include <cstddef>
#include <string_view>

namespace rsvol::simd {

/// Inner loops of the finite-difference solvers. Each table entry has a
/// scalar reference implementation; vectorized variants must agree with it
/// to rounding (FMA contraction is the only permitted difference).
struct KernelTable {
  std::string_view name;

  /// y[k] = lo[k] x[k-1] + di[k] x[k] + up[k] x[k+1]; lo[0] and up[m-1] are
  /// not read.
  void (*tridiag_apply)(const double* lo, const double* di, const double* up, const double* x,
                        double* y, std::size_t m);

  /// y[k] += a x[k]
  void (*axpy)(double a, const double* x, double* y, std::size_t m);

  /// out[k] = (u[k-1] - 2 u[k] + u[k+1]) * inv_h2 for 1 <= k <= m-2.
  void (*second_difference)(const double* u, double* out, std::size_t m, double inv_h2);

  /// out[k] = (u[k+1] - u[k-1]) * inv_2h for 1 <= k <= m-2.
  void (*first_difference)(const double* u, double* out, std::size_t m, double inv_2h);

  /// sum_k w[k] x[k]^2
  double (*weighted_sum_squares)(const double* w, const double* x, std::size_t m);

  /// out[k] = a[k] * b[k]
  void (*multiply)(const double* a, const double* b, double* out, std::size_t m);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// Table used by the solvers: AVX2 when available, unless the environment
/// variable RSVOL_SIMD=scalar forces the reference path.
const KernelTable& active_kernels();

}  // namespace rsvol::simd
