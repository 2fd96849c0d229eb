#pragma once

// Local (single-rank) BLAS-subset kernels and unblocked factorizations.
//
// Every kernel runs through the Context's backend and adds its floating-point
// operation count to the Context's FlopCounter. Multiplies and adds count
// separately; divisions and square roots count one; comparisons and swaps are
// free. Only the rows x cols region of a view is ever read or written.

#include <cstddef>
#include <span>
#include <vector>

#include "gridsolve/backend.hpp"
#include "gridsolve/core.hpp"

namespace gridsolve::kernels {

enum class Side { Left, Right };
enum class Uplo { Lower, Upper };

struct TriangleSpec {
  Side side = Side::Left;
  Uplo uplo = Uplo::Lower;
  bool unit_diag = false;
  bool transpose = false;
};

using Pivots = std::vector<std::size_t>;

/// Compensated running sum. hi + lo carries the total to about twice double
/// precision, so partial sums formed under any grouping and then merged round
/// to the same value except at near-ties. dot, nrm2 and gemv sum their
/// (individually rounded) products this way, which is what lets a distributed
/// reduction reproduce the single-rank result.
struct Accum {
  double hi = 0;
  double lo = 0;

  void add(double v) noexcept {
    const double s = hi + v;
    const double bp = s - hi;
    lo += (hi - (s - bp)) + (v - bp);
    hi = s;
  }
  void merge(const Accum& o) noexcept {
    add(o.hi);
    lo += o.lo;
  }
  template <class T>
  T value() const noexcept {
    return static_cast<T>(hi + lo);
  }
};

#define GRIDSOLVE_DECLARE_KERNELS(T)                                                                       \
  /* y <- alpha x + y */                                                                                   \
  void axpy(Context& ctx, T alpha, std::span<const T> x, std::span<T> y);                                \
  T dot(Context& ctx, std::span<const T> x, std::span<const T> y);                                       \
  /* Unscaled sum of squares; F32 overflows for entries beyond ~1e19. */                                   \
  T nrm2(Context& ctx, std::span<const T> x);                                                             \
  /* Unrounded x . y, for sums finished on other ranks */                                                \
  Accum dot_partial(Context& ctx, std::span<const T> x, std::span<const T> y);                             \
  /* x <- alpha x */                                                                                       \
  void scal(Context& ctx, T alpha, std::span<T> x);                                                       \
  /* x <- x / alpha, elementwise division (not a reciprocal multiply) */                                   \
  void rscal(Context& ctx, T alpha, std::span<T> x);                                                      \
  /* y <- alpha op(A) x + beta y; beta == 0 never reads y */                                              \
  void gemv(Context& ctx, bool transpose, T alpha, MatrixView<const T> a, std::span<const T> x, T beta,   \
            std::span<T> y);                                                                              \
  /* hi[i] + lo[i] <- (op(A) x)[i], unrounded */                                                          \
  void gemv_partial(Context& ctx, bool transpose, MatrixView<const T> a, std::span<const T> x,            \
                    std::span<double> hi, std::span<double> lo);                                          \
  /* C <- alpha op(A) op(B) + beta C; beta == 0 never reads C */                                          \
  void gemm(Context& ctx, bool trans_a, bool trans_b, T alpha, MatrixView<const T> a,                     \
            MatrixView<const T> b, T beta, MatrixView<T> c);                                              \
  /* lower(C) <- alpha A A^T + beta lower(C); the strict upper part of C is untouched */                  \
  void syrk_lower(Context& ctx, T alpha, MatrixView<const T> a, T beta, MatrixView<T> c);                 \
  /* B <- alpha op(A)^-1 B (Left) or alpha B op(A)^-1 (Right) */                                          \
  void trsm(Context& ctx, TriangleSpec spec, T alpha, MatrixView<const T> a, MatrixView<T> b);            \
  /* In-place LU with partial pivoting of an m x n panel (m >= n) */                                       \
  Pivots getf2(Context& ctx, MatrixView<T> a);                                                             \
  /* In-place lower Cholesky; reads and writes only the lower triangle */                                  \
  void potf2(Context& ctx, MatrixView<T> a);                                                               \
  /* For k in [first, last): swap rows k and pivots[k] */                                                  \
  void laswp(Context& ctx, MatrixView<T> a, std::span<const std::size_t> pivots, std::size_t first,        \
             std::size_t last);

GRIDSOLVE_DECLARE_KERNELS(float)
GRIDSOLVE_DECLARE_KERNELS(double)

#undef GRIDSOLVE_DECLARE_KERNELS

}  // namespace gridsolve::kernels
