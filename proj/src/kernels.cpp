#include "gridsolve/kernels.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

namespace gridsolve::kernels {

namespace {

[[noreturn]] void mismatch(const char* kernel, const std::string& what) {
  throw Error(ErrorKind::DimensionMismatch, std::string(kernel) + ": " + what);
}

template <class T>
HostBuffer in(MatrixView<const T> m) {
  return HostBuffer::of(m, Access::In);
}
template <class T>
HostBuffer in(std::span<const T> v) {
  return HostBuffer::of(v, Access::In);
}

// Reference bodies. They see operands wherever the backend placed them.
namespace ref {

// acc[i] += (op(A) x)[i].
template <class T>
void gemv_sums(bool trans, MatrixView<const T> a, std::span<const T> x, std::span<Accum> acc) {
  const std::size_t m = a.rows(), n = a.cols();
  for (std::size_t j = 0; j < n; ++j) {
    const T* col = a.data() + j * a.lead();
    if (!trans) {
      const double xj = x[j];
      for (std::size_t i = 0; i < m; ++i) acc[i].add(double(col[i]) * xj);
    } else {
      for (std::size_t i = 0; i < m; ++i) acc[j].add(double(col[i]) * double(x[i]));
    }
  }
}

template <class T>
void gemv(bool trans, T alpha, MatrixView<const T> a, std::span<const T> x, T beta, std::span<T> y) {
  std::vector<Accum> acc(y.size());
  gemv_sums<T>(trans, a, x, acc);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const T s = alpha * acc[i].value<T>();
    y[i] = beta == T(0) ? s : beta * y[i] + s;
  }
}

template <class T>
Accum dot(std::span<const T> x, std::span<const T> y) {
  Accum acc;
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(double(x[i]) * double(y[i]));
  return acc;
}

template <class T>
void gemm(bool ta, bool tb, T alpha, MatrixView<const T> a, MatrixView<const T> b, T beta, MatrixView<T> c) {
  const std::size_t m = c.rows(), n = c.cols();
  const std::size_t k = ta ? a.rows() : a.cols();
  auto B = [&](std::size_t p, std::size_t j) { return tb ? b(j, p) : b(p, j); };
  for (std::size_t j = 0; j < n; ++j) {
    T* cj = c.data() + j * c.lead();
    if (!ta) {
      // axpy form: column j of C accumulates columns of A in order of p.
      if (beta == T(0))
        for (std::size_t i = 0; i < m; ++i) cj[i] = T(0);
      else if (beta != T(1))
        for (std::size_t i = 0; i < m; ++i) cj[i] *= beta;
      if (alpha == T(0)) continue;
      for (std::size_t p = 0; p < k; ++p) {
        const T t = alpha * B(p, j);
        const T* ap = a.data() + p * a.lead();
        for (std::size_t i = 0; i < m; ++i) cj[i] += t * ap[i];
      }
    } else {
      // dot form over columns of A.
      for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a.data() + i * a.lead();
        T s = T(0);
        for (std::size_t p = 0; p < k; ++p) s += ai[p] * B(p, j);
        cj[i] = beta == T(0) ? alpha * s : beta * cj[i] + alpha * s;
      }
    }
  }
}

template <class T>
void syrk_lower(T alpha, MatrixView<const T> a, T beta, MatrixView<T> c) {
  const std::size_t n = c.rows(), k = a.cols();
  for (std::size_t j = 0; j < n; ++j) {
    T* cj = c.data() + j * c.lead();
    if (beta == T(0))
      for (std::size_t i = j; i < n; ++i) cj[i] = T(0);
    else if (beta != T(1))
      for (std::size_t i = j; i < n; ++i) cj[i] *= beta;
    for (std::size_t p = 0; p < k; ++p) {
      const T* ap = a.data() + p * a.lead();
      const T t = alpha * ap[j];
      for (std::size_t i = j; i < n; ++i) cj[i] += t * ap[i];
    }
  }
}

template <class T>
void trsm(TriangleSpec s, T alpha, MatrixView<const T> a, MatrixView<T> b) {
  const std::size_t n = a.rows();
  const bool unit = s.unit_diag;
  if (alpha != T(1))
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t i = 0; i < b.rows(); ++i) b(i, j) *= alpha;

  if (s.side == Side::Left) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T* x = b.data() + j * b.lead();
      if (!s.transpose && s.uplo == Uplo::Lower) {
        for (std::size_t k = 0; k < n; ++k) {
          if (!unit) x[k] /= a(k, k);
          const T t = -x[k];
          for (std::size_t i = k + 1; i < n; ++i) x[i] += t * a(i, k);
        }
      } else if (!s.transpose) {
        for (std::size_t k = n; k-- > 0;) {
          if (!unit) x[k] /= a(k, k);
          const T t = -x[k];
          for (std::size_t i = 0; i < k; ++i) x[i] += t * a(i, k);
        }
      } else if (s.uplo == Uplo::Lower) {
        // L^T is upper: backward, dot form over column i of L.
        for (std::size_t i = n; i-- > 0;) {
          T acc = x[i];
          for (std::size_t k = i + 1; k < n; ++k) acc -= a(k, i) * x[k];
          x[i] = unit ? acc : acc / a(i, i);
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          T acc = x[i];
          for (std::size_t k = 0; k < i; ++k) acc -= a(k, i) * x[k];
          x[i] = unit ? acc : acc / a(i, i);
        }
      }
    }
    return;
  }

  // Right side: X op(A) = B, one column of X at a time.
  const std::size_t m = b.rows();
  auto opa = [&](std::size_t k, std::size_t j) { return s.transpose ? a(j, k) : a(k, j); };
  const bool forward = (s.uplo == Uplo::Upper) != s.transpose;
  auto solve_col = [&](std::size_t j, std::size_t k_begin, std::size_t k_end) {
    T* xj = b.data() + j * b.lead();
    for (std::size_t k = k_begin; k < k_end; ++k) {
      const T t = -opa(k, j);
      const T* xk = b.data() + k * b.lead();
      for (std::size_t i = 0; i < m; ++i) xj[i] += t * xk[i];
    }
    if (!unit) {
      const T d = a(j, j);
      for (std::size_t i = 0; i < m; ++i) xj[i] /= d;
    }
  };
  if (forward)
    for (std::size_t j = 0; j < n; ++j) solve_col(j, 0, j);
  else
    for (std::size_t j = n; j-- > 0;) solve_col(j, j + 1, n);
}

template <class T>
void getf2(MatrixView<T> a, std::span<std::uint64_t> piv) {
  const std::size_t m = a.rows(), n = a.cols();
  for (std::size_t k = 0; k < n; ++k) {
    // Smallest row index among maximal |value|.
    std::size_t p = k;
    T best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < m; ++i) {
      const T v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == T(0))
      throw Error(ErrorKind::SingularPivot, "getf2: zero pivot column at step " + std::to_string(k));
    piv[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    const T d = a(k, k);
    for (std::size_t i = k + 1; i < m; ++i) a(i, k) /= d;
    for (std::size_t j = k + 1; j < n; ++j) {
      const T t = -a(k, j);
      T* aj = a.data() + j * a.lead();
      const T* ak = a.data() + k * a.lead();
      for (std::size_t i = k + 1; i < m; ++i) aj[i] += t * ak[i];
    }
  }
}

template <class T>
void potf2(MatrixView<T> a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    T d = a(j, j);
    for (std::size_t p = 0; p < j; ++p) d -= a(j, p) * a(j, p);
    if (!(d > T(0)))
      throw Error(ErrorKind::NotSpd, "potf2: non-positive pivot at column " + std::to_string(j));
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = a(i, j);
      for (std::size_t p = 0; p < j; ++p) s -= a(i, p) * a(j, p);
      a(i, j) = s / d;
    }
  }
}

template <class T>
void laswp(MatrixView<T> a, std::span<const std::uint64_t> piv, std::size_t first, std::size_t last) {
  for (std::size_t k = first; k < last; ++k) {
    const std::size_t p = piv[k];
    if (p == k) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) std::swap(a(k, j), a(p, j));
  }
}

}  // namespace ref

template <class T>
void axpy_impl(Context& ctx, T alpha, std::span<const T> x, std::span<T> y) {
  if (x.size() != y.size()) mismatch("axpy", "x and y lengths differ");
  const std::array bufs{in(x), HostBuffer::of(y, Access::InOut)};
  const std::size_t n = x.size();
  ctx.run("axpy", bufs, LaunchLayout::covering(n), [&](std::span<const DeviceView> d) {
    auto dx = d[0].as<const T>(n);
    auto dy = d[1].as<T>(n);
    for (std::size_t i = 0; i < n; ++i) dy[i] += alpha * dx[i];
  });
  ctx.flops().add(2 * n);
}

template <class T>
Accum dot_partial_impl(Context& ctx, std::span<const T> x, std::span<const T> y, const char* name) {
  if (x.size() != y.size()) mismatch(name, "x and y lengths differ");
  double result[2] = {0, 0};
  const std::size_t n = x.size();
  const std::array bufs{in(x), in(y), HostBuffer::of(std::span<double>(result), Access::Out)};
  ctx.run(name, bufs, LaunchLayout::covering(n), [&](std::span<const DeviceView> d) {
    const Accum acc = ref::dot<T>(d[0].as<const T>(n), d[1].as<const T>(n));
    auto out = d[2].as<double>(2);
    out[0] = acc.hi;
    out[1] = acc.lo;
  });
  ctx.flops().add(2 * n);
  return {result[0], result[1]};
}

template <class T>
T dot_impl(Context& ctx, std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) mismatch("dot", "x and y lengths differ");
  T result{};
  const std::size_t n = x.size();
  std::span<T> out(&result, 1);
  const std::array bufs{in(x), in(y), HostBuffer::of(out, Access::Out)};
  ctx.run("dot", bufs, LaunchLayout::covering(n), [&](std::span<const DeviceView> d) {
    d[2].as<T>(1)[0] = ref::dot<T>(d[0].as<const T>(n), d[1].as<const T>(n)).template value<T>();
  });
  ctx.flops().add(2 * n);
  return result;
}

template <class T>
T nrm2_impl(Context& ctx, std::span<const T> x) {
  T result{};
  const std::size_t n = x.size();
  std::span<T> out(&result, 1);
  const std::array bufs{in(x), HostBuffer::of(out, Access::Out)};
  ctx.run("nrm2", bufs, LaunchLayout::covering(n), [&](std::span<const DeviceView> d) {
    auto dx = d[0].as<const T>(n);
    d[1].as<T>(1)[0] = std::sqrt(ref::dot<T>(dx, dx).template value<T>());
  });
  ctx.flops().add(2 * n);
  return result;
}

template <class T>
void scal_impl(Context& ctx, T alpha, std::span<T> x, bool divide) {
  const std::size_t n = x.size();
  const std::array bufs{HostBuffer::of(x, Access::InOut)};
  ctx.run(divide ? "rscal" : "scal", bufs, LaunchLayout::covering(n), [&](std::span<const DeviceView> d) {
    auto dx = d[0].as<T>(n);
    if (divide)
      for (auto& v : dx) v /= alpha;
    else
      for (auto& v : dx) v *= alpha;
  });
  ctx.flops().add(n);
}

template <class T>
void gemv_impl(Context& ctx, bool trans, T alpha, MatrixView<const T> a, std::span<const T> x, T beta,
               std::span<T> y) {
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t xn = trans ? m : n, yn = trans ? n : m;
  if (x.size() != xn || y.size() != yn) mismatch("gemv", "operand shapes do not conform");
  if (yn == 0) return;
  if (alpha == T(0) && beta == T(1)) return;
  const std::array bufs{in(a), in(x), HostBuffer::of(y, beta == T(0) ? Access::Out : Access::InOut)};
  ctx.run("gemv", bufs, LaunchLayout::covering(yn), [&](std::span<const DeviceView> d) {
    ref::gemv<T>(trans, alpha, d[0].as<const T>(m, n), d[1].as<const T>(xn), beta, d[2].as<T>(yn));
  });
  ctx.flops().add(2 * m * n + (beta != T(0) && beta != T(1) ? yn : 0));
}

template <class T>
void gemv_partial_impl(Context& ctx, bool trans, MatrixView<const T> a, std::span<const T> x, std::span<double> hi,
                       std::span<double> lo) {
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t xn = trans ? m : n, yn = trans ? n : m;
  if (x.size() != xn || hi.size() != yn || lo.size() != yn) mismatch("gemv_partial", "operand shapes do not conform");
  if (yn == 0) return;
  const std::array bufs{in(a), in(x), HostBuffer::of(hi, Access::Out), HostBuffer::of(lo, Access::Out)};
  ctx.run("gemv_partial", bufs, LaunchLayout::covering(yn), [&](std::span<const DeviceView> d) {
    std::vector<Accum> acc(yn);
    ref::gemv_sums<T>(trans, d[0].as<const T>(m, n), d[1].as<const T>(xn), acc);
    auto h = d[2].as<double>(yn), l = d[3].as<double>(yn);
    for (std::size_t i = 0; i < yn; ++i) {
      h[i] = acc[i].hi;
      l[i] = acc[i].lo;
    }
  });
  ctx.flops().add(2 * m * n);
}

template <class T>
void gemm_impl(Context& ctx, bool ta, bool tb, T alpha, MatrixView<const T> a, MatrixView<const T> b, T beta,
               MatrixView<T> c) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (k != kb || c.rows() != m || c.cols() != n) mismatch("gemm", "operand shapes do not conform");
  if (m == 0 || n == 0) return;
  const std::array bufs{in(a), in(b), HostBuffer::of(c, beta == T(0) ? Access::Out : Access::InOut)};
  ctx.run("gemm", bufs, LaunchLayout::covering(m * n), [&](std::span<const DeviceView> d) {
    ref::gemm<T>(ta, tb, alpha, d[0].as<const T>(a.rows(), a.cols()), d[1].as<const T>(b.rows(), b.cols()), beta,
                 d[2].as<T>(m, n));
  });
  ctx.flops().add(2 * m * n * k);
}

template <class T>
void syrk_impl(Context& ctx, T alpha, MatrixView<const T> a, T beta, MatrixView<T> c) {
  const std::size_t n = c.rows(), k = a.cols();
  if (c.cols() != n || a.rows() != n) mismatch("syrk_lower", "operand shapes do not conform");
  if (n == 0) return;
  // C travels whole; its strict upper part round-trips unchanged.
  const std::array bufs{in(a), HostBuffer::of(c, Access::InOut)};
  ctx.run("syrk_lower", bufs, LaunchLayout::covering(n * (n + 1) / 2), [&](std::span<const DeviceView> d) {
    ref::syrk_lower<T>(alpha, d[0].as<const T>(n, k), beta, d[1].as<T>(n, n));
  });
  ctx.flops().add(k * n * (n + 1));
}

template <class T>
void trsm_impl(Context& ctx, TriangleSpec s, T alpha, MatrixView<const T> a, MatrixView<T> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) mismatch("trsm", "triangular operand is not square");
  if ((s.side == Side::Left ? b.rows() : b.cols()) != n) mismatch("trsm", "right-hand side does not conform");
  if (b.empty()) return;
  if (!s.unit_diag)
    for (std::size_t k = 0; k < n; ++k)
      if (a(k, k) == T(0)) throw Error(ErrorKind::SingularPivot, "trsm: zero diagonal at " + std::to_string(k));
  const std::array bufs{in(a), HostBuffer::of(b, Access::InOut)};
  ctx.run("trsm", bufs, LaunchLayout::covering(b.rows() * b.cols()), [&](std::span<const DeviceView> d) {
    ref::trsm<T>(s, alpha, d[0].as<const T>(n, n), d[1].as<T>(b.rows(), b.cols()));
  });
  const std::size_t nrhs = s.side == Side::Left ? b.cols() : b.rows();
  ctx.flops().add(nrhs * (n * (n - 1) + (s.unit_diag ? 0 : n)) + (alpha != T(1) ? b.rows() * b.cols() : 0));
}

template <class T>
Pivots getf2_impl(Context& ctx, MatrixView<T> a) {
  const std::size_t m = a.rows(), n = a.cols();
  if (n == 0 || m < n) mismatch("getf2", "panel must satisfy m >= n >= 1");
  std::vector<std::uint64_t> piv(n);
  const std::array bufs{HostBuffer::of(a, Access::InOut), HostBuffer::of(std::span(piv), Access::Out)};
  ctx.run("getf2", bufs, LaunchLayout::covering(m * n), [&](std::span<const DeviceView> d) {
    ref::getf2<T>(d[0].as<T>(m, n), d[1].as<std::uint64_t>(n));
  });
  std::uint64_t flops = 0;
  for (std::size_t k = 0; k < n; ++k) flops += (m - k - 1) + 2 * (m - k - 1) * (n - k - 1);
  ctx.flops().add(flops);
  return Pivots(piv.begin(), piv.end());
}

template <class T>
void potf2_impl(Context& ctx, MatrixView<T> a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) mismatch("potf2", "matrix is not square");
  if (n == 0) return;
  const std::array bufs{HostBuffer::of(a, Access::InOut)};
  ctx.run("potf2", bufs, LaunchLayout::covering(n * (n + 1) / 2), [&](std::span<const DeviceView> d) {
    ref::potf2<T>(d[0].as<T>(n, n));
  });
  std::uint64_t flops = 0;
  for (std::size_t j = 0; j < n; ++j) flops += 2 * j + 1 + (n - j - 1) * (2 * j + 1);
  ctx.flops().add(flops);
}

template <class T>
void laswp_impl(Context& ctx, MatrixView<T> a, std::span<const std::size_t> pivots, std::size_t first,
                std::size_t last) {
  if (first > last || last > pivots.size()) mismatch("laswp", "pivot range out of bounds");
  for (std::size_t k = first; k < last; ++k)
    if (k >= a.rows() || pivots[k] >= a.rows()) mismatch("laswp", "pivot row outside the matrix");
  if (first == last || a.cols() == 0) return;
  std::vector<std::uint64_t> piv(pivots.begin(), pivots.end());
  const std::array bufs{HostBuffer::of(a, Access::InOut), in(std::span<const std::uint64_t>(piv))};
  ctx.run("laswp", bufs, LaunchLayout::covering(a.cols()), [&](std::span<const DeviceView> d) {
    ref::laswp<T>(d[0].as<T>(a.rows(), a.cols()), d[1].as<const std::uint64_t>(piv.size()), first, last);
  });
}

}  // namespace

#define GRIDSOLVE_DEFINE_KERNELS(T)                                                                          \
  void axpy(Context& ctx, T alpha, std::span<const T> x, std::span<T> y) { axpy_impl<T>(ctx, alpha, x, y); } \
  T dot(Context& ctx, std::span<const T> x, std::span<const T> y) { return dot_impl<T>(ctx, x, y); }         \
  T nrm2(Context& ctx, std::span<const T> x) { return nrm2_impl<T>(ctx, x); }                                \
  Accum dot_partial(Context& ctx, std::span<const T> x, std::span<const T> y) {                              \
    return dot_partial_impl<T>(ctx, x, y, "dot_partial");                                                    \
  }                                                                                                          \
  void scal(Context& ctx, T alpha, std::span<T> x) { scal_impl<T>(ctx, alpha, x, false); }                   \
  void rscal(Context& ctx, T alpha, std::span<T> x) { scal_impl<T>(ctx, alpha, x, true); }                   \
  void gemv(Context& ctx, bool transpose, T alpha, MatrixView<const T> a, std::span<const T> x, T beta,      \
            std::span<T> y) {                                                                                \
    gemv_impl<T>(ctx, transpose, alpha, a, x, beta, y);                                                      \
  }                                                                                                          \
  void gemv_partial(Context& ctx, bool transpose, MatrixView<const T> a, std::span<const T> x,               \
                    std::span<double> hi, std::span<double> lo) {                                            \
    gemv_partial_impl<T>(ctx, transpose, a, x, hi, lo);                                                      \
  }                                                                                                          \
  void gemm(Context& ctx, bool trans_a, bool trans_b, T alpha, MatrixView<const T> a, MatrixView<const T> b, \
            T beta, MatrixView<T> c) {                                                                       \
    gemm_impl<T>(ctx, trans_a, trans_b, alpha, a, b, beta, c);                                               \
  }                                                                                                          \
  void syrk_lower(Context& ctx, T alpha, MatrixView<const T> a, T beta, MatrixView<T> c) {                   \
    syrk_impl<T>(ctx, alpha, a, beta, c);                                                                    \
  }                                                                                                          \
  void trsm(Context& ctx, TriangleSpec spec, T alpha, MatrixView<const T> a, MatrixView<T> b) {              \
    trsm_impl<T>(ctx, spec, alpha, a, b);                                                                    \
  }                                                                                                          \
  Pivots getf2(Context& ctx, MatrixView<T> a) { return getf2_impl<T>(ctx, a); }                              \
  void potf2(Context& ctx, MatrixView<T> a) { potf2_impl<T>(ctx, a); }                                       \
  void laswp(Context& ctx, MatrixView<T> a, std::span<const std::size_t> pivots, std::size_t first,          \
             std::size_t last) {                                                                             \
    laswp_impl<T>(ctx, a, pivots, first, last);                                                              \
  }

GRIDSOLVE_DEFINE_KERNELS(float)
GRIDSOLVE_DEFINE_KERNELS(double)

}  // namespace gridsolve::kernels
