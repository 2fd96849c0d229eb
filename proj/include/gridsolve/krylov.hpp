#pragma once

// CG, restarted GMRES, BiCG and BiCGSTAB over an abstract operator.
//
// A solver is written once against a "space" that supplies the vector
// algebra (dot, norm, axpy, scal). SerialSpace works on Vector and a dense
// Matrix; DistSpace works on DistVector, where every rank runs the same loop
// and all cross-rank traffic happens inside apply and dot.
//
// Convergence is ||r|| / ||b|| <= tol. A zero right-hand side returns x = 0
// immediately. Non-convergence is reported in SolveReport::failure rather
// than thrown; call raise_if_failed() to turn it into an Error.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridsolve/core.hpp"
#include "gridsolve/distgrid.hpp"
#include "gridsolve/kernels.hpp"

namespace gridsolve {

template <class V>
struct LinearOperator {
  std::size_t dim = 0;
  /// y <- A x; y is already shaped like x.
  std::function<void(const V& x, V& y)> apply;
  /// y <- A^T x. Only BiCG needs it.
  std::function<void(const V& x, V& y)> apply_transpose;
};

struct KrylovConfig {
  double tol = 1e-8;
  /// Defaults to 10 n.
  std::optional<std::size_t> max_iters;
  /// GMRES cycle length.
  std::size_t restart = 30;
  /// Defaults to 100 epsilon of the working precision.
  std::optional<double> breakdown_eps;
};

template <class V>
struct KrylovResult {
  V x;
  SolveReport report;
};

/// Called with (iteration, current x) after every update of x.
template <class V>
using IterateObserver = std::function<void(std::size_t, const V&)>;

template <Scalar T>
class SerialSpace {
 public:
  using Scalar = T;
  using Vec = Vector<T>;

  explicit SerialSpace(Context& ctx) : ctx_(&ctx) {}

  Vec zeros_like(const Vec& v) const { return Vec(v.size()); }
  T dot(const Vec& x, const Vec& y) const { return kernels::dot(*ctx_, x.span(), y.span()); }
  T nrm2(const Vec& x) const { return kernels::nrm2(*ctx_, x.span()); }
  void axpy(T a, const Vec& x, Vec& y) const { kernels::axpy(*ctx_, a, x.span(), y.span()); }
  void scal(T a, Vec& x) const { kernels::scal(*ctx_, a, x.span()); }
  Context& context() const { return *ctx_; }

 private:
  Context* ctx_;
};

template <Scalar T>
class DistSpace {
 public:
  using Scalar = T;
  using Vec = DistVector<T>;

  explicit DistSpace(Context& ctx) : ctx_(&ctx) {}

  Vec zeros_like(const Vec& v) const { return Vec::zeros(v.desc); }
  T dot(const Vec& x, const Vec& y) const { return dist_dot(*ctx_, x, y); }
  T nrm2(const Vec& x) const { return dist_nrm2(*ctx_, x); }
  void axpy(T a, const Vec& x, Vec& y) const { kernels::axpy(*ctx_, a, x.local.span(), y.local.span()); }
  void scal(T a, Vec& x) const { kernels::scal(*ctx_, a, x.local.span()); }
  Context& context() const { return *ctx_; }

 private:
  Context* ctx_;
};

/// Operator backed by a dense matrix; `a` must outlive it.
template <Scalar T>
LinearOperator<Vector<T>> dense_operator(Context& ctx, const Matrix<T>& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "operator matrix is not square");
  LinearOperator<Vector<T>> op;
  op.dim = a.rows();
  op.apply = [&ctx, &a](const Vector<T>& x, Vector<T>& y) {
    kernels::gemv(ctx, false, T(1), a.view(), x.span(), T(0), y.span());
  };
  op.apply_transpose = [&ctx, &a](const Vector<T>& x, Vector<T>& y) {
    kernels::gemv(ctx, true, T(1), a.view(), x.span(), T(0), y.span());
  };
  return op;
}

/// Operator backed by a distributed matrix with mb == nb; `a` must outlive it.
template <Scalar T>
LinearOperator<DistVector<T>> dist_operator(Context& ctx, const DistMatrix<T>& a) {
  if (a.desc.g_rows() != a.desc.g_cols()) throw Error(ErrorKind::DimensionMismatch, "operator matrix is not square");
  if (a.desc.mb() != a.desc.nb())
    throw Error(ErrorKind::DescriptorMismatch, "distributed operator needs mb == nb");
  LinearOperator<DistVector<T>> op;
  op.dim = a.desc.g_rows();
  op.apply = [&ctx, &a](const DistVector<T>& x, DistVector<T>& y) { dist_matvec(ctx, a, x, y); };
  op.apply_transpose = [&ctx, &a](const DistVector<T>& x, DistVector<T>& y) {
    dist_transpose_matvec(ctx, a, x, y);
  };
  return op;
}

namespace detail {

template <class Space>
struct KrylovRun {
  using T = typename Space::Scalar;
  using V = typename Space::Vec;

  const Space& sp;
  const LinearOperator<V>& a;
  const IterateObserver<V>& observe;
  SolveReport report;
  double bnorm = 0;
  std::size_t max_iters = 0;
  T eps{};
  double tol = 0;

  KrylovRun(const Space& s, const LinearOperator<V>& op, const V& b, const V& x0, const KrylovConfig& cfg,
            const IterateObserver<V>& obs, const char* method)
      : sp(s), a(op), observe(obs) {
    report.method = method;
    if (!a.apply) throw Error(ErrorKind::DimensionMismatch, std::string(method) + ": operator has no apply");
    if (b.size() != a.dim || x0.size() != a.dim)
      throw Error(ErrorKind::DimensionMismatch, std::string(method) + ": vector length differs from the operator");
    if (!(cfg.tol > 0)) throw Error(ErrorKind::DimensionMismatch, std::string(method) + ": tol must be positive");
    tol = cfg.tol;
    max_iters = cfg.max_iters.value_or(10 * a.dim);
    eps = static_cast<T>(cfg.breakdown_eps.value_or(100.0 * double(epsilon<T>())));
    bnorm = double(sp.nrm2(b));
  }

  V residual(const V& b, const V& x) const {
    V ax = sp.zeros_like(b);
    a.apply(x, ax);
    V r = b;
    sp.axpy(T(-1), ax, r);
    return r;
  }

  /// Sets ||r|| / ||b|| and reports whether it meets the tolerance.
  bool check(double rnorm) {
    report.final_relres = rnorm / bnorm;
    return report.final_relres <= tol;
  }

  /// As check, and appends to the history: one entry per iteration.
  bool record(double rnorm) {
    const bool done = check(rnorm);
    report.residual_history.push_back(report.final_relres);
    return done;
  }

  void notify(const V& x) const {
    if (observe) observe(report.iterations, x);
  }

  KrylovResult<V> finish(V x, std::optional<ErrorKind> failure) {
    report.converged = !failure;
    report.breakdown = failure == ErrorKind::Breakdown;
    report.failure = failure;
    return {std::move(x), std::move(report)};
  }

  /// b == 0 means x = 0.
  KrylovResult<V> zero_rhs(const V& b) {
    report.final_relres = 0;
    return finish(sp.zeros_like(b), std::nullopt);
  }

  /// |num| at or below eps times its natural magnitude.
  bool vanishes(T num, T scale) const { return std::abs(num) <= eps * scale; }
};

}  // namespace detail

template <class Space>
KrylovResult<typename Space::Vec> cg(const Space& sp, const LinearOperator<typename Space::Vec>& a,
                                     const typename Space::Vec& b, typename Space::Vec x, const KrylovConfig& cfg = {},
                                     const IterateObserver<typename Space::Vec>& observe = {}) {
  using T = typename Space::Scalar;
  detail::KrylovRun<Space> run(sp, a, b, x, cfg, observe, "cg");
  if (run.bnorm == 0) return run.zero_rhs(b);

  auto r = run.residual(b, x);
  T rr = sp.dot(r, r);
  if (run.check(std::sqrt(double(rr)))) return run.finish(std::move(x), std::nullopt);
  auto p = r;
  auto ap = sp.zeros_like(b);
  while (run.report.iterations < run.max_iters) {
    a.apply(p, ap);
    const T pap = sp.dot(p, ap);
    if (pap <= run.eps * sp.nrm2(p) * sp.nrm2(ap)) return run.finish(std::move(x), ErrorKind::Breakdown);
    const T alpha = rr / pap;
    sp.axpy(alpha, p, x);
    sp.axpy(-alpha, ap, r);
    ++run.report.iterations;
    run.notify(x);
    const T rr_next = sp.dot(r, r);
    if (run.record(std::sqrt(double(rr_next)))) return run.finish(std::move(x), std::nullopt);
    const T beta = rr_next / rr;
    sp.scal(beta, p);
    sp.axpy(T(1), r, p);
    rr = rr_next;
  }
  return run.finish(std::move(x), ErrorKind::MaxIterations);
}

/// Shadow residual starts equal to r0.
template <class Space>
KrylovResult<typename Space::Vec> bicg(const Space& sp, const LinearOperator<typename Space::Vec>& a,
                                       const typename Space::Vec& b, typename Space::Vec x,
                                       const KrylovConfig& cfg = {},
                                       const IterateObserver<typename Space::Vec>& observe = {}) {
  using T = typename Space::Scalar;
  detail::KrylovRun<Space> run(sp, a, b, x, cfg, observe, "bicg");
  if (!a.apply_transpose) throw Error(ErrorKind::DimensionMismatch, "bicg: operator has no transpose");
  if (run.bnorm == 0) return run.zero_rhs(b);

  auto r = run.residual(b, x);
  T rho = sp.dot(r, r);
  if (run.check(std::sqrt(double(rho)))) return run.finish(std::move(x), std::nullopt);
  auto rt = r, p = r, pt = r;
  auto ap = sp.zeros_like(b), atpt = sp.zeros_like(b);
  while (run.report.iterations < run.max_iters) {
    if (run.vanishes(rho, sp.nrm2(rt) * sp.nrm2(r))) return run.finish(std::move(x), ErrorKind::Breakdown);
    a.apply(p, ap);
    a.apply_transpose(pt, atpt);
    const T sigma = sp.dot(pt, ap);
    if (run.vanishes(sigma, sp.nrm2(pt) * sp.nrm2(ap))) return run.finish(std::move(x), ErrorKind::Breakdown);
    const T alpha = rho / sigma;
    sp.axpy(alpha, p, x);
    sp.axpy(-alpha, ap, r);
    sp.axpy(-alpha, atpt, rt);
    ++run.report.iterations;
    run.notify(x);
    const T rho_next = sp.dot(rt, r);
    if (run.record(double(sp.nrm2(r)))) return run.finish(std::move(x), std::nullopt);
    const T beta = rho_next / rho;
    sp.scal(beta, p);
    sp.axpy(T(1), r, p);
    sp.scal(beta, pt);
    sp.axpy(T(1), rt, pt);
    rho = rho_next;
  }
  return run.finish(std::move(x), ErrorKind::MaxIterations);
}

/// Each half step (one operator application) counts as an iteration and
/// records its residual.
template <class Space>
KrylovResult<typename Space::Vec> bicgstab(const Space& sp, const LinearOperator<typename Space::Vec>& a,
                                           const typename Space::Vec& b, typename Space::Vec x,
                                           const KrylovConfig& cfg = {},
                                           const IterateObserver<typename Space::Vec>& observe = {}) {
  using T = typename Space::Scalar;
  detail::KrylovRun<Space> run(sp, a, b, x, cfg, observe, "bicgstab");
  if (run.bnorm == 0) return run.zero_rhs(b);

  auto r = run.residual(b, x);
  if (run.check(double(sp.nrm2(r)))) return run.finish(std::move(x), std::nullopt);
  const auto rhat = r;
  const T rhat_norm = sp.nrm2(rhat);
  T rho = 1, alpha = 1, omega = 1;
  auto p = sp.zeros_like(b), v = sp.zeros_like(b), t = sp.zeros_like(b);
  while (run.report.iterations < run.max_iters) {
    const T rho_next = sp.dot(rhat, r);
    if (run.vanishes(rho_next, rhat_norm * sp.nrm2(r))) return run.finish(std::move(x), ErrorKind::Breakdown);
    const T beta = (rho_next / rho) * (alpha / omega);
    // p <- r + beta (p - omega v)
    sp.axpy(-omega, v, p);
    sp.scal(beta, p);
    sp.axpy(T(1), r, p);
    a.apply(p, v);
    const T rv = sp.dot(rhat, v);
    if (run.vanishes(rv, rhat_norm * sp.nrm2(v))) return run.finish(std::move(x), ErrorKind::Breakdown);
    alpha = rho_next / rv;
    rho = rho_next;

    // First half: s = r - alpha v, kept in r.
    sp.axpy(alpha, p, x);
    sp.axpy(-alpha, v, r);
    ++run.report.iterations;
    run.notify(x);
    const T snorm = sp.nrm2(r);
    if (run.record(double(snorm))) return run.finish(std::move(x), std::nullopt);
    if (run.report.iterations >= run.max_iters) break;

    // Stabilizing half.
    a.apply(r, t);
    const T tt = sp.dot(t, t);
    const T ts = sp.dot(t, r);
    if (tt == T(0) || run.vanishes(ts, std::sqrt(tt) * snorm)) return run.finish(std::move(x), ErrorKind::Breakdown);
    omega = ts / tt;
    sp.axpy(omega, r, x);
    sp.axpy(-omega, t, r);
    ++run.report.iterations;
    run.notify(x);
    if (run.record(double(sp.nrm2(r)))) return run.finish(std::move(x), std::nullopt);
  }
  return run.finish(std::move(x), ErrorKind::MaxIterations);
}

/// GMRES(m): modified Gram-Schmidt Arnoldi with Givens rotations. Each inner
/// step counts as an iteration and records the rotated (implicit) residual;
/// the true residual is recomputed at every restart and decides convergence.
template <class Space>
KrylovResult<typename Space::Vec> gmres(const Space& sp, const LinearOperator<typename Space::Vec>& a,
                                        const typename Space::Vec& b, typename Space::Vec x,
                                        const KrylovConfig& cfg = {},
                                        const IterateObserver<typename Space::Vec>& observe = {}) {
  using T = typename Space::Scalar;
  using V = typename Space::Vec;
  detail::KrylovRun<Space> run(sp, a, b, x, cfg, observe, "gmres");
  if (cfg.restart == 0) throw Error(ErrorKind::DimensionMismatch, "gmres: restart length must be positive");
  if (run.bnorm == 0) return run.zero_rhs(b);
  const std::size_t m = cfg.restart;

  auto r = run.residual(b, x);
  T beta = sp.nrm2(r);
  if (run.check(double(beta))) return run.finish(std::move(x), std::nullopt);

  std::vector<V> basis;
  std::vector<T> h((m + 1) * m), cs(m), sn(m), g(m + 1);
  auto H = [&](std::size_t i, std::size_t j) -> T& { return h[i + j * (m + 1)]; };

  while (run.report.iterations < run.max_iters) {
    basis.assign(1, r);
    sp.scal(T(1) / beta, basis[0]);
    std::fill(g.begin(), g.end(), T(0));
    g[0] = beta;
    std::size_t k = 0;
    bool lucky = false;
    while (k < m && run.report.iterations < run.max_iters) {
      const std::size_t j = k;
      V w = sp.zeros_like(b);
      a.apply(basis[j], w);
      const T wnorm0 = sp.nrm2(w);
      for (std::size_t i = 0; i <= j; ++i) {
        H(i, j) = sp.dot(w, basis[i]);
        sp.axpy(-H(i, j), basis[i], w);
      }
      H(j + 1, j) = sp.nrm2(w);
      for (std::size_t i = 0; i < j; ++i) {
        const T t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const T h1 = H(j, j), h2 = H(j + 1, j);
      if (h2 == T(0)) {
        cs[j] = 1;
        sn[j] = 0;
      } else if (std::abs(h2) > std::abs(h1)) {
        const T t = h1 / h2;
        sn[j] = T(1) / std::sqrt(T(1) + t * t);
        cs[j] = t * sn[j];
      } else {
        const T t = h2 / h1;
        cs[j] = T(1) / std::sqrt(T(1) + t * t);
        sn[j] = cs[j] * t;
      }
      const T hnext = H(j + 1, j);
      H(j, j) = cs[j] * h1 + sn[j] * h2;
      H(j + 1, j) = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++k;
      ++run.report.iterations;
      const bool small = run.record(double(std::abs(g[j + 1])));
      lucky = hnext <= run.eps * wnorm0;
      if (small || lucky) break;
      basis.push_back(std::move(w));
      sp.scal(T(1) / hnext, basis.back());
    }

    // x <- x + V y with H y = g.
    std::vector<T> y(k);
    for (std::size_t i = k; i-- > 0;) {
      T s = g[i];
      for (std::size_t l = i + 1; l < k; ++l) s -= H(i, l) * y[l];
      y[i] = s / H(i, i);
    }
    for (std::size_t i = 0; i < k; ++i) sp.axpy(y[i], basis[i], x);
    run.notify(x);

    r = run.residual(b, x);
    beta = sp.nrm2(r);
    if (run.check(double(beta))) return run.finish(std::move(x), std::nullopt);
    if (lucky) return run.finish(std::move(x), ErrorKind::Breakdown);
  }
  return run.finish(std::move(x), ErrorKind::MaxIterations);
}

}  // namespace gridsolve
