#include <doctest.h>

#include <cmath>
#include <limits>

#include "gridsolve/kernels.hpp"
#include "oracles.hpp"

using namespace gridsolve;
using namespace gridsolve::kernels;

namespace {

const double nan_v = std::numeric_limits<double>::quiet_NaN();

// Fills the padding rows so that any stray write shows up.
void poison_padding(Matrix<double>& a, double v = -999.0) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = a.rows(); i < a.lead(); ++i) a.storage()[i + j * a.lead()] = v;
}

bool padding_intact(const Matrix<double>& a, double v = -999.0) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = a.rows(); i < a.lead(); ++i)
      if (a.storage()[i + j * a.lead()] != v) return false;
  return true;
}

double tol_for(std::size_t k) { return 4.0 * double(k + 1) * std::numeric_limits<double>::epsilon(); }

}  // namespace

TEST_CASE("axpy dot nrm2 scal rscal") {
  Context ctx;
  Vector<double> x{1, 2, 3}, y{4, 5, 6};
  axpy(ctx, 2.0, x.span(), y.span());
  CHECK(y == Vector<double>{6, 9, 12});
  CHECK(dot(ctx, x.span(), y.span()) == 60);
  CHECK(nrm2(ctx, Vector<double>{3, 4}.span()) == 5);
  scal(ctx, 0.5, y.span());
  CHECK(y == Vector<double>{3, 4.5, 6});
  rscal(ctx, 3.0, y.span());
  CHECK(y == Vector<double>{1, 1.5, 2});
  CHECK(ctx.flops().value() == 6 + 6 + 4 + 3 + 3);
  Vector<double> shorter(2);
  CHECK_THROWS_AS(axpy(ctx, 1.0, x.span(), shorter.span()), Error);
}

TEST_CASE("gemv matches the oracle in both orientations and respects padding") {
  Context ctx;
  for (bool trans : {false, true}) {
    auto a = oracle::random_matrix(7, 5, 11, -1, 1, 9);
    poison_padding(a);
    const auto x = oracle::random_vector(trans ? 7 : 5, 12);
    const std::size_t yn = trans ? 5 : 7;
    Vector<double> y(yn, nan_v);  // beta == 0 must not read y
    gemv(ctx, trans, 2.0, a.view(), x.span(), 0.0, y.span());
    Matrix<double> xa(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) xa(i, 0) = x[i];
    const auto ref = oracle::matmul(a, trans, xa, false);
    for (std::size_t i = 0; i < yn; ++i) CHECK(y[i] == doctest::Approx(2 * ref(i, 0)).epsilon(tol_for(7)));
    CHECK(padding_intact(a));
  }
}

TEST_CASE("split sums merge to the whole-vector result") {
  Context ctx;
  for (std::size_t n : {1u, 17u, 300u}) {
    // Wide dynamic range so naive regrouping would change the rounding.
    auto x = oracle::random_vector(n, 40 + n, -1e8, 1e8);
    const auto y = oracle::random_vector(n, 50 + n);
    for (std::size_t i = 0; i < n; i += 3) x[i] *= 1e-9;
    const double whole = dot(ctx, x.span(), y.span());
    for (std::size_t cut : {std::size_t(0), n / 3, n / 2, n}) {
      Accum a = dot_partial(ctx, x.span().subspan(0, cut), y.span().subspan(0, cut));
      a.merge(dot_partial(ctx, x.span().subspan(cut), y.span().subspan(cut)));
      CHECK(a.value<double>() == whole);
    }
  }

  const auto a = oracle::random_matrix(9, 6, 3, -1, 1, 11);
  for (bool trans : {false, true}) {
    const auto x = oracle::random_vector(trans ? 9 : 6, 4);
    const std::size_t yn = trans ? 6 : 9;
    Vector<double> y(yn);
    gemv(ctx, trans, 1.0, a.view(), x.span(), 0.0, y.span());
    // Split the summed dimension in two and merge.
    const std::size_t k = trans ? 9 : 6, cut = k / 2;
    std::vector<double> h1(yn), l1(yn), h2(yn), l2(yn);
    const auto left = trans ? a.view().sub(0, 0, cut, 6) : a.view().sub(0, 0, 9, cut);
    const auto right = trans ? a.view().sub(cut, 0, k - cut, 6) : a.view().sub(0, cut, 9, k - cut);
    ctx.flops().reset();
    gemv_partial(ctx, trans, left, x.span().subspan(0, cut), h1, l1);
    gemv_partial(ctx, trans, right, x.span().subspan(cut), h2, l2);
    CHECK(ctx.flops().value() == 2 * 9 * 6);
    for (std::size_t i = 0; i < yn; ++i) {
      Accum acc{h1[i], l1[i]};
      acc.merge({h2[i], l2[i]});
      CHECK(acc.value<double>() == y[i]);
    }
  }
  std::vector<double> h(3), l(3);
  CHECK_THROWS_AS(gemv_partial(ctx, false, a.view(), Vector<double>(6).span(), h, l), Error);
  CHECK_THROWS_AS(dot_partial(ctx, Vector<double>(2).span(), Vector<double>(3).span()), Error);
}

TEST_CASE("gemv flop count") {
  Context ctx;
  const auto a = oracle::random_matrix(6, 4, 1);
  Vector<double> x(4, 1.0), y(6, 1.0);
  gemv(ctx, false, 1.0, a.view(), x.span(), 1.0, y.span());
  CHECK(ctx.flops().value() == 2 * 6 * 4);
  ctx.flops().reset();
  gemv(ctx, false, 1.0, a.view(), x.span(), 3.0, y.span());
  CHECK(ctx.flops().value() == 2 * 6 * 4 + 6);
}

TEST_CASE("gemm all transpose combinations against the oracle") {
  Context ctx;
  const std::size_t m = 6, n = 5, k = 4;
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      auto a = ta ? oracle::random_matrix(k, m, 3, -1, 1, k + 2) : oracle::random_matrix(m, k, 3, -1, 1, m + 2);
      auto b = tb ? oracle::random_matrix(n, k, 4) : oracle::random_matrix(k, n, 4);
      Matrix<double> c(m, n, m + 3);
      auto c0 = oracle::random_matrix(m, n, 5);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) c(i, j) = c0(i, j);
      poison_padding(c);
      ctx.flops().reset();
      gemm(ctx, ta, tb, -1.5, a.view(), b.view(), 0.5, c.view());
      CHECK(ctx.flops().value() == 2 * m * n * k);
      const auto ab = oracle::matmul(a, ta, b, tb);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i)
          CHECK(c(i, j) == doctest::Approx(-1.5 * ab(i, j) + 0.5 * c0(i, j)).epsilon(tol_for(k)));
      CHECK(padding_intact(c));
    }
}

TEST_CASE("gemm with beta 0 ignores NaN in C; shape errors throw") {
  Context ctx;
  const auto a = oracle::random_matrix(3, 2, 1), b = oracle::random_matrix(2, 3, 2);
  Matrix<double> c(3, 3);
  for (auto& v : c.storage()) v = nan_v;
  gemm(ctx, false, false, 1.0, a.view(), b.view(), 0.0, c.view());
  for (double v : c.storage()) CHECK(std::isfinite(v));
  Matrix<double> wrong(3, 2);
  CHECK_THROWS_AS(gemm(ctx, false, false, 1.0, a.view(), b.view(), 0.0, wrong.view()), Error);
}

TEST_CASE("syrk_lower updates only the lower triangle") {
  Context ctx;
  const auto a = oracle::random_matrix(5, 3, 8);
  Matrix<double> c(5, 5);
  for (auto& v : c.storage()) v = 7;
  syrk_lower(ctx, -1.0, a.view(), 1.0, c.view());
  const auto aat = oracle::matmul(a, false, a, true);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 5; ++i) {
      if (i >= j) CHECK(c(i, j) == doctest::Approx(7 - aat(i, j)).epsilon(tol_for(3)));
      else CHECK(c(i, j) == 7);
    }
  CHECK(ctx.flops().value() == 3 * 5 * 6);
}

TEST_CASE("trsm solves every side/uplo/transpose/diag combination") {
  Context ctx;
  const std::size_t n = 6, nrhs = 3;
  for (Side side : {Side::Left, Side::Right})
    for (Uplo uplo : {Uplo::Lower, Uplo::Upper})
      for (bool trans : {false, true})
        for (bool unit : {false, true}) {
          auto t = oracle::random_matrix(n, n, 21, -0.5, 0.5);
          for (std::size_t i = 0; i < n; ++i) t(i, i) = 2.0 + double(i) / 4;
          // Triangle actually used, with the implied unit diagonal.
          Matrix<double> tri(n, n);
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
              const bool in = uplo == Uplo::Lower ? i >= j : i <= j;
              tri(i, j) = i == j ? (unit ? 1.0 : t(i, j)) : (in ? t(i, j) : 0.0);
            }
          auto b = side == Side::Left ? oracle::random_matrix(n, nrhs, 22) : oracle::random_matrix(nrhs, n, 22);
          const auto b0 = b;
          trsm(ctx, {side, uplo, unit, trans}, 2.0, t.view(), b.view());
          // op(T) X = 2 B  or  X op(T) = 2 B
          const auto back = side == Side::Left ? oracle::matmul(tri, trans, b, false) : oracle::matmul(b, false, tri, trans);
          for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t i = 0; i < b.rows(); ++i) CHECK(back(i, j) == doctest::Approx(2 * b0(i, j)).epsilon(1e-12));
        }
}

TEST_CASE("trsm flop count and singular diagonal") {
  Context ctx;
  auto t = Matrix<double>::identity(4);
  Matrix<double> b(4, 2);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t i = 0; i < 4; ++i) b(i, j) = 1.0;
  trsm(ctx, {Side::Left, Uplo::Lower, false, false}, 1.0, t.view(), b.view());
  CHECK(ctx.flops().value() == 2 * (4 * 3 + 4));
  t(2, 2) = 0;
  try {
    trsm(ctx, {Side::Left, Uplo::Upper, false, false}, 1.0, t.view(), b.view());
    FAIL("expected SingularPivot");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularPivot);
  }
  // A unit diagonal is implied, so a stored zero does not matter.
  CHECK_NOTHROW(trsm(ctx, {Side::Left, Uplo::Upper, true, false}, 1.0, t.view(), b.view()));
}

TEST_CASE("getf2 picks the largest pivot and breaks ties toward the smaller row") {
  Context ctx;
  Matrix<double> a(3, 2);
  a(0, 0) = 1;
  a(1, 0) = -4;
  a(2, 0) = 4;
  a(0, 1) = 2;
  a(1, 1) = 1;
  a(2, 1) = 3;
  const auto piv = getf2(ctx, a.view());
  CHECK(piv[0] == 1);
  CHECK(a(0, 0) == -4);
  // Column 1 after the first step is (1, 2.25, 4), so rows 1 and 2 swap
  // next and carry their multipliers with them.
  CHECK(piv[1] == 2);
  CHECK(a(1, 0) == -1);
  CHECK(a(2, 0) == -0.25);
  CHECK(a(1, 1) == 4);
  CHECK(a(2, 1) == 2.25 / 4);
}

TEST_CASE("getf2 reconstruction, flop count and singular column") {
  Context ctx;
  const std::size_t n = 24;
  const auto a0 = oracle::random_matrix(n, n, 5);
  auto a = a0;
  const auto piv = getf2(ctx, a.view());
  CHECK(oracle::lu_backward_error(a0, a, piv) <= 50);
  std::uint64_t expect = 0;
  for (std::size_t k = 0; k < n; ++k) expect += (n - k - 1) + 2 * (n - k - 1) * (n - k - 1);
  CHECK(ctx.flops().value() == expect);

  Matrix<double> s(3, 3);
  s(0, 0) = 1;
  s(1, 1) = 1;
  try {
    (void)getf2(ctx, s.view());
    FAIL("expected SingularPivot");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularPivot);
  }
}

TEST_CASE("potf2 reads only the lower triangle and rejects non-SPD input") {
  Context ctx;
  const auto a0 = oracle::spd_matrix(12, 3);
  auto a = a0;
  for (std::size_t j = 1; j < 12; ++j)
    for (std::size_t i = 0; i < j; ++i) a(i, j) = nan_v;
  potf2(ctx, a.view());
  CHECK(oracle::chol_backward_error(a0, a) <= 50);
  CHECK(std::isnan(a(0, 5)));

  Matrix<double> bad = Matrix<double>::identity(3);
  bad(1, 1) = -1;
  try {
    potf2(ctx, bad.view());
    FAIL("expected NotSpd");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSpd);
  }
}

TEST_CASE("laswp applies the swap sequence in order over a range") {
  Context ctx;
  Matrix<double> a(4, 2);
  for (std::size_t i = 0; i < 4; ++i) a(i, 0) = a(i, 1) = double(i);
  const Pivots piv{2, 3, 2, 3};
  laswp(ctx, a.view(), piv, 0, 2);
  // swap(0,2) then swap(1,3)
  CHECK(a(0, 0) == 2);
  CHECK(a(1, 1) == 3);
  CHECK(a(2, 0) == 0);
  CHECK(a(3, 1) == 1);
  CHECK(ctx.flops().value() == 0);
  CHECK_THROWS_AS(laswp(ctx, a.view(), piv, 0, 5), Error);
}

TEST_CASE("single precision kernels") {
  Context ctx;
  auto a = oracle::random_matrix<float>(8, 8, 2);
  for (std::size_t i = 0; i < 8; ++i) a(i, i) += 8;
  const auto a0 = a;
  const auto piv = getf2(ctx, a.view());
  CHECK(oracle::lu_backward_error(a0, a, piv) <= 50);
}

TEST_CASE("documented small examples") {
  Context ctx;
  {
    Vector<double> y{1, 2};
    axpy(ctx, 0.0, Vector<double>{7, 7}.span(), y.span());
    CHECK(y == Vector<double>{1, 2});
    Vector<double> z{0, 5, 1};
    axpy(ctx, 2.0, Vector<double>{1, -1, 3}.span(), z.span());
    CHECK(z == Vector<double>{2, 3, 7});
  }
  CHECK(dot(ctx, Vector<double>{1, 0}.span(), Vector<double>{0, 1}.span()) == 0);
  CHECK(dot(ctx, Vector<double>{1, 2, 3}.span(), Vector<double>{4, 5, 6}.span()) == 32);
  CHECK(nrm2(ctx, Vector<double>{0, 0, 0}.span()) == 0);
  CHECK(nrm2(ctx, Vector<double>{-2.5}.span()) == 2.5);
  {
    Matrix<double> a(2, 2);
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = 3;
    a(1, 1) = 4;
    Vector<double> y(2);
    gemv(ctx, false, 1.0, a.view(), Vector<double>{1, 1}.span(), 0.0, y.span());
    CHECK(y == Vector<double>{3, 7});
    Matrix<double> b(2, 2), c(2, 2);
    b(0, 0) = 5;
    b(0, 1) = 6;
    b(1, 0) = 7;
    b(1, 1) = 8;
    gemm(ctx, false, false, 1.0, a.view(), b.view(), 0.0, c.view());
    CHECK(c(0, 0) == 19);
    CHECK(c(0, 1) == 22);
    CHECK(c(1, 0) == 43);
    CHECK(c(1, 1) == 50);
    gemm(ctx, false, false, 0.0, a.view(), b.view(), 0.0, c.view());
    CHECK(c == Matrix<double>(2, 2));
  }
  {
    Matrix<double> d(2, 2);
    d(0, 0) = 2;
    d(1, 1) = 4;
    Vector<double> b{2, 8};
    trsm(ctx, {}, 1.0, d.view(), b.as_matrix());
    CHECK(b == Vector<double>{1, 2});
    Matrix<double> l = Matrix<double>::identity(2);
    l(1, 0) = 2;
    Vector<double> c{1, 5};
    trsm(ctx, {Side::Left, Uplo::Lower, true, false}, 1.0, l.view(), c.as_matrix());
    CHECK(c == Vector<double>{1, 3});
  }
  {
    Matrix<double> a(2, 2);
    a(0, 1) = 1;
    a(1, 0) = 1;
    const auto piv = getf2(ctx, a.view());
    CHECK(piv == Pivots{1, 1});
    CHECK(a == Matrix<double>::identity(2));
    auto i2 = Matrix<double>::identity(2);
    CHECK(getf2(ctx, i2.view()) == Pivots{0, 1});
  }
  {
    Matrix<double> a(2, 2);
    a(0, 0) = 4;
    a(1, 0) = 2;
    a(0, 1) = 2;
    a(1, 1) = 5;
    potf2(ctx, a.view());
    CHECK(a(0, 0) == 2);
    CHECK(a(1, 0) == 1);
    CHECK(a(1, 1) == 2);
    Matrix<double> d(2, 2);
    d(0, 0) = 4;
    d(1, 1) = 9;
    potf2(ctx, d.view());
    CHECK(d(0, 0) == 2);
    CHECK(d(1, 1) == 3);
  }
}

TEST_CASE("random 4x4 getf2 meets the tight reconstruction bound") {
  Context ctx;
  const auto a0 = oracle::random_matrix(4, 4, 404);
  auto a = a0;
  const auto piv = getf2(ctx, a.view());
  // lu_backward_error is normalised by n eps, so 10 here means 10 n eps.
  CHECK(oracle::lu_backward_error(a0, a, piv) <= 10);
}

TEST_CASE("laswp twice restores the matrix") {
  Context ctx;
  const auto a0 = oracle::random_matrix(4, 3, 7);
  auto a = a0;
  // Disjoint transpositions, as produced by a pivot list whose swaps do not overlap.
  const Pivots piv{2, 3, 2, 3};
  laswp(ctx, a.view(), piv, 0, 4);
  CHECK_FALSE(a == a0);
  laswp(ctx, a.view(), piv, 0, 4);
  CHECK(a == a0);
  auto b = oracle::random_matrix(2, 3, 8);
  const auto b0 = b;
  laswp(ctx, b.view(), Pivots{0, 1}, 0, 2);
  CHECK(b == b0);
}

TEST_CASE("kernels agree with the scalar oracle within 8 eps scale up to n = 64") {
  Context ctx;
  for (std::size_t n : {1u, 2u, 17u, 64u}) {
    const auto a = oracle::random_matrix(n, n, 100 + n), b = oracle::random_matrix(n, n, 200 + n);
    Matrix<double> c(n, n);
    gemm(ctx, false, false, 1.0, a.view(), b.view(), 0.0, c.view());
    const auto ref = oracle::matmul(a, false, b, false);
    // Operand magnitude scale: sum of |a||b| over the inner index is at most n.
    CHECK(oracle::max_abs_diff(c, ref) <= 8 * std::numeric_limits<double>::epsilon() * double(n));
  }
}

TEST_CASE("gemm associativity sanity at 16x16") {
  Context ctx;
  const auto a = oracle::random_matrix(16, 16, 1), b = oracle::random_matrix(16, 16, 2);
  const auto x = oracle::random_vector(16, 3);
  Matrix<double> ab(16, 16);
  gemm(ctx, false, false, 1.0, a.view(), b.view(), 0.0, ab.view());
  Vector<double> lhs(16), bx(16), rhs(16);
  gemv(ctx, false, 1.0, ab.view(), x.span(), 0.0, lhs.span());
  gemv(ctx, false, 1.0, b.view(), x.span(), 0.0, bx.span());
  gemv(ctx, false, 1.0, a.view(), bx.span(), 0.0, rhs.span());
  const double bound = 32 * std::numeric_limits<double>::epsilon() * double(oracle::frobenius(a) * oracle::frobenius(b)) *
                       double(oracle::norm2(x.values()));
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::fabs(lhs[i] - rhs[i]) <= bound);
}

TEST_CASE("getf2 flop count tracks two thirds n cubed") {
  for (std::size_t n : {128u, 256u}) {
    Context ctx;
    auto a = oracle::random_matrix(n, n, n);
    (void)getf2(ctx, a.view());
    const double ratio = double(ctx.flops().value()) / (2.0 / 3.0 * double(n) * n * n);
    CHECK(ratio >= 0.95);
    CHECK(ratio <= 1.05);
  }
}
