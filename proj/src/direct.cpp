#include "gridsolve/direct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace gridsolve {

using kernels::Side;
using kernels::TriangleSpec;
using kernels::Uplo;

namespace {

[[noreturn]] void mismatch(const std::string& what) { throw Error(ErrorKind::DimensionMismatch, what); }

template <Scalar T>
MatrixView<T> column(std::vector<T>& v, std::size_t off, std::size_t len) {
  return {v.data() + off, len, 1, std::max<std::size_t>(len, 1)};
}

template <Scalar T>
void require_square(const Matrix<T>& a, std::size_t nb, const char* who) {
  if (a.rows() != a.cols()) mismatch(std::string(who) + ": matrix is not square");
  if (nb == 0) mismatch(std::string(who) + ": block size must be positive");
}

void require_dist_square(const BlockCyclicDesc& d, std::size_t lr, std::size_t lc, const char* who) {
  if (d.g_rows() != d.g_cols()) mismatch(std::string(who) + ": matrix is not square");
  if (d.mb() != d.nb()) throw Error(ErrorKind::DescriptorMismatch, std::string(who) + ": needs mb == nb");
  if (lr != d.local_rows() || lc != d.local_cols())
    throw Error(ErrorKind::DescriptorMismatch, std::string(who) + ": local block does not match the descriptor");
}

// One status byte followed by a payload, broadcast so every rank fails together.
wire::Bytes with_status(bool ok, const wire::Bytes& body) {
  wire::Bytes out;
  out.reserve(body.size() + 1);
  out.push_back(std::byte(ok ? 1 : 0));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

bool status_of(const wire::Bytes& b) { return !b.empty() && b[0] == std::byte(1); }

std::span<const std::byte> body_of(const wire::Bytes& b) { return std::span<const std::byte>(b).subspan(1); }

struct ColRange {
  std::size_t begin, end;
};

// Exchanges global rows g1 and g2 over the given local column ranges. Ranks
// of one grid column talk to each other only.
template <Scalar T>
void swap_global_rows(DistMatrix<T>& a, std::size_t g1, std::size_t g2, std::span<const ColRange> cols) {
  const BlockCyclicDesc& d = a.desc;
  const ProcGrid& grid = d.grid();
  const std::size_t o1 = d.row_owner(g1), o2 = d.row_owner(g2);
  if (o1 == o2) {
    if (grid.my_row() != o1) return;
    const std::size_t l1 = d.local_row_index(g1), l2 = d.local_row_index(g2);
    for (const auto& c : cols)
      for (std::size_t j = c.begin; j < c.end; ++j) std::swap(a.local(l1, j), a.local(l2, j));
    return;
  }
  if (grid.my_row() != o1 && grid.my_row() != o2) return;
  const std::size_t mine = grid.my_row() == o1 ? g1 : g2;
  const std::size_t peer = grid.my_row() == o1 ? o2 : o1;
  const std::size_t lr = d.local_row_index(mine);
  std::vector<T> row;
  for (const auto& c : cols)
    for (std::size_t j = c.begin; j < c.end; ++j) row.push_back(a.local(lr, j));
  Comm& comm = grid.comm();
  const RankId other = grid.rank_at(peer, grid.my_col());
  comm.send(other, detail::kRowSwapTag, wire::encode<T>(std::span<const T>(row)));
  const auto theirs = wire::decode<T>(comm.recv(other, detail::kRowSwapTag));
  if (theirs.size() != row.size()) throw Error(ErrorKind::CollectiveMisuse, "row swap length mismatch");
  std::size_t k = 0;
  for (const auto& c : cols)
    for (std::size_t j = c.begin; j < c.end; ++j) a.local(lr, j) = theirs[k++];
}

// Panel factorization shared by the ranks of the panel's grid column. Returns
// the global pivot rows, or the failing step.
template <Scalar T>
std::optional<std::size_t> factor_panel_cooperative(Context& ctx, DistMatrix<T>& a, std::size_t k0, std::size_t kb,
                                                    std::vector<std::uint64_t>& piv) {
  const BlockCyclicDesc& d = a.desc;
  const ProcGrid& grid = d.grid();
  Comm& comm = grid.comm();
  Matrix<T>& loc = a.local;
  const std::size_t lc0 = d.local_col_index(k0);
  const ColRange panel[] = {{lc0, lc0 + kb}};

  for (std::size_t j = 0; j < kb; ++j) {
    const std::size_t gj = k0 + j;
    ValueLoc<T> best{T(0), std::numeric_limits<std::uint64_t>::max()};
    T best_abs = T(0);
    for (std::size_t lr = d.local_rows_below(gj); lr < loc.rows(); ++lr) {
      const T v = loc(lr, lc0 + j);
      if (best.index == std::numeric_limits<std::uint64_t>::max() || std::abs(v) > best_abs) {
        best = {v, d.global_row_index(lr)};
        best_abs = std::abs(v);
      }
    }
    const ValueLoc<T> winner = comm.allreduce(grid.col_group(), ReduceOp::MaxAbsLoc, best);
    if (winner.value == T(0)) return j;
    piv[j] = winner.index;
    if (winner.index != gj) swap_global_rows(a, gj, winner.index, panel);

    // The pivot row from column j on.
    const std::size_t owner = d.row_owner(gj);
    wire::Bytes seg;
    if (grid.my_row() == owner) {
      std::vector<T> r(kb - j);
      const std::size_t lr = d.local_row_index(gj);
      for (std::size_t c = j; c < kb; ++c) r[c - j] = loc(lr, lc0 + c);
      seg = wire::encode<T>(std::span<const T>(r));
    }
    seg = comm.broadcast(grid.col_group(), grid.col_group().member(owner), std::move(seg));
    const std::vector<T> urow = wire::decode<T>(seg);

    const std::size_t lrb = d.local_rows_below(gj + 1);
    const std::size_t mr = loc.rows() - lrb;
    if (mr == 0) continue;
    kernels::rscal(ctx, urow[0], loc.view().col(lc0 + j).subspan(lrb, mr));
    if (j + 1 < kb)
      kernels::gemm(ctx, false, false, T(-1), MatrixView<const T>(loc.sub(lrb, lc0 + j, mr, 1)),
                    MatrixView<const T>(urow.data() + 1, 1, kb - j - 1, 1), T(1),
                    loc.sub(lrb, lc0 + j + 1, mr, kb - j - 1));
  }
  return std::nullopt;
}

// Solves op(A) x = x for a triangular distributed A, with x replicated on
// every rank before and after. Block k's contribution from already solved
// blocks is reduced over the grid row (or column, when transposed) that
// holds it; the diagonal owner finishes the block and shares it.
template <Scalar T>
void dist_trsv(Context& ctx, const DistMatrix<T>& a, TriangleSpec spec, std::vector<T>& x) {
  const BlockCyclicDesc& d = a.desc;
  const ProcGrid& grid = d.grid();
  Comm& comm = grid.comm();
  const Matrix<T>& loc = a.local;
  const std::size_t n = d.g_rows(), nb = d.nb();
  if (n == 0) return;
  const std::size_t nblocks = (n + nb - 1) / nb;
  const bool forward = (spec.uplo == Uplo::Lower) != spec.transpose;

  for (std::size_t step = 0; step < nblocks; ++step) {
    const std::size_t k = forward ? step : nblocks - 1 - step;
    const std::size_t k0 = k * nb, kb = std::min(nb, n - k0);
    const std::size_t pr = d.row_owner(k0), pc = d.col_owner(k0);

    std::vector<T> partial(kb, T(0));
    if (!spec.transpose && grid.my_row() == pr) {
      const std::size_t lr0 = d.local_row_index(k0);
      const std::size_t c0 = forward ? 0 : d.local_cols_below(k0 + kb);
      const std::size_t c1 = forward ? d.local_cols_below(k0) : loc.cols();
      std::vector<T> xs(c1 - c0);
      for (std::size_t lc = c0; lc < c1; ++lc) xs[lc - c0] = x[d.global_col_index(lc)];
      kernels::gemv(ctx, false, T(-1), loc.sub(lr0, c0, kb, c1 - c0), std::span<const T>(xs), T(0),
                    std::span<T>(partial));
      comm.allreduce(grid.row_group(), ReduceOp::Sum, std::span<T>(partial));
    } else if (spec.transpose && grid.my_col() == pc) {
      const std::size_t lc0 = d.local_col_index(k0);
      const std::size_t r0 = forward ? 0 : d.local_rows_below(k0 + kb);
      const std::size_t r1 = forward ? d.local_rows_below(k0) : loc.rows();
      std::vector<T> xs(r1 - r0);
      for (std::size_t lr = r0; lr < r1; ++lr) xs[lr - r0] = x[d.global_row_index(lr)];
      kernels::gemv(ctx, true, T(-1), loc.sub(r0, lc0, r1 - r0, kb), std::span<const T>(xs), T(0),
                    std::span<T>(partial));
      comm.allreduce(grid.col_group(), ReduceOp::Sum, std::span<T>(partial));
    }

    const RankId diag = grid.rank_at(pr, pc);
    wire::Bytes msg;
    if (comm.rank() == diag) {
      std::vector<T> rhs(x.begin() + k0, x.begin() + k0 + kb);
      bool ok = true;
      try {
        kernels::axpy(ctx, T(1), std::span<const T>(partial), std::span<T>(rhs));
        kernels::trsm(ctx, spec, T(1), loc.sub(d.local_row_index(k0), d.local_col_index(k0), kb, kb),
                      column(rhs, 0, kb));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularPivot) throw;
        ok = false;
      }
      msg = with_status(ok, wire::encode<T>(std::span<const T>(rhs)));
    }
    msg = comm.broadcast(grid.world_group(), diag, std::move(msg));
    if (!status_of(msg))
      throw Error(ErrorKind::SingularPivot, "triangular solve: zero diagonal in block " + std::to_string(k));
    const auto solved = wire::decode<T>(body_of(msg));
    std::copy(solved.begin(), solved.end(), x.begin() + k0);
  }
}

template <Scalar T>
void require_rhs_conforms(const BlockCyclicDesc& m, const BlockCyclicDesc& b) {
  if (b.g_rows() != m.g_rows()) mismatch("solve: right-hand side length differs from the matrix order");
  if (&b.grid() != &m.grid() || b.mb() != m.mb() || b.g_cols() != 1)
    throw Error(ErrorKind::DescriptorMismatch, "solve: right-hand side is not distributed like the matrix rows");
}

template <Scalar T>
DistVector<T> localize(const BlockCyclicDesc& desc, const std::vector<T>& full) {
  DistVector<T> out = DistVector<T>::zeros(desc);
  for (std::size_t li = 0; li < out.local.size(); ++li) out.local[li] = full[desc.global_row_index(li)];
  return out;
}

}  // namespace

template <Scalar T>
LuFactors<T> lu_factor_blocked(Context& ctx, Matrix<T> a, std::size_t nb) {
  require_square(a, nb, "lu_factor_blocked");
  const std::size_t n = a.rows();
  kernels::Pivots piv(n);
  for (std::size_t k0 = 0; k0 < n; k0 += nb) {
    const std::size_t kb = std::min(nb, n - k0);
    const std::size_t rest = n - k0 - kb;
    const auto p = kernels::getf2(ctx, a.sub(k0, k0, n - k0, kb));
    for (std::size_t i = 0; i < kb; ++i) piv[k0 + i] = p[i] + k0;
    if (k0 > 0) kernels::laswp(ctx, a.sub(0, 0, n, k0), piv, k0, k0 + kb);
    if (rest == 0) continue;
    kernels::laswp(ctx, a.sub(0, k0 + kb, n, rest), piv, k0, k0 + kb);
    kernels::trsm(ctx, {Side::Left, Uplo::Lower, true, false}, T(1), a.sub(k0, k0, kb, kb),
                  a.sub(k0, k0 + kb, kb, rest));
    kernels::gemm(ctx, false, false, T(-1), a.sub(k0 + kb, k0, rest, kb), a.sub(k0, k0 + kb, kb, rest), T(1),
                  a.sub(k0 + kb, k0 + kb, rest, rest));
  }
  return {std::move(a), std::move(piv)};
}

template <Scalar T>
CholFactor<T> chol_factor_blocked(Context& ctx, Matrix<T> a, std::size_t nb) {
  require_square(a, nb, "chol_factor_blocked");
  const std::size_t n = a.rows();
  for (std::size_t k0 = 0; k0 < n; k0 += nb) {
    const std::size_t kb = std::min(nb, n - k0);
    const std::size_t rest = n - k0 - kb;
    kernels::potf2(ctx, a.sub(k0, k0, kb, kb));
    if (rest == 0) continue;
    kernels::trsm(ctx, {Side::Right, Uplo::Lower, false, true}, T(1), a.sub(k0, k0, kb, kb),
                  a.sub(k0 + kb, k0, rest, kb));
    // Lower trailing part only, one block column at a time.
    for (std::size_t j0 = k0 + kb; j0 < n; j0 += nb) {
      const std::size_t jb = std::min(nb, n - j0);
      const std::size_t below = n - j0 - jb;
      kernels::syrk_lower(ctx, T(-1), a.sub(j0, k0, jb, kb), T(1), a.sub(j0, j0, jb, jb));
      if (below > 0)
        kernels::gemm(ctx, false, true, T(-1), a.sub(j0 + jb, k0, below, kb), a.sub(j0, k0, jb, kb), T(1),
                      a.sub(j0 + jb, j0, below, jb));
    }
  }
  return {std::move(a)};
}

template <Scalar T>
DistLuFactors<T> lu_factor_dist(Context& ctx, DistMatrix<T> a) {
  const BlockCyclicDesc& d = a.desc;
  require_dist_square(d, a.local.rows(), a.local.cols(), "lu_factor_dist");
  const ProcGrid& grid = d.grid();
  Comm& comm = grid.comm();
  Matrix<T>& loc = a.local;
  const std::size_t n = d.g_rows(), nb = d.nb();
  kernels::Pivots piv(n);

  for (std::size_t k0 = 0; k0 < n; k0 += nb) {
    const std::size_t kb = std::min(nb, n - k0);
    const std::size_t pr = d.row_owner(k0), pc = d.col_owner(k0);
    const bool in_panel_col = grid.my_col() == pc;
    const std::size_t lc0 = in_panel_col ? d.local_col_index(k0) : 0;

    // Panel factorization by the owning grid column, then everyone learns the pivots.
    wire::Bytes verdict;
    if (in_panel_col) {
      std::vector<std::uint64_t> ppiv(kb);
      std::optional<std::size_t> failed;
      if (grid.p_rows() == 1) {
        try {
          const auto p = kernels::getf2(ctx, loc.sub(k0, lc0, n - k0, kb));
          for (std::size_t i = 0; i < kb; ++i) ppiv[i] = p[i] + k0;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::SingularPivot) throw;
          failed = 0;
        }
      } else {
        failed = factor_panel_cooperative(ctx, a, k0, kb, ppiv);
      }
      if (grid.my_row() == 0) {
        wire::Writer w;
        w.put_all(std::span<const std::uint64_t>(ppiv));
        verdict = with_status(!failed, std::move(w).take());
      }
    }
    verdict = comm.broadcast(grid.world_group(), grid.rank_at(0, pc), std::move(verdict));
    if (!status_of(verdict))
      throw Error(ErrorKind::SingularPivot, "lu_factor_dist: zero pivot column in panel at " + std::to_string(k0));
    {
      wire::Reader r(body_of(verdict));
      for (std::size_t i = 0; i < kb; ++i) piv[k0 + i] = r.get<std::uint64_t>();
    }

    // Same swaps on every column outside the panel.
    std::vector<ColRange> outside;
    if (in_panel_col) {
      outside = {{0, lc0}, {lc0 + kb, loc.cols()}};
    } else {
      outside = {{0, loc.cols()}};
    }
    for (std::size_t i = 0; i < kb; ++i)
      if (piv[k0 + i] != k0 + i) swap_global_rows(a, k0 + i, piv[k0 + i], std::span<const ColRange>(outside));

    if (k0 + kb == n) break;
    const std::size_t lcr = d.local_cols_below(k0 + kb), nc = loc.cols() - lcr;
    const std::size_t lrr = d.local_rows_below(k0 + kb), mr = loc.rows() - lrr;
    const std::size_t lr0 = grid.my_row() == pr ? d.local_row_index(k0) : 0;

    // U12 <- L11^-1 A12 on the grid row holding the block row.
    if (grid.my_row() == pr) {
      wire::Bytes l11;
      if (in_panel_col) l11 = wire::encode_matrix<T>(loc.sub(lr0, lc0, kb, kb));
      l11 = comm.broadcast(grid.row_group(), grid.row_group().member(pc), std::move(l11));
      const Matrix<T> tri = wire::decode_matrix<T>(l11);
      if (nc > 0)
        kernels::trsm(ctx, {Side::Left, Uplo::Lower, true, false}, T(1), tri.view(), loc.sub(lr0, lcr, kb, nc));
    }

    // A22 <- A22 - L21 U12.
    wire::Bytes l21, u12;
    if (in_panel_col) l21 = wire::encode_matrix<T>(loc.sub(lrr, lc0, mr, kb));
    if (grid.my_row() == pr) u12 = wire::encode_matrix<T>(loc.sub(lr0, lcr, kb, nc));
    l21 = comm.broadcast(grid.row_group(), grid.row_group().member(pc), std::move(l21));
    u12 = comm.broadcast(grid.col_group(), grid.col_group().member(pr), std::move(u12));
    const Matrix<T> left = wire::decode_matrix<T>(l21);
    const Matrix<T> top = wire::decode_matrix<T>(u12);
    if (left.rows() != mr || top.cols() != nc) throw Error(ErrorKind::CollectiveMisuse, "trailing update shape mismatch");
    if (mr > 0 && nc > 0)
      kernels::gemm(ctx, false, false, T(-1), left.view(), top.view(), T(1), loc.sub(lrr, lcr, mr, nc));
  }
  return {std::move(a), std::move(piv)};
}

template <Scalar T>
DistCholFactor<T> chol_factor_dist(Context& ctx, DistMatrix<T> a) {
  const BlockCyclicDesc& d = a.desc;
  require_dist_square(d, a.local.rows(), a.local.cols(), "chol_factor_dist");
  const ProcGrid& grid = d.grid();
  Comm& comm = grid.comm();
  Matrix<T>& loc = a.local;
  const std::size_t n = d.g_rows(), nb = d.nb();

  for (std::size_t k0 = 0; k0 < n; k0 += nb) {
    const std::size_t kb = std::min(nb, n - k0);
    const std::size_t pr = d.row_owner(k0), pc = d.col_owner(k0);
    const RankId diag = grid.rank_at(pr, pc);
    const bool in_panel_col = grid.my_col() == pc;
    const std::size_t lr0 = grid.my_row() == pr ? d.local_row_index(k0) : 0;
    const std::size_t lc0 = in_panel_col ? d.local_col_index(k0) : 0;

    wire::Bytes verdict;
    if (comm.rank() == diag) {
      bool ok = true;
      try {
        kernels::potf2(ctx, loc.sub(lr0, lc0, kb, kb));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotSpd) throw;
        ok = false;
      }
      verdict = with_status(ok, {});
    }
    verdict = comm.broadcast(grid.world_group(), diag, std::move(verdict));
    if (!status_of(verdict))
      throw Error(ErrorKind::NotSpd, "chol_factor_dist: non-positive pivot in block at " + std::to_string(k0));
    if (k0 + kb == n) break;

    const std::size_t base = k0 + kb, rest = n - base;
    const std::size_t lrr = d.local_rows_below(base), mr = loc.rows() - lrr;

    // The whole panel below the diagonal block, on every rank.
    wire::Bytes panel_bytes;
    if (in_panel_col) {
      wire::Bytes l11;
      if (grid.my_row() == pr) l11 = wire::encode_matrix<T>(loc.sub(lr0, lc0, kb, kb));
      l11 = comm.broadcast(grid.col_group(), grid.col_group().member(pr), std::move(l11));
      const Matrix<T> tri = wire::decode_matrix<T>(l11);
      if (mr > 0)
        kernels::trsm(ctx, {Side::Right, Uplo::Lower, false, true}, T(1), tri.view(), loc.sub(lrr, lc0, mr, kb));
      Matrix<T> panel(rest, kb);
      for (std::size_t lr = lrr; lr < loc.rows(); ++lr) {
        const std::size_t g = d.global_row_index(lr) - base;
        for (std::size_t c = 0; c < kb; ++c) panel(g, c) = loc(lr, lc0 + c);
      }
      comm.allreduce(grid.col_group(), ReduceOp::Sum, panel.storage());
      panel_bytes = wire::encode_matrix<T>(panel.view());
    }
    panel_bytes = comm.broadcast(grid.row_group(), grid.row_group().member(pc), std::move(panel_bytes));
    const Matrix<T> panel = wire::decode_matrix<T>(panel_bytes);

    Matrix<T> mine(mr, kb);
    for (std::size_t li = 0; li < mr; ++li) {
      const std::size_t g = d.global_row_index(lrr + li) - base;
      for (std::size_t c = 0; c < kb; ++c) mine(li, c) = panel(g, c);
    }

    // Lower trailing part, one local block column at a time.
    for (std::size_t lc = d.local_cols_below(base); lc < loc.cols();) {
      const std::size_t j0 = d.global_col_index(lc);
      const std::size_t jb = std::min(nb, n - j0);
      std::size_t lr = d.local_rows_below(j0);
      if (d.row_owner(j0) == grid.my_row()) {
        kernels::syrk_lower(ctx, T(-1), panel.sub(j0 - base, 0, jb, kb), T(1), loc.sub(lr, lc, jb, jb));
        lr += jb;
      }
      if (lr < loc.rows())
        kernels::gemm(ctx, false, true, T(-1), mine.sub(lr - lrr, 0, loc.rows() - lr, kb),
                      panel.sub(j0 - base, 0, jb, kb), T(1), loc.sub(lr, lc, loc.rows() - lr, jb));
      lc += jb;
    }
  }
  return {std::move(a)};
}

template <Scalar T>
Vector<T> lu_solve(Context& ctx, const LuFactors<T>& f, const Vector<T>& b) {
  const std::size_t n = f.packed.rows();
  if (b.size() != n) mismatch("lu_solve: right-hand side length differs from the matrix order");
  Vector<T> x = b;
  if (n == 0) return x;
  kernels::laswp(ctx, x.as_matrix(), f.pivots, 0, n);
  kernels::trsm(ctx, {Side::Left, Uplo::Lower, true, false}, T(1), f.packed.view(), x.as_matrix());
  kernels::trsm(ctx, {Side::Left, Uplo::Upper, false, false}, T(1), f.packed.view(), x.as_matrix());
  return x;
}

template <Scalar T>
Vector<T> chol_solve(Context& ctx, const CholFactor<T>& f, const Vector<T>& b) {
  const std::size_t n = f.lower.rows();
  if (b.size() != n) mismatch("chol_solve: right-hand side length differs from the matrix order");
  Vector<T> x = b;
  if (n == 0) return x;
  kernels::trsm(ctx, {Side::Left, Uplo::Lower, false, false}, T(1), f.lower.view(), x.as_matrix());
  kernels::trsm(ctx, {Side::Left, Uplo::Lower, false, true}, T(1), f.lower.view(), x.as_matrix());
  return x;
}

template <Scalar T>
DistVector<T> lu_solve(Context& ctx, const DistLuFactors<T>& f, const DistVector<T>& b) {
  require_rhs_conforms<T>(f.packed.desc, b.desc);
  std::vector<T> x = allgather(b).values();
  const std::size_t n = x.size();
  if (n > 0) kernels::laswp(ctx, column(x, 0, n), f.pivots, 0, n);
  dist_trsv(ctx, f.packed, {Side::Left, Uplo::Lower, true, false}, x);
  dist_trsv(ctx, f.packed, {Side::Left, Uplo::Upper, false, false}, x);
  return localize(b.desc, x);
}

template <Scalar T>
DistVector<T> chol_solve(Context& ctx, const DistCholFactor<T>& f, const DistVector<T>& b) {
  require_rhs_conforms<T>(f.lower.desc, b.desc);
  std::vector<T> x = allgather(b).values();
  dist_trsv(ctx, f.lower, {Side::Left, Uplo::Lower, false, false}, x);
  dist_trsv(ctx, f.lower, {Side::Left, Uplo::Lower, false, true}, x);
  return localize(b.desc, x);
}

#define GRIDSOLVE_INSTANTIATE_DIRECT(T)                                                              \
  template LuFactors<T> lu_factor_blocked<T>(Context&, Matrix<T>, std::size_t);                      \
  template CholFactor<T> chol_factor_blocked<T>(Context&, Matrix<T>, std::size_t);                   \
  template DistLuFactors<T> lu_factor_dist<T>(Context&, DistMatrix<T>);                              \
  template DistCholFactor<T> chol_factor_dist<T>(Context&, DistMatrix<T>);                           \
  template Vector<T> lu_solve<T>(Context&, const LuFactors<T>&, const Vector<T>&);                   \
  template Vector<T> chol_solve<T>(Context&, const CholFactor<T>&, const Vector<T>&);                \
  template DistVector<T> lu_solve<T>(Context&, const DistLuFactors<T>&, const DistVector<T>&);       \
  template DistVector<T> chol_solve<T>(Context&, const DistCholFactor<T>&, const DistVector<T>&);

GRIDSOLVE_INSTANTIATE_DIRECT(float)
GRIDSOLVE_INSTANTIATE_DIRECT(double)

}  // namespace gridsolve
