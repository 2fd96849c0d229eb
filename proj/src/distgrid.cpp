#include "gridsolve/distgrid.hpp"

#include <cmath>
#include <string>

#include "gridsolve/kernels.hpp"

namespace gridsolve {

std::size_t local_extent(std::size_t g, std::size_t blk, std::size_t p, std::size_t coord) {
  const std::size_t full_blocks = g / blk;
  std::size_t n = (full_blocks / p) * blk;
  const std::size_t extra_blocks = full_blocks % p;
  if (coord < extra_blocks) n += blk;
  else if (coord == extra_blocks) n += g % blk;
  return n;
}

ProcGrid::ProcGrid(Comm& comm, std::size_t p_rows, std::size_t p_cols)
    : comm_(&comm),
      p_rows_(p_rows),
      p_cols_(p_cols),
      my_row_(p_cols == 0 ? 0 : comm.rank().value / p_cols),
      my_col_(p_cols == 0 ? 0 : comm.rank().value % p_cols),
      row_group_({comm.rank()}, comm.rank()),
      col_group_({comm.rank()}, comm.rank()),
      world_group_(comm.world()) {
  if (p_rows == 0 || p_cols == 0 || p_rows * p_cols != comm.size())
    throw Error(ErrorKind::DescriptorMismatch, "grid " + std::to_string(p_rows) + "x" + std::to_string(p_cols) +
                                                   " does not match " + std::to_string(comm.size()) + " ranks");
  std::vector<RankId> row, col;
  for (std::size_t c = 0; c < p_cols; ++c) row.push_back(rank_at(my_row_, c));
  for (std::size_t r = 0; r < p_rows; ++r) col.push_back(rank_at(r, my_col_));
  row_group_ = comm.group(std::move(row));
  col_group_ = comm.group(std::move(col));
}

std::pair<std::size_t, std::size_t> ProcGrid::near_square(std::size_t ranks) {
  std::size_t rows = 1;
  for (std::size_t d = 1; d * d <= ranks; ++d)
    if (ranks % d == 0) rows = d;
  return {rows, ranks / rows};
}

BlockCyclicDesc BlockCyclicDesc::create(const ProcGrid& grid, std::size_t g_rows, std::size_t g_cols,
                                        std::size_t mb, std::size_t nb) {
  // Every rank compares its parameters with rank 0's; any disagreement fails everywhere.
  wire::Writer w;
  w.put(std::uint64_t(g_rows)).put(std::uint64_t(g_cols)).put(std::uint64_t(mb)).put(std::uint64_t(nb));
  const wire::Bytes mine = std::move(w).take();
  Comm& comm = grid.comm();
  const wire::Bytes root = comm.broadcast(grid.world_group(), RankId{0}, mine);
  const double bad = comm.allreduce(grid.world_group(), ReduceOp::Max, root == mine ? 0.0 : 1.0);
  if (bad != 0.0) throw Error(ErrorKind::DescriptorMismatch, "ranks disagree on the matrix descriptor");
  if (mb == 0 || nb == 0) throw Error(ErrorKind::DescriptorMismatch, "block sizes must be positive");
  return BlockCyclicDesc(&grid, g_rows, g_cols, mb, nb);
}

std::pair<std::size_t, std::size_t> BlockCyclicDesc::global_to_local(std::size_t i, std::size_t j) const {
  if (i >= g_rows_ || j >= g_cols_ || !owns_row(i) || !owns_col(j))
    throw Error(ErrorKind::DescriptorMismatch,
                "(" + std::to_string(i) + ", " + std::to_string(j) + ") is not owned by this rank");
  return {local_row_index(i), local_col_index(j)};
}

std::pair<std::size_t, std::size_t> BlockCyclicDesc::local_to_global(std::size_t li, std::size_t lj) const noexcept {
  return {global_row_index(li), global_col_index(lj)};
}

BlockCyclicDesc vector_desc(const BlockCyclicDesc& m) {
  return BlockCyclicDesc(&m.grid(), m.g_rows(), 1, m.mb(), m.mb());
}

BlockCyclicDesc vector_desc_for_cols(const BlockCyclicDesc& m) {
  return BlockCyclicDesc(&m.grid(), m.g_cols(), 1, m.nb(), m.nb());
}

namespace {

// Rank 0 decides; everybody learns the verdict before any data moves.
void agree_or_throw(const ProcGrid& grid, bool root_ok, const std::string& what) {
  std::uint8_t ok = root_ok ? 1 : 0;
  auto bytes = grid.comm().broadcast(grid.world_group(), RankId{0}, {std::byte(ok)});
  if (bytes.at(0) == std::byte(0)) throw Error(ErrorKind::DimensionMismatch, what);
}

template <class T>
Matrix<T> extract_local(const Matrix<T>& g, const BlockCyclicDesc& d, std::size_t prow, std::size_t pcol) {
  const std::size_t pr = d.grid().p_rows(), pc = d.grid().p_cols();
  Matrix<T> out(d.local_rows_of(prow), d.local_cols_of(pcol));
  for (std::size_t lj = 0; lj < out.cols(); ++lj) {
    const std::size_t j = index_to_global(lj, d.nb(), pc, pcol);
    for (std::size_t li = 0; li < out.rows(); ++li) out(li, lj) = g(index_to_global(li, d.mb(), pr, prow), j);
  }
  return out;
}

void require_vector_conforms(const BlockCyclicDesc& rows_of, std::size_t mb, const BlockCyclicDesc& v,
                             const char* what) {
  if (&v.grid() != &rows_of.grid() || v.g_cols() != 1 || v.mb() != mb)
    throw Error(ErrorKind::DescriptorMismatch, std::string(what) + ": vector descriptor does not conform");
}

// The full vector whose slices `local` hold, assembled along my grid column.
template <class T>
std::vector<T> assemble_over_col_group(const ProcGrid& grid, std::span<const T> local, std::size_t g,
                                       std::size_t blk) {
  std::vector<T> full(g);
  const std::size_t pr = grid.p_rows();
  for (std::size_t r = 0; r < pr; ++r) {
    wire::Bytes piece;
    if (r == grid.my_row()) piece = wire::encode<T>(local);
    piece = grid.comm().broadcast(grid.col_group(), grid.col_group().member(r), std::move(piece));
    const auto vals = wire::decode<T>(piece);
    for (std::size_t li = 0; li < vals.size(); ++li) full[index_to_global(li, blk, pr, r)] = vals[li];
  }
  return full;
}

// Completes sums whose pieces are spread over `group`. Partials travel
// unrounded and every member merges them in member order, so the rounded
// result matches what one rank summing everything would get.
template <class T>
std::vector<T> finish_sums(Comm& comm, const CommGroup& group, std::span<const kernels::Accum> mine) {
  const std::size_t len = mine.size(), size = group.size();
  // Every slot but the caller's is zero, so the Sum fold copies exactly.
  std::vector<double> slots(2 * len * size, 0.0);
  double* own = slots.data() + 2 * len * group.my_index();
  for (std::size_t i = 0; i < len; ++i) {
    own[2 * i] = mine[i].hi;
    own[2 * i + 1] = mine[i].lo;
  }
  comm.allreduce(group, ReduceOp::Sum, std::span<double>(slots));
  std::vector<T> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    kernels::Accum acc;
    for (std::size_t m = 0; m < size; ++m) acc.merge({slots[2 * (m * len + i)], slots[2 * (m * len + i) + 1]});
    out[i] = acc.value<T>();
  }
  return out;
}

template <class T>
std::vector<T> finish_sums(Comm& comm, const CommGroup& group, std::span<const double> hi, std::span<const double> lo) {
  std::vector<kernels::Accum> mine(hi.size());
  for (std::size_t i = 0; i < hi.size(); ++i) mine[i] = {hi[i], lo[i]};
  return finish_sums<T>(comm, group, mine);
}

}  // namespace

template <Scalar T>
DistMatrix<T> scatter(const Matrix<T>& global, const BlockCyclicDesc& desc) {
  const ProcGrid& grid = desc.grid();
  Comm& comm = grid.comm();
  const bool root = comm.rank().value == 0;
  agree_or_throw(grid, !root || (global.rows() == desc.g_rows() && global.cols() == desc.g_cols()),
                 "scatter: matrix shape differs from the descriptor");
  if (root) {
    for (std::size_t r = 1; r < comm.size(); ++r) {
      const Matrix<T> piece = extract_local(global, desc, r / grid.p_cols(), r % grid.p_cols());
      comm.send(RankId{r}, detail::kScatterTag, wire::encode_matrix<T>(piece.view()));
    }
    return {desc, extract_local(global, desc, 0, 0)};
  }
  Matrix<T> local = wire::decode_matrix<T>(comm.recv(RankId{0}, detail::kScatterTag));
  if (local.rows() != desc.local_rows() || local.cols() != desc.local_cols())
    throw Error(ErrorKind::DescriptorMismatch, "scatter: received block does not match the local extent");
  return {desc, std::move(local)};
}

template <Scalar T>
Matrix<T> gather(const DistMatrix<T>& a) {
  const BlockCyclicDesc& d = a.desc;
  const ProcGrid& grid = d.grid();
  Comm& comm = grid.comm();
  if (comm.rank().value != 0) {
    comm.send(RankId{0}, detail::kGatherTag, wire::encode_matrix<T>(a.local.view()));
    return {};
  }
  Matrix<T> out(d.g_rows(), d.g_cols());
  const std::size_t pr = grid.p_rows(), pc = grid.p_cols();
  for (std::size_t r = 0; r < comm.size(); ++r) {
    const std::size_t prow = r / pc, pcol = r % pc;
    const Matrix<T> piece = r == 0 ? a.local : wire::decode_matrix<T>(comm.recv(RankId{r}, detail::kGatherTag));
    if (piece.rows() != d.local_rows_of(prow) || piece.cols() != d.local_cols_of(pcol))
      throw Error(ErrorKind::DescriptorMismatch, "gather: block from rank " + std::to_string(r) + " has the wrong shape");
    for (std::size_t lj = 0; lj < piece.cols(); ++lj) {
      const std::size_t j = index_to_global(lj, d.nb(), pc, pcol);
      for (std::size_t li = 0; li < piece.rows(); ++li) out(index_to_global(li, d.mb(), pr, prow), j) = piece(li, lj);
    }
  }
  return out;
}

template <Scalar T>
DistVector<T> scatter(const Vector<T>& global, const BlockCyclicDesc& desc) {
  const ProcGrid& grid = desc.grid();
  Comm& comm = grid.comm();
  const bool root = comm.rank().value == 0;
  agree_or_throw(grid, !root || global.size() == desc.g_rows(), "scatter: vector length differs from the descriptor");
  const auto bytes = comm.broadcast(grid.world_group(), RankId{0}, root ? wire::encode<T>(global.span()) : wire::Bytes{});
  const auto full = wire::decode<T>(bytes);
  DistVector<T> out = DistVector<T>::zeros(desc);
  for (std::size_t li = 0; li < out.local.size(); ++li) out.local[li] = full[desc.global_row_index(li)];
  return out;
}

template <Scalar T>
Vector<T> allgather(const DistVector<T>& x) {
  return Vector<T>(assemble_over_col_group<T>(x.desc.grid(), x.local.span(), x.desc.g_rows(), x.desc.mb()));
}

template <Scalar T>
void dist_matvec(Context& ctx, const DistMatrix<T>& a, const DistVector<T>& x, DistVector<T>& y) {
  const BlockCyclicDesc& d = a.desc;
  if (x.desc.g_rows() != d.g_cols() || y.desc.g_rows() != d.g_rows())
    throw Error(ErrorKind::DescriptorMismatch, "dist_matvec: global dimensions do not conform");
  require_vector_conforms(d, d.nb(), x.desc, "dist_matvec");
  require_vector_conforms(d, d.mb(), y.desc, "dist_matvec");
  const ProcGrid& grid = d.grid();

  // x restricted to my local columns.
  const std::vector<T> xfull = assemble_over_col_group<T>(grid, x.local.span(), d.g_cols(), x.desc.mb());
  std::vector<T> xloc(d.local_cols());
  for (std::size_t lj = 0; lj < xloc.size(); ++lj) xloc[lj] = xfull[d.global_col_index(lj)];

  std::vector<double> hi(d.local_rows()), lo(d.local_rows());
  kernels::gemv_partial(ctx, false, a.local.view(), std::span<const T>(xloc), hi, lo);
  y.local = Vector<T>(finish_sums<T>(grid.comm(), grid.row_group(), hi, lo));
}

template <Scalar T>
void dist_transpose_matvec(Context& ctx, const DistMatrix<T>& a, const DistVector<T>& x, DistVector<T>& y) {
  const BlockCyclicDesc& d = a.desc;
  if (x.desc.g_rows() != d.g_rows() || y.desc.g_rows() != d.g_cols())
    throw Error(ErrorKind::DescriptorMismatch, "dist_transpose_matvec: global dimensions do not conform");
  require_vector_conforms(d, d.mb(), x.desc, "dist_transpose_matvec");
  require_vector_conforms(d, d.nb(), y.desc, "dist_transpose_matvec");
  const ProcGrid& grid = d.grid();

  // x is already split by grid rows like the rows of A.
  std::vector<double> hi(d.local_cols()), lo(d.local_cols());
  kernels::gemv_partial(ctx, true, a.local.view(), x.local.span(), hi, lo);
  const Vector<T> partial(finish_sums<T>(grid.comm(), grid.col_group(), hi, lo));

  // Column slices -> full vector along my grid row -> my row slice.
  const std::size_t pc = grid.p_cols();
  std::vector<T> full(d.g_cols());
  for (std::size_t c = 0; c < pc; ++c) {
    wire::Bytes piece;
    if (c == grid.my_col()) piece = wire::encode<T>(partial.span());
    piece = grid.comm().broadcast(grid.row_group(), grid.row_group().member(c), std::move(piece));
    const auto vals = wire::decode<T>(piece);
    for (std::size_t lj = 0; lj < vals.size(); ++lj) full[index_to_global(lj, d.nb(), pc, c)] = vals[lj];
  }
  Vector<T> out(y.desc.local_rows());
  for (std::size_t li = 0; li < out.size(); ++li) out[li] = full[y.desc.global_row_index(li)];
  y.local = std::move(out);
}

template <Scalar T>
T dist_dot(Context& ctx, const DistVector<T>& x, const DistVector<T>& y) {
  if (!x.desc.same_layout(y.desc)) throw Error(ErrorKind::DescriptorMismatch, "dist_dot: vectors do not conform");
  const ProcGrid& grid = x.desc.grid();
  const kernels::Accum mine = grid.my_col() == 0 ? kernels::dot_partial(ctx, x.local.span(), y.local.span())
                                                 : kernels::Accum{};
  return finish_sums<T>(grid.comm(), grid.world_group(), std::span(&mine, 1))[0];
}

template <Scalar T>
T dist_nrm2(Context& ctx, const DistVector<T>& x) {
  return std::sqrt(dist_dot(ctx, x, x));
}

#define GRIDSOLVE_INSTANTIATE_DISTGRID(T)                                                         \
  template DistMatrix<T> scatter<T>(const Matrix<T>&, const BlockCyclicDesc&);                    \
  template Matrix<T> gather<T>(const DistMatrix<T>&);                                             \
  template DistVector<T> scatter<T>(const Vector<T>&, const BlockCyclicDesc&);                    \
  template Vector<T> allgather<T>(const DistVector<T>&);                                          \
  template void dist_matvec<T>(Context&, const DistMatrix<T>&, const DistVector<T>&, DistVector<T>&); \
  template void dist_transpose_matvec<T>(Context&, const DistMatrix<T>&, const DistVector<T>&,    \
                                         DistVector<T>&);                                         \
  template T dist_dot<T>(Context&, const DistVector<T>&, const DistVector<T>&);                   \
  template T dist_nrm2<T>(Context&, const DistVector<T>&);

GRIDSOLVE_INSTANTIATE_DISTGRID(float)
GRIDSOLVE_INSTANTIATE_DISTGRID(double)

}  // namespace gridsolve
