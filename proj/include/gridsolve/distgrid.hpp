#pragma once

// 2D process mesh, block-cyclic descriptors and the distributed containers.
//
// Ranks are placed row-major: rank r sits at (r / p_cols, r % p_cols).
// Global index i belongs to process coordinate (i / blk) % p, distribution
// source 0. A DistVector is split over grid rows exactly like the rows of a
// matrix and replicated across grid columns.
//
// Every operation taking a ProcGrid, DistMatrix or DistVector is collective
// over the grid unless it is documented as local.

#include <cstddef>
#include <utility>

#include "gridsolve/backend.hpp"
#include "gridsolve/core.hpp"
#include "gridsolve/transport.hpp"

namespace gridsolve {

/// Number of indices in [0, g) owned by `coord` (local).
std::size_t local_extent(std::size_t g, std::size_t blk, std::size_t p, std::size_t coord);

inline std::size_t index_owner(std::size_t i, std::size_t blk, std::size_t p) { return (i / blk) % p; }
inline std::size_t index_to_local(std::size_t i, std::size_t blk, std::size_t p) {
  return (i / (blk * p)) * blk + i % blk;
}
inline std::size_t index_to_global(std::size_t li, std::size_t blk, std::size_t p, std::size_t coord) {
  return ((li / blk) * p + coord) * blk + li % blk;
}

struct ProcCoord {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const ProcCoord&, const ProcCoord&) = default;
};

class ProcGrid {
 public:
  /// Local; throws DescriptorMismatch unless p_rows * p_cols equals the launch size.
  ProcGrid(Comm& comm, std::size_t p_rows, std::size_t p_cols);

  /// p_rows x p_cols with p_rows the largest divisor of `ranks` not above its square root.
  static std::pair<std::size_t, std::size_t> near_square(std::size_t ranks);

  Comm& comm() const noexcept { return *comm_; }
  std::size_t p_rows() const noexcept { return p_rows_; }
  std::size_t p_cols() const noexcept { return p_cols_; }
  std::size_t my_row() const noexcept { return my_row_; }
  std::size_t my_col() const noexcept { return my_col_; }
  RankId rank_at(std::size_t prow, std::size_t pcol) const noexcept { return RankId{prow * p_cols_ + pcol}; }

  /// Ranks sharing my grid row, ordered by grid column.
  const CommGroup& row_group() const noexcept { return row_group_; }
  /// Ranks sharing my grid column, ordered by grid row.
  const CommGroup& col_group() const noexcept { return col_group_; }
  const CommGroup& world_group() const noexcept { return world_group_; }

 private:
  Comm* comm_;
  std::size_t p_rows_, p_cols_, my_row_, my_col_;
  CommGroup row_group_, col_group_, world_group_;
};

/// Global shape and blocking of a distributed matrix over a grid. The grid
/// must outlive every descriptor that refers to it.
class BlockCyclicDesc {
 public:
  BlockCyclicDesc() = default;

  /// Collective: verifies every rank passed the same shape and blocking and
  /// throws DescriptorMismatch on all ranks otherwise.
  static BlockCyclicDesc create(const ProcGrid& grid, std::size_t g_rows, std::size_t g_cols, std::size_t mb,
                                std::size_t nb);

  std::size_t g_rows() const noexcept { return g_rows_; }
  std::size_t g_cols() const noexcept { return g_cols_; }
  std::size_t mb() const noexcept { return mb_; }
  std::size_t nb() const noexcept { return nb_; }
  const ProcGrid& grid() const noexcept { return *grid_; }

  std::size_t local_rows() const noexcept { return local_extent(g_rows_, mb_, grid_->p_rows(), grid_->my_row()); }
  std::size_t local_cols() const noexcept { return local_extent(g_cols_, nb_, grid_->p_cols(), grid_->my_col()); }
  std::size_t local_rows_of(std::size_t prow) const noexcept { return local_extent(g_rows_, mb_, grid_->p_rows(), prow); }
  std::size_t local_cols_of(std::size_t pcol) const noexcept { return local_extent(g_cols_, nb_, grid_->p_cols(), pcol); }

  /// Local rows (columns) of mine whose global index is below `g`.
  std::size_t local_rows_below(std::size_t g) const noexcept {
    return local_extent(g, mb_, grid_->p_rows(), grid_->my_row());
  }
  std::size_t local_cols_below(std::size_t g) const noexcept {
    return local_extent(g, nb_, grid_->p_cols(), grid_->my_col());
  }

  std::size_t row_owner(std::size_t i) const noexcept { return index_owner(i, mb_, grid_->p_rows()); }
  std::size_t col_owner(std::size_t j) const noexcept { return index_owner(j, nb_, grid_->p_cols()); }
  ProcCoord owner(std::size_t i, std::size_t j) const noexcept { return {row_owner(i), col_owner(j)}; }
  bool owns_row(std::size_t i) const noexcept { return row_owner(i) == grid_->my_row(); }
  bool owns_col(std::size_t j) const noexcept { return col_owner(j) == grid_->my_col(); }

  /// Throws DescriptorMismatch if the caller does not own (i, j).
  std::pair<std::size_t, std::size_t> global_to_local(std::size_t i, std::size_t j) const;
  std::pair<std::size_t, std::size_t> local_to_global(std::size_t li, std::size_t lj) const noexcept;

  std::size_t local_row_index(std::size_t i) const noexcept { return index_to_local(i, mb_, grid_->p_rows()); }
  std::size_t local_col_index(std::size_t j) const noexcept { return index_to_local(j, nb_, grid_->p_cols()); }
  std::size_t global_row_index(std::size_t li) const noexcept {
    return index_to_global(li, mb_, grid_->p_rows(), grid_->my_row());
  }
  std::size_t global_col_index(std::size_t lj) const noexcept {
    return index_to_global(lj, nb_, grid_->p_cols(), grid_->my_col());
  }

  /// Same grid, shape and blocking.
  bool same_layout(const BlockCyclicDesc& o) const noexcept {
    return grid_ == o.grid_ && g_rows_ == o.g_rows_ && g_cols_ == o.g_cols_ && mb_ == o.mb_ && nb_ == o.nb_;
  }

 private:
  friend BlockCyclicDesc vector_desc(const BlockCyclicDesc&);
  friend BlockCyclicDesc vector_desc_for_cols(const BlockCyclicDesc&);

  BlockCyclicDesc(const ProcGrid* grid, std::size_t g_rows, std::size_t g_cols, std::size_t mb, std::size_t nb)
      : g_rows_(g_rows), g_cols_(g_cols), mb_(mb), nb_(nb), grid_(grid) {}

  std::size_t g_rows_ = 0, g_cols_ = 0, mb_ = 1, nb_ = 1;
  const ProcGrid* grid_ = nullptr;
};

template <Scalar T>
struct DistMatrix {
  BlockCyclicDesc desc;
  Matrix<T> local;

  /// Zero matrix with the descriptor's local shape (local).
  static DistMatrix zeros(const BlockCyclicDesc& desc) { return {desc, Matrix<T>(desc.local_rows(), desc.local_cols())}; }
};

template <Scalar T>
struct DistVector {
  BlockCyclicDesc desc;  // g_cols == 1
  Vector<T> local;

  static DistVector zeros(const BlockCyclicDesc& desc) { return {desc, Vector<T>(desc.local_rows())}; }
  std::size_t size() const noexcept { return desc.g_rows(); }
};

/// Descriptor for vectors conformal to the rows of `matrix` (local).
BlockCyclicDesc vector_desc(const BlockCyclicDesc& matrix);
/// Descriptor for vectors conformal to the columns of `matrix` (local).
BlockCyclicDesc vector_desc_for_cols(const BlockCyclicDesc& matrix);

/// Distributes `global` (read on world rank 0 only) according to `desc`.
template <Scalar T>
DistMatrix<T> scatter(const Matrix<T>& global, const BlockCyclicDesc& desc);

/// Assembles the global matrix on world rank 0; other ranks get an empty matrix.
template <Scalar T>
Matrix<T> gather(const DistMatrix<T>& a);

template <Scalar T>
DistVector<T> scatter(const Vector<T>& global, const BlockCyclicDesc& desc);

/// Full vector on every rank.
template <Scalar T>
Vector<T> allgather(const DistVector<T>& x);

/// y <- A x.
template <Scalar T>
void dist_matvec(Context& ctx, const DistMatrix<T>& a, const DistVector<T>& x, DistVector<T>& y);

/// y <- A^T x.
template <Scalar T>
void dist_transpose_matvec(Context& ctx, const DistMatrix<T>& a, const DistVector<T>& x, DistVector<T>& y);

/// Identical scalar on every rank. Grid column 0 accounts for the replicated entries.
template <Scalar T>
T dist_dot(Context& ctx, const DistVector<T>& x, const DistVector<T>& y);

template <Scalar T>
T dist_nrm2(Context& ctx, const DistVector<T>& x);

namespace detail {

// Point-to-point tags used by the distributed algorithms.
inline constexpr int kScatterTag = 101;
inline constexpr int kGatherTag = 102;
inline constexpr int kRowSwapTag = 103;

}  // namespace detail

}  // namespace gridsolve
