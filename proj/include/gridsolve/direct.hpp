#pragma once

// Blocked and distributed LU (partial pivoting) and Cholesky factorizations
// with their triangular-solve drivers.
//
// Pivots use the swap-sequence form: step k exchanged rows k and pivots[k]
// (0-based, global). Cholesky reads and writes only the lower triangle; the
// strict upper triangle of the input is left as it was.

#include <cstddef>

#include "gridsolve/core.hpp"
#include "gridsolve/distgrid.hpp"
#include "gridsolve/kernels.hpp"

namespace gridsolve {

template <Scalar T>
struct LuFactors {
  Matrix<T> packed;  // unit-lower L below the diagonal, U on and above
  kernels::Pivots pivots;
};

template <Scalar T>
struct DistLuFactors {
  DistMatrix<T> packed;
  kernels::Pivots pivots;  // replicated on every rank
};

template <Scalar T>
struct CholFactor {
  Matrix<T> lower;
};

template <Scalar T>
struct DistCholFactor {
  DistMatrix<T> lower;
};

/// Right-looking LU with panels of width nb. Throws SingularPivot.
template <Scalar T>
LuFactors<T> lu_factor_blocked(Context& ctx, Matrix<T> a, std::size_t nb);

/// Collective. Needs a square descriptor with mb == nb.
template <Scalar T>
DistLuFactors<T> lu_factor_dist(Context& ctx, DistMatrix<T> a);

/// Throws NotSpd.
template <Scalar T>
CholFactor<T> chol_factor_blocked(Context& ctx, Matrix<T> a, std::size_t nb);

template <Scalar T>
DistCholFactor<T> chol_factor_dist(Context& ctx, DistMatrix<T> a);

/// Solves A x = b from the factors. Throws SingularPivot on a zero U diagonal.
template <Scalar T>
Vector<T> lu_solve(Context& ctx, const LuFactors<T>& f, const Vector<T>& b);

template <Scalar T>
DistVector<T> lu_solve(Context& ctx, const DistLuFactors<T>& f, const DistVector<T>& b);

template <Scalar T>
Vector<T> chol_solve(Context& ctx, const CholFactor<T>& f, const Vector<T>& b);

template <Scalar T>
DistVector<T> chol_solve(Context& ctx, const DistCholFactor<T>& f, const DistVector<T>& b);

}  // namespace gridsolve
