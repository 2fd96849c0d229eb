"""Dense linear-system solvers over in-process ranks."""

from ._core import (
    GridsolveError,
    bench,
    bicg,
    bicgstab,
    cg,
    chol_factor,
    chol_solve,
    gemm,
    generate,
    gmres,
    lu_factor,
    lu_solve,
    make_rhs,
    solve,
)

__all__ = [
    "GridsolveError",
    "bench",
    "bicg",
    "bicgstab",
    "cg",
    "chol_factor",
    "chol_solve",
    "gemm",
    "generate",
    "gmres",
    "lu_factor",
    "lu_solve",
    "make_rhs",
    "solve",
]
