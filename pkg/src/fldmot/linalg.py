"""Dense symmetric linear algebra: Cholesky, symmetric and generalized
symmetric-definite eigendecomposition, and cosine similarity primitives.

The eigensolver is Householder tridiagonalization followed by implicit-shift
QL with eigenvectors accumulated alongside, capped at 30 sweeps per
eigenvalue.  The generalized problem A w = lambda B w is reduced through the
Cholesky factor of B, solved as a standard symmetric problem, and
back-transformed, which leaves the eigenvectors B-orthonormal.

All functions are pure: inputs are never modified and no state is shared, so
they are safe to call from any number of threads.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SolverDivergedError,
    ZeroVectorError,
)

MAX_QL_SWEEPS = 30
SYMMETRY_RTOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues sorted descending; eigenvectors as the matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square_matrix(m, name: str) -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _require_symmetric(a: np.ndarray, name: str) -> None:
    scale = 1.0 + np.abs(a).max(initial=0.0)
    if np.abs(a - a.T).max(initial=0.0) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric within tolerance")


def _fix_column_signs(vectors: np.ndarray) -> np.ndarray:
    # determinism convention: first nonzero component of each column >= 0
    nonzero = vectors != 0.0
    first = nonzero.argmax(axis=0)
    lead = vectors[first, np.arange(vectors.shape[1])]
    flip = (lead < 0.0) & nonzero.any(axis=0)
    vectors[:, flip] = -vectors[:, flip]
    return vectors


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Raises ZeroVectorError when either vector has zero norm and
    DimensionMismatchError when lengths differ.
    """
    ua = np.asarray(u, dtype=np.float64).ravel()
    va = np.asarray(v, dtype=np.float64).ravel()
    if ua.shape != va.shape:
        raise DimensionMismatchError(
            f"cosine of vectors with dims {ua.shape[0]} and {va.shape[0]}"
        )
    nu = np.linalg.norm(ua)
    nv = np.linalg.norm(va)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(ua @ va) / (nu * nv))))


def cosine_matrix(a, b) -> np.ndarray:
    """Pairwise cosine similarities between the rows of a and the rows of b."""
    am = np.asarray(a, dtype=np.float64)
    bm = np.asarray(b, dtype=np.float64)
    if am.shape[1] != bm.shape[1]:
        raise DimensionMismatchError(
            f"cosine_matrix dims {am.shape[1]} vs {bm.shape[1]}"
        )
    na = np.linalg.norm(am, axis=1)
    nb = np.linalg.norm(bm, axis=1)
    if (na == 0.0).any() or (nb == 0.0).any():
        raise ZeroVectorError("cosine of a zero vector is undefined")
    sims = (am / na[:, None]) @ (bm / nb[:, None]).T
    return np.clip(sims, -1.0, 1.0)


def cholesky_spd(m) -> np.ndarray:
    """Lower-triangular L with m = L @ L.T for symmetric positive-definite m.

    Raises NotPositiveDefiniteError (reporting the failing pivot index) when
    a pivot is not strictly positive.
    """
    a = _as_square_matrix(m, "cholesky input")
    _require_symmetric(a, "cholesky input")
    work = a.copy()
    pivot = _kernels.cholesky_lower(work)
    if pivot >= 0:
        raise NotPositiveDefiniteError(int(pivot))
    return work


def sym_eig(m) -> EigenResult:
    """Full eigendecomposition of a symmetric matrix.

    Eigenvalues are returned in descending order with orthonormal
    eigenvectors in matching columns; each eigenvector's first nonzero
    component is non-negative.  Raises SolverDivergedError if any eigenvalue
    fails to converge within the sweep cap.
    """
    a = _as_square_matrix(m, "sym_eig input")
    _require_symmetric(a, "sym_eig input")
    n = a.shape[0]
    work = a.copy()
    d = np.empty(n)
    e = np.empty(n)
    u = np.empty(n)
    p = np.empty(n)
    _kernels.tridiagonalize(work, d, e, u, p)
    qt = np.empty((n, n))
    _kernels.accumulate_q_rows(work, qt, u)
    status = _kernels.ql_implicit(d, e, qt, MAX_QL_SWEEPS)
    if status != 0:
        raise SolverDivergedError(
            f"QL sweep cap ({MAX_QL_SWEEPS}) exceeded for eigenvalue {status - 1}"
        )
    order = np.argsort(-d, kind="stable")
    values = d[order]
    vectors = np.ascontiguousarray(qt[order].T)
    return EigenResult(values, _fix_column_signs(vectors))


def generalized_eig(a, b) -> EigenResult:
    """Solve A w = lambda B w for symmetric A and symmetric positive-definite B.

    Reduction: B = L L^T, then the standard symmetric problem on
    L^-1 A L^-T, then back-transform W = L^-T U.  Eigenvalues descend and the
    eigenvectors satisfy w_i^T B w_j = delta_ij up to rounding.
    """
    am = _as_square_matrix(a, "generalized_eig A")
    bm = _as_square_matrix(b, "generalized_eig B")
    if am.shape != bm.shape:
        raise DimensionMismatchError(
            f"generalized_eig shapes {am.shape} vs {bm.shape}"
        )
    _require_symmetric(am, "generalized_eig A")
    lo = cholesky_spd(bm)
    half = _kernels.solve_lower(lo, am)                       # L^-1 A
    reduced = _kernels.solve_lower(lo, np.ascontiguousarray(half.T))
    reduced = (reduced + reduced.T) * 0.5                     # kill rounding skew
    inner = sym_eig(reduced)
    vectors = _kernels.solve_lower_transpose(
        lo, np.ascontiguousarray(inner.eigenvectors)
    )
    return EigenResult(inner.eigenvalues, _fix_column_signs(vectors))
