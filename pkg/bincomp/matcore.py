"""Dense symmetric linear algebra with explicit tolerances.

Symmetric matrices are plain read-only ``numpy`` arrays produced by
``as_symmetric``; every routine here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from bincomp.config_loader import DEFAULT_TOLERANCES, Tolerances
from bincomp.errors import (
    AsymmetricError,
    EmptyInputError,
    NonFiniteError,
    NotOrthonormalError,
    NotPsdError,
    ShapeError,
)

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def require_finite(x: np.ndarray, label: str = "matrix") -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{label} contains NaN or Inf entries")


def as_symmetric(x, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Validate a square matrix and return its read-only symmetrization (X + Xᵗ)/2."""
    arr = np.array(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ShapeError(f"expected a nonempty square matrix, got shape {arr.shape}")
    require_finite(arr)

    scale = float(np.max(np.abs(arr)))
    asym = float(np.max(np.abs(arr - arr.T)))
    if scale > 0 and asym > tol.asym_tol * scale:
        raise AsymmetricError(
            f"matrix is not symmetric: max |X - Xᵗ| = {asym:.3e} exceeds {tol.asym_tol:.1e} * {scale:.3e}"
        )

    sym = (arr + arr.T) / 2.0
    sym.flags.writeable = False
    return sym


def sym_eig(x) -> EigDecomposition:
    """Eigendecomposition with eigenvalues descending and a fixed eigenvector sign.

    Each eigenvector is flipped so that its entry of largest magnitude is
    nonnegative (lowest index wins a tie).
    """
    arr = np.asarray(x, dtype=float)
    require_finite(arr)
    values, vectors = scipy.linalg.eigh(arr)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[pivots, np.arange(vectors.shape[1])] < 0, -1.0, 1.0)
    vectors *= signs

    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigDecomposition(eigenvalues=values, eigenvectors=vectors)


def numerical_rank(x, tol: Tolerances = DEFAULT_TOLERANCES) -> int:
    arr = np.asarray(x, dtype=float)
    require_finite(arr)
    values = scipy.linalg.eigvalsh(arr)
    largest = float(np.max(np.abs(values))) if values.size else 0.0
    if largest == 0.0:
        return 0
    return int(np.count_nonzero(np.abs(values) > tol.rank_rel_tol * largest))


def check_psd(values: np.ndarray, tol: Tolerances, label: str = "matrix") -> None:
    """Raise NotPsdError when the spectrum dips below -psd_tol * λ_max."""
    largest = float(np.max(values)) if values.size else 0.0
    smallest = float(np.min(values)) if values.size else 0.0
    if smallest < -tol.psd_tol * max(largest, 0.0) and smallest < 0.0:
        raise NotPsdError(
            f"{label} is not positive semidefinite: λ_min = {smallest:.3e}, λ_max = {largest:.3e}"
        )


def orth_basis(x, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Orthonormal basis (n x r) for the range of a PSD matrix."""
    decomp = sym_eig(x)
    check_psd(decomp.eigenvalues, tol)
    largest = float(decomp.eigenvalues[0])
    if largest <= 0.0:
        return np.zeros((decomp.eigenvectors.shape[0], 0))
    rank = int(np.count_nonzero(decomp.eigenvalues > tol.rank_rel_tol * largest))
    return np.array(decomp.eigenvectors[:, :rank])


def orth_projector(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    require_finite(q, "basis")
    gram = q.T @ q
    if gram.size and np.max(np.abs(gram - np.eye(q.shape[1]))) > 1e-8:
        raise NotOrthonormalError("basis columns are not orthonormal within 1e-8")
    projector = q @ q.T
    projector = (projector + projector.T) / 2.0
    projector.flags.writeable = False
    return projector


def _svec_indices(n: int) -> Tuple[np.ndarray, np.ndarray]:
    # Column-major upper triangle: (0,0), (0,1), (1,1), (0,2), ...
    cols, rows = np.tril_indices(n)
    return rows, cols


def svec(x) -> np.ndarray:
    """Isometric vectorization: <svec(X), svec(Y)> = trace(XY)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ShapeError(f"svec expects a square matrix, got shape {arr.shape}")
    require_finite(arr)
    rows, cols = _svec_indices(arr.shape[0])
    out = arr[rows, cols].copy()
    off = rows != cols
    out[off] *= _SQRT2
    return out


def smat(v) -> np.ndarray:
    vec = np.asarray(v, dtype=float)
    require_finite(vec, "vector")
    n = int(round((np.sqrt(8 * vec.size + 1) - 1) / 2))
    if n * (n + 1) // 2 != vec.size:
        raise ShapeError(f"length {vec.size} is not a triangular number")
    rows, cols = _svec_indices(n)
    values = vec.copy()
    off = rows != cols
    values[off] /= _SQRT2
    out = np.zeros((n, n))
    out[rows, cols] = values
    out[cols, rows] = values
    return out


def rrqr_select(vectors: Sequence[np.ndarray], tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[int, ...]:
    """Indices of a maximal linearly independent subset, by greedy column pivoting.

    Each step takes the remaining vector with the largest residual norm
    (lowest index on ties) and projects it out of the others. Selection stops
    once every residual is at most rank_rel_tol times the largest input norm.
    """
    if len(vectors) == 0:
        raise EmptyInputError("rrqr_select needs at least one vector")
    columns = np.column_stack([np.asarray(v, dtype=float).ravel() for v in vectors])
    require_finite(columns, "vectors")

    residual = columns.copy()
    largest = float(np.max(np.linalg.norm(columns, axis=0)))
    if largest == 0.0:
        return ()

    selected: list[int] = []
    available = np.ones(columns.shape[1], dtype=bool)
    for _ in range(min(columns.shape)):
        norms = np.where(available, np.linalg.norm(residual, axis=0), -1.0)
        pivot = int(np.argmax(norms))
        if norms[pivot] <= tol.rank_rel_tol * largest:
            break
        q = residual[:, pivot] / norms[pivot]
        # Project twice (reorthogonalization).
        for _ in range(2):
            residual -= np.outer(q, q @ residual)
        available[pivot] = False
        residual[:, pivot] = 0.0
        selected.append(pivot)

    return tuple(sorted(selected))
