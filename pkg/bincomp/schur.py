"""Schur independence of sign and binary families, capacity bounds and random families."""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Tuple

import numpy as np

from bincomp.config_loader import DEFAULT_TOLERANCES, Tolerances
from bincomp.errors import GenerationFailedError, InvalidComponentsError, RankTooLargeError
from bincomp.matcore import numerical_rank

MAX_REJECTION_ROUNDS = 1000


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream for a 64-bit seed; the same seed gives the same stream on every platform."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def as_sign_matrix(s) -> np.ndarray:
    arr = np.asarray(s)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidComponentsError(f"sign matrix must be a nonempty n x r array, got shape {arr.shape}")
    if not np.all(np.isin(arr, (-1, 1))):
        raise InvalidComponentsError("sign matrix entries must be exactly +1 or -1")
    return arr.astype(np.int64)


def as_binary_matrix(z) -> np.ndarray:
    arr = np.asarray(z)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidComponentsError(f"binary matrix must be a nonempty n x r array, got shape {arr.shape}")
    if not np.all(np.isin(arr, (0, 1))):
        raise InvalidComponentsError("binary matrix entries must be exactly 0 or 1")
    return arr.astype(np.int64)


def schur_family(s) -> np.ndarray:
    """Columns e, then s_i ⊙ s_j for i < j in lexicographic pair order."""
    signs = as_sign_matrix(s)
    n, r = signs.shape
    columns = [np.ones(n, dtype=np.int64)]
    columns.extend(signs[:, i] * signs[:, j] for i, j in combinations(range(r), 2))
    return np.column_stack(columns)


def binary_schur_family(z) -> np.ndarray:
    """Distinct products z_i ⊙ z_j, 0 ≤ i ≤ j ≤ r, with z_0 = e: e, z_i, then z_i ⊙ z_j for i < j."""
    binary = as_binary_matrix(z)
    n, r = binary.shape
    columns = [np.ones(n, dtype=np.int64)]
    columns.extend(binary[:, i] for i in range(r))
    columns.extend(binary[:, i] * binary[:, j] for i, j in combinations(range(r), 2))
    return np.column_stack(columns)


def sign_lift(z) -> np.ndarray:
    """Augmented sign family [e, F(z_1), ..., F(z_r)] with F(z) = 2z - e."""
    binary = as_binary_matrix(z)
    return np.column_stack([np.ones(binary.shape[0], dtype=np.int64), 2 * binary - 1])


def _gram_rank(family: np.ndarray, tol: Tolerances) -> int:
    f = family.astype(float)
    return numerical_rank(f.T @ f, tol)


def schur_rank(s, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[int, int]:
    """(rank achieved, rank required) for the sign Schur family."""
    family = schur_family(s)
    return _gram_rank(family, tol), family.shape[1]


def binary_schur_rank(z, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[int, int]:
    family = binary_schur_family(z)
    return _gram_rank(family, tol), family.shape[1]


def is_schur_independent_signs(s, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    family = schur_family(s)
    if family.shape[1] > family.shape[0]:
        return False
    achieved, required = _gram_rank(family, tol), family.shape[1]
    return achieved == required


def is_schur_independent_binary(z, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    family = binary_schur_family(z)
    if family.shape[1] > family.shape[0]:
        direct = False
    else:
        direct = _gram_rank(family, tol) == family.shape[1]
    lifted = is_schur_independent_signs(sign_lift(z), tol)
    assert direct == lifted, "binary Schur test disagrees with its sign-lift equivalent"
    return direct


def exact_integer_rank(family) -> int:
    """Rank of the column family over the rationals by exact elimination; slow, for verification."""
    rows = [[Fraction(int(v)) for v in row] for row in np.asarray(family).T]
    rank = 0
    n_cols = len(rows[0]) if rows else 0
    for col in range(n_cols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        lead = rows[rank][col]
        for i in range(rank + 1, len(rows)):
            factor = rows[i][col] / lead
            if factor != 0:
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def max_schur_rank(n: int) -> int:
    """Largest r with C(r, 2) + 1 <= n, i.e. floor((1 + sqrt(8n - 7)) / 2)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return (1 + math.isqrt(8 * n - 7)) // 2


def binary_capacity(n: int) -> int:
    """Largest r for which r binary components can be Schur independent in dimension n."""
    return max_schur_rank(n) - 1


def random_sign_family(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    if r < 1:
        raise ValueError(f"r must be positive, got {r}")
    capacity = max_schur_rank(n)
    if r > capacity:
        raise RankTooLargeError(f"r = {r} exceeds max_schur_rank({n}) = {capacity}")
    return rng.integers(0, 2, size=(n, r), dtype=np.int64) * 2 - 1


def random_schur_independent_signs(
    n: int,
    r: int,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_rounds: int = MAX_REJECTION_ROUNDS,
) -> np.ndarray:
    for _ in range(max_rounds):
        candidate = random_sign_family(n, r, rng)
        if _has_sign_duplicates(candidate):
            continue
        if is_schur_independent_signs(candidate, tol):
            return candidate
    raise GenerationFailedError(
        f"no Schur independent sign family with n = {n}, r = {r} after {max_rounds} draws"
    )


def random_binary_family_schur_independent(
    n: int,
    r: int,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_rounds: int = MAX_REJECTION_ROUNDS,
) -> np.ndarray:
    if r < 1:
        raise ValueError(f"r must be positive, got {r}")
    capacity = binary_capacity(n)
    if r > capacity:
        raise RankTooLargeError(f"r = {r} binary components exceed the capacity {capacity} at n = {n}")
    for _ in range(max_rounds):
        candidate = rng.integers(0, 2, size=(n, r), dtype=np.int64)
        if is_schur_independent_binary(candidate, tol):
            return candidate
    raise GenerationFailedError(
        f"no Schur independent binary family with n = {n}, r = {r} after {max_rounds} draws"
    )


def _has_sign_duplicates(s: np.ndarray) -> bool:
    canonical = s * np.where(s[0] < 0, -1, 1)
    return len({tuple(col) for col in canonical.T}) < s.shape[1]
