from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bincomp.config_loader import DEFAULT_TOLERANCES, Tolerances
from bincomp.errors import GenerationFailedError
from bincomp.schur import random_binary_family_schur_independent, random_schur_independent_signs

MIN_WEIGHT = 0.01
MAX_WEIGHT_DRAWS = 10_000


@dataclass(frozen=True)
class Instance:
    kind: str  # "sign" or "binary"
    components: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return int(self.components.shape[0])

    @property
    def r(self) -> int:
        return int(self.components.shape[1])


class InstanceGenerator:
    def __init__(self, tol: Tolerances = DEFAULT_TOLERANCES, min_weight: float = MIN_WEIGHT) -> None:
        self.tol = tol
        self.min_weight = min_weight

    def random_weights(self, r: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the simplex, redrawn until every mass is at least `min_weight`."""
        if r * self.min_weight >= 1.0:
            raise GenerationFailedError(f"{r} weights cannot all reach {self.min_weight}")
        for _ in range(MAX_WEIGHT_DRAWS):
            tau = rng.dirichlet(np.ones(r))
            if float(np.min(tau)) >= self.min_weight:
                return tau
        raise GenerationFailedError(f"no weights with minimum mass {self.min_weight} after {MAX_WEIGHT_DRAWS} draws")

    def sign_instance(self, n: int, r: int, rng: np.random.Generator) -> Instance:
        components = random_schur_independent_signs(n, r, rng, self.tol)
        weights = self.random_weights(r, rng)
        return Instance("sign", components, weights, _mix(components, weights, unit_diagonal=True))

    def binary_instance(self, n: int, r: int, rng: np.random.Generator) -> Instance:
        components = random_binary_family_schur_independent(n, r, rng, self.tol)
        weights = self.random_weights(r, rng)
        return Instance("binary", components, weights, _mix(components, weights, unit_diagonal=False))

    def generate(self, kind: str, n: int, r: int, rng: np.random.Generator) -> Instance:
        if kind == "sign":
            return self.sign_instance(n, r, rng)
        if kind == "binary":
            return self.binary_instance(n, r, rng)
        raise ValueError(f"Unsupported instance kind `{kind}`. Use `sign` or `binary`.")


def _mix(components: np.ndarray, weights: np.ndarray, unit_diagonal: bool) -> np.ndarray:
    cols = components.astype(float)
    matrix = (cols * weights) @ cols.T
    matrix = (matrix + matrix.T) / 2.0
    if unit_diagonal:
        np.fill_diagonal(matrix, 1.0)
    return matrix
