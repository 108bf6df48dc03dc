from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from bincomp.config_loader import DEFAULT_TOLERANCES, Tolerances
from bincomp.schur import binary_schur_rank, schur_rank


@dataclass
class CheckResult:
    name: str
    passed: bool
    message: str


def reconstruct(components: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Σ τ_i c_i c_iᵗ for the columns c_i of `components`."""
    cols = np.asarray(components, dtype=float)
    return (cols * np.asarray(weights, dtype=float)) @ cols.T


class CertificateChecker:
    def __init__(self, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        self.tol = tol

    def check_correlation(self, matrix: np.ndarray, diag_tol: float = 1e-8) -> CheckResult:
        arr = np.asarray(matrix, dtype=float)
        diag_error = float(np.max(np.abs(np.diag(arr) - 1.0)))
        values = scipy.linalg.eigvalsh((arr + arr.T) / 2.0)
        floor = -self.tol.psd_tol * max(float(values[-1]), 0.0)
        if diag_error > diag_tol:
            return CheckResult(
                name="elliptope",
                passed=False,
                message=f"Diagonal deviates from 1 by {diag_error:.3e}",
            )
        if float(values[0]) < floor:
            return CheckResult(
                name="elliptope",
                passed=False,
                message=f"Not positive semidefinite: λ_min = {values[0]:.3e}",
            )
        return CheckResult(
            name="elliptope",
            passed=True,
            message=f"Correlation matrix (diag error {diag_error:.1e}, λ_min = {values[0]:.1e})",
        )

    def check_weights(self, weights: np.ndarray, sum_tol: float = 1e-9) -> CheckResult:
        tau = np.asarray(weights, dtype=float)
        total = float(np.sum(tau))
        if tau.size == 0 or float(np.min(tau)) <= 0.0:
            return CheckResult(
                name="open_simplex",
                passed=False,
                message=f"Weights not strictly positive: min = {np.min(tau) if tau.size else 'n/a'}",
            )
        if abs(total - 1.0) > sum_tol:
            return CheckResult(
                name="open_simplex",
                passed=False,
                message=f"Weights sum to {total:.12f}",
            )
        return CheckResult(
            name="open_simplex",
            passed=True,
            message=f"{tau.size} positive weights summing to 1",
        )

    def check_residual(
        self,
        matrix: np.ndarray,
        components: np.ndarray,
        weights: np.ndarray,
        per_dim: float = 1e-6,
    ) -> CheckResult:
        arr = np.asarray(matrix, dtype=float)
        residual = float(np.linalg.norm(arr - reconstruct(components, weights)))
        bound = per_dim * arr.shape[0]
        passed = residual <= bound
        return CheckResult(
            name="reconstruction",
            passed=passed,
            message=f"‖A - Σ τ c cᵗ‖_F = {residual:.3e} ({'<=' if passed else '>'} {bound:.1e})",
        )

    def check_sign_schur(self, components: np.ndarray) -> CheckResult:
        achieved, required = schur_rank(components, self.tol)
        passed = achieved == required and required <= np.asarray(components).shape[0]
        return CheckResult(
            name="schur_independent",
            passed=passed,
            message=f"Schur family rank {achieved} of {required} required",
        )

    def check_binary_schur(self, components: np.ndarray) -> CheckResult:
        achieved, required = binary_schur_rank(components, self.tol)
        passed = achieved == required and required <= np.asarray(components).shape[0]
        return CheckResult(
            name="binary_schur_independent",
            passed=passed,
            message=f"Binary Schur family rank {achieved} of {required} required",
        )
