"""Binary component decomposition by reduction to the sign case.

H = Σ τ_i z_i z_iᵗ with z_i ∈ {0,1}^n is mapped to the correlation matrix
A = Σ τ_i F(z_i)F(z_i)ᵗ, F(z) = 2z - e, which is decomposed with the sign
algorithms. The signs of the recovered F(z_i) are then fixed from H.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from bincomp.certificate_checker import CertificateChecker, reconstruct
from bincomp.config_loader import DEFAULT_OPTIONS, DEFAULT_TOLERANCES, DecompositionOptions, Tolerances
from bincomp.errors import (
    DecompositionFailed,
    InvalidComponentsError,
    NotPsdAfterReductionError,
    NotPsdError,
    NotSchurIndependentError,
    ShapeError,
    SignResolutionFailedError,
)
from bincomp.matcore import as_symmetric, check_psd
from bincomp.scd import (
    CorrelationMatrix,
    IterationHook,
    SignDecomposition,
    VerificationReport,
    as_correlation_matrix,
    canonical_order,
    scd_compressed,
    sign_component_decomposition,
)

log = logging.getLogger(__name__)

METHODS = {"full": sign_component_decomposition, "compressed": scd_compressed}


@dataclass(frozen=True)
class BinaryDecomposition:
    components: np.ndarray  # n x r, entries 0/1
    weights: np.ndarray
    residual_fro: float
    sign_decomposition: Optional[SignDecomposition] = None
    flips: Tuple[int, ...] = ()

    @property
    def rank(self) -> int:
        return int(self.components.shape[1])

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self.components, self.weights)


def sign_to_binary(s) -> np.ndarray:
    arr = np.asarray(s)
    if arr.size == 0 or not np.all(np.isin(arr, (-1, 1))):
        raise InvalidComponentsError("sign entries must be exactly +1 or -1")
    return (arr.astype(np.int64) + 1) // 2


def binary_to_sign(z) -> np.ndarray:
    """The affine map F(z) = 2z - e."""
    arr = np.asarray(z)
    if arr.size == 0 or not np.all(np.isin(arr, (0, 1))):
        raise InvalidComponentsError("binary entries must be exactly 0 or 1")
    return 2 * arr.astype(np.int64) - 1


def centering_projector(n: int) -> np.ndarray:
    if n < 1:
        raise ShapeError(f"n must be positive, got {n}")
    r = np.eye(n) - np.full((n, n), 1.0 / n)
    r.flags.writeable = False
    return r


def as_psd_input(h, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    sym = as_symmetric(h, tol)
    check_psd(scipy.linalg.eigvalsh(sym), tol, "H")
    return sym


def bcd_to_scd_matrix(h, tol: Tolerances = DEFAULT_TOLERANCES) -> CorrelationMatrix:
    """The unique X with diag(X) = e and R(4H - X)R = 0.

    The kernel of X -> RXR is {exᵗ + xeᵗ}, so X = 4RHR + eyᵗ + yeᵗ with y
    fixed by the diagonal.
    """
    psd = as_psd_input(h, tol)
    n = psd.shape[0]
    r = centering_projector(n)
    g = 4.0 * (r @ psd @ r)
    g = (g + g.T) / 2.0
    y = (1.0 - np.diag(g)) / 2.0
    a = g + y[None, :] + y[:, None]
    np.fill_diagonal(a, 1.0)
    try:
        check_psd(scipy.linalg.eigvalsh(a), tol, "reduced matrix")
    except NotPsdError as exc:
        raise NotPsdAfterReductionError(str(exc)) from exc
    return as_correlation_matrix(a, tol)


def resolve_signs(
    h,
    a,
    decomposition: SignDecomposition,
    tol: Tolerances = DEFAULT_TOLERANCES,
    trace_factor: float = 2.0,
) -> np.ndarray:
    """Signs ξ with n Σ τ_i ξ_i s_i = (4H - A)e - trace_factor·trace(H)·e."""
    psd = np.asarray(h, dtype=float)
    corr = as_correlation_matrix(a, tol)
    n = psd.shape[0]
    ones = np.ones(n)

    design = n * decomposition.components.astype(float) * decomposition.weights
    rhs = (4.0 * psd - corr.matrix) @ ones - trace_factor * float(np.trace(psd)) * ones
    xi, *_ = np.linalg.lstsq(design, rhs, rcond=None)

    deviation = float(np.max(np.abs(np.abs(xi) - 1.0)))
    if deviation > tol.round_tol:
        raise SignResolutionFailedError(f"sign estimates deviate from ±1 by up to {deviation:.3e}")
    signs = np.where(xi < 0, -1, 1).astype(np.int64)
    residual = float(np.linalg.norm(design @ signs - rhs))
    if residual > tol.residual_tol * n:
        raise SignResolutionFailedError(f"rounded sign system leaves residual {residual:.3e}")
    return signs


def binary_component_decomposition(
    h,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions] = None,
    method: str = "full",
    on_iteration: Optional[IterationHook] = None,
) -> BinaryDecomposition:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(sorted(METHODS))}")
    opts = options or DEFAULT_OPTIONS
    tol = opts.tolerances
    psd = as_psd_input(h, tol)

    try:
        corr = bcd_to_scd_matrix(psd, tol)
    except NotPsdAfterReductionError as exc:
        raise DecompositionFailed("reduction", exc) from exc

    signed = METHODS[method](corr, rng, opts, on_iteration)

    try:
        flips = resolve_signs(psd, corr, signed, tol)
    except SignResolutionFailedError as exc:
        raise DecompositionFailed("sign_resolution", exc) from exc
    log.info("sign flips resolved: %s", flips.tolist())

    binary = sign_to_binary(signed.components * flips)
    components, weights = canonical_order(binary, signed.weights)
    components.flags.writeable = False
    result = BinaryDecomposition(
        components=components,
        weights=weights,
        residual_fro=float(np.linalg.norm(psd - reconstruct(components, weights))),
        sign_decomposition=signed,
        flips=tuple(int(v) for v in flips),
    )

    report = verify_binary_decomposition(psd, result, tol)
    if not report.passed:
        failed = "; ".join(check.message for check in report.checks if not check.passed)
        raise DecompositionFailed("certificate", NotSchurIndependentError(failed))
    return result


def verify_binary_decomposition(
    h,
    decomposition: BinaryDecomposition,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> VerificationReport:
    arr = np.asarray(h, dtype=float)
    checker = CertificateChecker(tol)
    checks = (
        checker.check_residual(arr, decomposition.components, decomposition.weights),
        checker.check_weights(decomposition.weights),
        checker.check_binary_schur(decomposition.components),
    )
    residual = float(np.linalg.norm(arr - decomposition.reconstruct()))
    return VerificationReport(residual=residual, schur_independent=checks[2].passed, checks=checks)
