"""Sign component decomposition of low-rank correlation matrices.

Two engines share one driver: the full engine solves each vertex-finding SDP
over n x n matrices, the compressed engine over k x k matrices in the
coordinates of an orthonormal basis of the current range. Both report the
decomposition in canonical form, so their outputs compare exactly.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from bincomp.certificate_checker import CertificateChecker, CheckResult, reconstruct
from bincomp.config_loader import DEFAULT_OPTIONS, DEFAULT_TOLERANCES, DecompositionOptions, Tolerances
from bincomp.errors import (
    BincompError,
    ConstraintSelectionFailedError,
    DecompositionFailed,
    DeflationFailedError,
    LargeResidualError,
    NotCorrelationError,
    NotInOpenSimplexError,
    NotRankOneError,
    NumericalBreakdownError,
    RankTooLargeError,
    RoundingFailedError,
    SdpError,
    SdpInfeasibleError,
    ShapeError,
)
from bincomp.matcore import (
    as_symmetric,
    check_psd,
    numerical_rank,
    orth_basis,
    orth_projector,
    rrqr_select,
    svec,
    sym_eig,
)
from bincomp.schur import as_sign_matrix, max_schur_rank
from bincomp.sdpcore import InteriorPointSolver, SdpProblem, SdpSolution, build_problem, deflate_zeta

log = logging.getLogger(__name__)

DIAG_TOL = 1e-10
MIN_WEIGHT = 1e-10


@dataclass(frozen=True)
class CorrelationMatrix:
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])


def as_correlation_matrix(x, tol: Tolerances = DEFAULT_TOLERANCES) -> CorrelationMatrix:
    """Validate a correlation matrix: unit diagonal within 1e-10 (then snapped) and PSD."""
    if isinstance(x, CorrelationMatrix):
        return x
    sym = np.array(as_symmetric(x, tol))
    diag_error = float(np.max(np.abs(np.diag(sym) - 1.0)))
    if diag_error > DIAG_TOL:
        raise NotCorrelationError(f"diagonal deviates from 1 by {diag_error:.3e}")
    np.fill_diagonal(sym, 1.0)
    check_psd(np.linalg.eigvalsh(sym), tol, "correlation matrix")
    sym.flags.writeable = False
    return CorrelationMatrix(matrix=sym)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    rank: int
    objective: float
    zeta: float
    residual: float
    redraws: int
    solver_iterations: int
    solver_status: str


@dataclass(frozen=True)
class SignDecomposition:
    components: np.ndarray  # n x r, entries ±1, canonical
    weights: np.ndarray  # r, descending
    residual_fro: float
    algorithm: str = "scd-full"
    trace: Tuple[IterationRecord, ...] = ()
    solver_stats: Dict[str, int] = field(default_factory=dict)
    timings_ms: Dict[str, float] = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return int(self.components.shape[1])

    def reconstruct(self) -> np.ndarray:
        return reconstruct(self.components, self.weights)

    def pairs(self) -> List[Tuple[float, Tuple[int, ...]]]:
        return [(float(w), tuple(int(v) for v in col)) for w, col in zip(self.weights, self.components.T)]


@dataclass(frozen=True)
class VerificationReport:
    residual: float
    schur_independent: bool
    checks: Tuple[CheckResult, ...] = ()

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


IterationHook = Callable[[IterationRecord], None]


def face_separator(a, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Projector P onto range(A); ψ(X) = trace(PX)/n exposes the face of A."""
    corr = as_correlation_matrix(a, tol)
    return orth_projector(orth_basis(corr.matrix, tol))


def separator_value(p: np.ndarray, x) -> float:
    arr = np.asarray(x, dtype=float)
    if arr.shape != p.shape:
        raise ShapeError(f"separator has shape {p.shape} but X has shape {arr.shape}")
    return float(np.sum(p * arr)) / p.shape[0]


def canonicalize_signs(s) -> np.ndarray:
    """Flip each column so its first nonzero entry is +1."""
    signs = as_sign_matrix(s)
    # sign entries are never zero, so the first row decides
    return signs * np.where(signs[0] < 0, -1, 1)


def canonical_order(components: np.ndarray, weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sort columns by weight descending, ties broken by the column entries ascending."""
    cols = np.asarray(components)
    tau = np.asarray(weights, dtype=float)
    order = sorted(range(cols.shape[1]), key=lambda i: (-tau[i], tuple(int(v) for v in cols[:, i])))
    return cols[:, order], tau[order]


def extract_sign_vector(x, tol: Tolerances = DEFAULT_TOLERANCES, basis: Optional[np.ndarray] = None) -> np.ndarray:
    """Factor a numerically rank-one X ≈ ssᵗ and round to a sign vector with s[0] = +1.

    With `basis` (n x k, orthonormal columns), X is a k x k matrix in basis
    coordinates and the factor is lifted back to R^n before rounding.
    """
    arr = np.asarray(x, dtype=float)
    decomp = sym_eig(arr)
    lam = decomp.eigenvalues
    if lam[0] <= 0:
        raise NotRankOneError("largest eigenvalue is not positive")
    if lam.size > 1 and lam[1] > tol.rank_one_ratio * lam[0]:
        raise NotRankOneError(f"second eigenvalue {lam[1]:.3e} exceeds {tol.rank_one_ratio:.0e} * {lam[0]:.3e}")

    u = np.sqrt(lam[0]) * decomp.eigenvectors[:, 0]
    full = arr
    if basis is not None:
        u = basis @ u
        full = basis @ arr @ basis.T

    deviation = float(np.max(np.abs(np.abs(u) - 1.0)))
    if deviation > tol.round_tol:
        raise RoundingFailedError(f"factor entries deviate from ±1 by up to {deviation:.3e}")

    s = np.where(u < 0, -1, 1).astype(np.int64)
    if s[0] < 0:
        s = -s
    error = float(np.max(np.abs(full - np.outer(s, s))))
    if error > tol.extraction_tol:
        raise RoundingFailedError(f"‖X - ssᵗ‖_max = {error:.3e} after rounding")
    return s


def solve_coefficients(a, s, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Least-squares weights τ with A = Σ τ_i s_i s_iᵗ, normalized to the open simplex."""
    corr = as_correlation_matrix(a, tol)
    signs = as_sign_matrix(s)
    n = corr.n
    if signs.shape[0] != n:
        raise ShapeError(f"components have {signs.shape[0]} rows, matrix is {n} x {n}")

    design = np.column_stack([svec(np.outer(col, col)) for col in signs.T.astype(float)])
    tau, *_ = np.linalg.lstsq(design, svec(corr.matrix), rcond=None)
    if float(np.min(tau)) <= MIN_WEIGHT:
        raise NotInOpenSimplexError(f"weight {np.min(tau):.3e} is not strictly positive")
    residual = float(np.linalg.norm(corr.matrix - reconstruct(signs, tau)))
    if residual > tol.residual_tol * n:
        raise LargeResidualError(f"reconstruction residual {residual:.3e} exceeds {tol.residual_tol * n:.1e}")
    return tau / float(np.sum(tau))


def deflate_component(a: np.ndarray, s: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[np.ndarray, float]:
    """Remove the component ssᵗ from A: returns (ζA + (1 - ζ)ssᵗ, ζ) with unit diagonal."""
    y = np.outer(s, s).astype(float)
    rank = numerical_rank(a, tol)
    zeta = deflate_zeta(a, y, tol)
    deflated = zeta * np.asarray(a) + (1.0 - zeta) * y
    deflated = (deflated + deflated.T) / 2.0
    np.fill_diagonal(deflated, 1.0)
    new_rank = numerical_rank(deflated, tol)
    if new_rank != rank - 1:
        raise DeflationFailedError(f"rank went from {rank} to {new_rank}, expected {rank - 1}")
    return deflated, zeta


class _FullSpace:
    algorithm = "scd-full"

    def __init__(self, corr: CorrelationMatrix, options: DecompositionOptions) -> None:
        self.tol = options.tolerances
        self.current = np.array(corr.matrix)
        self.dim = corr.n
        self.face: Optional[np.ndarray] = None

    def problem(self, g: np.ndarray) -> SdpProblem:
        n = self.dim
        self.face = orth_basis(self.current, self.tol)
        projector = orth_projector(self.face)
        candidates = []
        for j in range(n):
            unit = np.zeros((n, n))
            unit[j, j] = 1.0
            candidates.append((unit, 1.0))
        candidates.append((projector, float(n)))
        keep = _select_constraints([m for m, _ in candidates], self.tol)
        return build_problem(np.outer(g, g), [candidates[i] for i in keep])

    def extract(self, solution: SdpSolution) -> np.ndarray:
        # The solver works on range(A), so X⋆ = U Y Uᵗ and UᵗX⋆U recovers Y.
        basis = self.face if self.face is not None else orth_basis(self.current, self.tol)
        compressed = basis.T @ solution.x_star @ basis
        return extract_sign_vector((compressed + compressed.T) / 2.0, self.tol, basis=basis)

    def deflate(self, s: np.ndarray) -> float:
        self.current, zeta = deflate_component(self.current, s, self.tol)
        return zeta

    def final(self) -> np.ndarray:
        return extract_sign_vector(self.current, self.tol)


class _CompressedSpace:
    algorithm = "scd-compressed"
    face = None

    def __init__(self, corr: CorrelationMatrix, options: DecompositionOptions) -> None:
        self.tol = options.tolerances
        self.basis = orth_basis(corr.matrix, self.tol)
        reduced = self.basis.T @ corr.matrix @ self.basis
        self.reduced = (reduced + reduced.T) / 2.0

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    def problem(self, g: np.ndarray) -> SdpProblem:
        rows = [np.outer(q, q) for q in self.basis]
        keep = compressed_constraints(self.basis, self.tol)
        return build_problem(np.outer(g, g), [(rows[j], 1.0) for j in keep])

    def extract(self, solution: SdpSolution) -> np.ndarray:
        return extract_sign_vector(solution.x_star, self.tol, basis=self.basis)

    def deflate(self, s: np.ndarray) -> float:
        y = self.basis.T @ s.astype(float)
        zeta = deflate_zeta(self.reduced, np.outer(y, y), self.tol)
        deflated = zeta * self.reduced + (1.0 - zeta) * np.outer(y, y)
        w = orth_basis((deflated + deflated.T) / 2.0, self.tol)
        if w.shape[1] != self.dim - 1:
            raise DeflationFailedError(f"rank went from {self.dim} to {w.shape[1]}, expected {self.dim - 1}")
        self.basis = self.basis @ w
        reduced = w.T @ deflated @ w
        self.reduced = (reduced + reduced.T) / 2.0
        return zeta

    def final(self) -> np.ndarray:
        return extract_sign_vector(self.reduced, self.tol, basis=self.basis)


def _select_constraints(matrices: Sequence[np.ndarray], tol: Tolerances) -> Tuple[int, ...]:
    return rrqr_select([svec(m) for m in matrices], tol)


def compressed_constraints(basis: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[int, ...]:
    """Rows j whose q_jq_jᵗ form a maximal independent subset of the diagonal constraints."""
    k = basis.shape[1]
    keep = _select_constraints([np.outer(q, q) for q in basis], tol)
    expected = k * (k - 1) // 2 + 1
    if len(keep) < expected:
        raise ConstraintSelectionFailedError(
            f"only {len(keep)} independent constraints among {basis.shape[0]}, expected {expected}"
        )
    return keep


_REDRAWABLE = (NotRankOneError, RoundingFailedError, NumericalBreakdownError, SdpInfeasibleError)


def _decompose(
    engine_type,
    a,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions],
    on_iteration: Optional[IterationHook],
) -> SignDecomposition:
    opts = options or DEFAULT_OPTIONS
    tol = opts.tolerances
    corr = as_correlation_matrix(a, tol)
    n = corr.n

    rank = numerical_rank(corr.matrix, tol)
    capacity = max_schur_rank(n)
    if rank > capacity:
        raise DecompositionFailed(
            "rank_check",
            RankTooLargeError(f"rank {rank} exceeds max_schur_rank({n}) = {capacity}"),
        )

    engine = engine_type(corr, opts)
    solver = InteriorPointSolver(opts.solver)
    found: List[np.ndarray] = []
    trace: List[IterationRecord] = []
    stats = {"sdp_solves": 0, "sdp_iterations": 0, "redraws": 0}
    sdp_ms = 0.0
    deflation_ms = 0.0

    for iteration in range(1, rank):
        s: Optional[np.ndarray] = None
        solution: Optional[SdpSolution] = None
        last_error: Optional[BaseException] = None
        redraws = 0
        for _ in range(opts.max_redraws):
            g = rng.standard_normal(engine.dim)
            started = time.perf_counter()
            try:
                problem = engine.problem(g)
                solution = solver.solve(problem, face=engine.face)
                s = engine.extract(solution)
            except _REDRAWABLE as exc:
                last_error = exc
                best = getattr(exc, "solution", None)
                if isinstance(exc, SdpError) and best is not None:
                    try:
                        solution, s = best, engine.extract(best)
                    except _REDRAWABLE as inner:
                        last_error = inner
                if s is None:
                    redraws += 1
                    log.warning("round %d: redrawing direction (%s)", iteration, last_error)
            except BincompError as exc:
                raise DecompositionFailed("random_optimization", exc) from exc
            finally:
                sdp_ms += (time.perf_counter() - started) * 1000.0
                stats["sdp_solves"] += 1
            if s is not None:
                break
        stats["redraws"] += redraws
        if s is None or solution is None:
            raise DecompositionFailed("random_optimization", last_error)
        stats["sdp_iterations"] += solution.iterations

        started = time.perf_counter()
        try:
            zeta = engine.deflate(s)
        except BincompError as exc:
            raise DecompositionFailed("deflation", exc) from exc
        deflation_ms += (time.perf_counter() - started) * 1000.0

        found.append(s)
        record = IterationRecord(
            iteration=iteration,
            rank=rank - iteration + 1,
            objective=solution.objective_value,
            zeta=zeta,
            residual=solution.primal_residual,
            redraws=redraws,
            solver_iterations=solution.iterations,
            solver_status=solution.status.value,
        )
        trace.append(record)
        log.info("round %d: vertex found, objective %.6g, zeta %.9g", iteration, record.objective, zeta)
        if on_iteration is not None:
            on_iteration(record)

    try:
        found.append(engine.final())
    except BincompError as exc:
        raise DecompositionFailed("final_extraction", exc) from exc

    # Fixed column order before the solve keeps the weights independent of
    # the order in which vertices were found.
    components = canonicalize_signs(np.column_stack(found))
    order = sorted(range(components.shape[1]), key=lambda i: tuple(components[:, i]))
    components = components[:, order]
    try:
        weights = solve_coefficients(corr, components, tol)
    except BincompError as exc:
        raise DecompositionFailed("coefficients", exc) from exc

    components, weights = canonical_order(components, weights)
    components.flags.writeable = False
    weights.flags.writeable = False
    residual = float(np.linalg.norm(corr.matrix - reconstruct(components, weights)))
    return SignDecomposition(
        components=components,
        weights=weights,
        residual_fro=residual,
        algorithm=engine.algorithm,
        trace=tuple(trace),
        solver_stats=stats,
        timings_ms={"sdp": sdp_ms, "deflation": deflation_ms},
    )


def sign_component_decomposition(
    a,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions] = None,
    on_iteration: Optional[IterationHook] = None,
) -> SignDecomposition:
    return _decompose(_FullSpace, a, rng, options, on_iteration)


def scd_compressed(
    a,
    rng: np.random.Generator,
    options: Optional[DecompositionOptions] = None,
    on_iteration: Optional[IterationHook] = None,
) -> SignDecomposition:
    return _decompose(_CompressedSpace, a, rng, options, on_iteration)


def verify_decomposition(a, decomposition: SignDecomposition, tol: Tolerances = DEFAULT_TOLERANCES) -> VerificationReport:
    """Residual and Schur-independence certificate; never raises on a failed check."""
    arr = np.asarray(a.matrix if isinstance(a, CorrelationMatrix) else a, dtype=float)
    checker = CertificateChecker(tol)
    checks = (
        checker.check_residual(arr, decomposition.components, decomposition.weights),
        checker.check_weights(decomposition.weights),
        checker.check_sign_schur(decomposition.components),
    )
    residual = float(np.linalg.norm(arr - decomposition.reconstruct()))
    return VerificationReport(residual=residual, schur_independent=checks[2].passed, checks=checks)
