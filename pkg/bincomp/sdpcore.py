"""Dense semidefinite programs and the spectral deflation step.

The solver handles problems of the form

    maximize   trace(C X)
    subject to trace(A_k X) = b_k,   k = 1..m,
               X ⪰ 0,

with an infeasible primal-dual path-following method: HKM search direction,
Mehrotra predictor-corrector, separate primal and dual step lengths.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from bincomp.config_loader import DEFAULT_TOLERANCES, SolverOptions, Tolerances
from bincomp.errors import (
    EmptyInputError,
    NoFiniteBoundError,
    NotPsdError,
    NumericalBreakdownError,
    RangeMismatchError,
    RankDegenerateError,
    SdpError,
    SdpInfeasibleError,
    ShapeError,
)
from bincomp.matcore import as_symmetric, check_psd, orth_basis, rrqr_select, svec

log = logging.getLogger(__name__)

_STALL_WINDOW = 30


class SdpStatus(str, Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SdpConstraint:
    matrix: np.ndarray
    rhs: float


@dataclass(frozen=True)
class SdpProblem:
    objective: np.ndarray
    constraints: Tuple[SdpConstraint, ...]

    def __post_init__(self) -> None:
        objective = as_symmetric(self.objective)
        if not self.constraints:
            raise EmptyInputError("an SDP needs at least one equality constraint")
        checked = []
        for index, constraint in enumerate(self.constraints):
            matrix = as_symmetric(constraint.matrix)
            if matrix.shape != objective.shape:
                raise ShapeError(
                    f"constraint {index} has shape {matrix.shape}, objective has {objective.shape}"
                )
            rhs = float(constraint.rhs)
            if not np.isfinite(rhs):
                raise ShapeError(f"constraint {index} has a non-finite right-hand side")
            checked.append(SdpConstraint(matrix=matrix, rhs=rhs))
        object.__setattr__(self, "objective", objective)
        object.__setattr__(self, "constraints", tuple(checked))

    @property
    def dim(self) -> int:
        return int(self.objective.shape[0])

    def stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        matrices = np.stack([c.matrix for c in self.constraints])
        rhs = np.array([c.rhs for c in self.constraints])
        return matrices, rhs


def build_problem(objective, constraints: Sequence[Tuple[np.ndarray, float]]) -> SdpProblem:
    return SdpProblem(
        objective=objective,
        constraints=tuple(SdpConstraint(matrix=m, rhs=b) for m, b in constraints),
    )


@dataclass(frozen=True)
class SdpSolution:
    x_star: np.ndarray
    objective_value: float
    primal_residual: float
    dual_residual: float
    duality_gap: float
    min_eig: float
    iterations: int
    status: SdpStatus


@dataclass(frozen=True)
class SolverIterate:
    iteration: int
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float


IterationHook = Callable[[SolverIterate], None]


class InteriorPointSolver:
    """One solver per thread: `solve` keeps its workspace on the instance."""

    def __init__(self, options: Optional[SolverOptions] = None, on_iteration: Optional[IterationHook] = None) -> None:
        self.options = options or SolverOptions()
        self.on_iteration = on_iteration
        self._best: Optional[SdpSolution] = None
        self._best_merit = np.inf

    def solve(self, problem: SdpProblem, face: Optional[np.ndarray] = None) -> SdpSolution:
        """Solve `problem`; with `face`, solve over X = U Y Uᵗ and lift the result back.

        `face` must be an orthonormal basis U of a face holding every feasible
        point. Problems whose feasible set has no positive definite point
        (diag(X) = e with trace(PX) = n pins X to range(P)) need it.
        """
        if face is None:
            return self._solve(problem)
        basis = np.asarray(face, dtype=float)
        try:
            solution = self._solve(restrict_to_face(problem, basis))
        except SdpError as exc:
            if exc.solution is not None:
                exc.solution = _lift(problem, basis, exc.solution)
            raise
        return _lift(problem, basis, solution)

    def _solve(self, problem: SdpProblem) -> SdpSolution:
        opts = self.options
        a, b = problem.stacked()
        m, d = a.shape[0], problem.dim
        a_flat = a.reshape(m, -1)
        c_min = -np.asarray(problem.objective)  # minimization form

        b_scale = max(1.0, float(np.max(np.abs(b))))
        c_scale = 1.0 + float(np.linalg.norm(c_min))
        infeasible_tol = max(1e-5, 100.0 * opts.feasibility_tol) * b_scale

        x, y, z = self._initial_point(problem, a, b)
        self._best, self._best_merit = None, np.inf
        residual_history: list[float] = []

        for iteration in range(1, opts.max_iterations + 1):
            rp = b - a_flat @ x.ravel()
            rd = c_min - np.tensordot(y, a, axes=1) - z
            primal_obj = -float(np.sum(c_min * x))
            dual_obj = -float(b @ y)
            gap = float(np.sum(x * z))
            pres = float(np.max(np.abs(rp)))
            dres = float(np.linalg.norm(rd)) / c_scale

            log.debug(
                "it=%d pobj=%.8e dobj=%.8e gap=%.2e pres=%.2e dres=%.2e",
                iteration, primal_obj, dual_obj, gap, pres, dres,
            )
            if self.on_iteration is not None:
                self.on_iteration(SolverIterate(iteration, primal_obj, dual_obj, gap, pres, dres))

            gap_ok = gap <= opts.duality_gap_tol * (1.0 + abs(primal_obj))
            pres_ok = pres <= opts.feasibility_tol * b_scale
            dres_ok = dres <= opts.feasibility_tol
            self._remember(x, primal_obj, pres, dres, gap, iteration, b_scale)
            if gap_ok and pres_ok and dres_ok:
                return self._solution(x, primal_obj, pres, dres, gap, iteration, SdpStatus.OPTIMAL)

            residual_history.append(pres / b_scale)
            if self._stalled(residual_history, infeasible_tol / b_scale):
                raise SdpInfeasibleError(
                    f"primal residual stuck at {pres:.3e} after {iteration} iterations", self._best
                )

            try:
                x, y, z = self._step(x, y, z, a, a_flat, rp, rd)
            except (np.linalg.LinAlgError, ValueError, NumericalBreakdownError) as exc:
                best = self._best
                if best is not None and best.primal_residual > infeasible_tol:
                    raise SdpInfeasibleError(
                        f"primal residual not reducible ({best.primal_residual:.3e})", best
                    ) from exc
                raise NumericalBreakdownError(f"KKT system breakdown at iteration {iteration}: {exc}", best) from exc

        best = self._best
        assert best is not None
        if best.primal_residual > infeasible_tol:
            raise SdpInfeasibleError(f"primal residual not reducible ({best.primal_residual:.3e})", best)
        log.debug("iteration limit reached; returning best iterate (pres=%.2e)", best.primal_residual)
        return best

    def _initial_point(self, problem: SdpProblem, a: np.ndarray, b: np.ndarray):
        d = problem.dim
        traces = np.trace(a, axis1=1, axis2=2)
        if self.options.initial_scale is not None:
            alpha = float(self.options.initial_scale)
        else:
            # Least-squares fit of alpha*I to the constraints; exact when the
            # constraints admit a feasible multiple of the identity.
            denom = float(traces @ traces)
            alpha = float(b @ traces) / denom if denom > 0 else 0.0
            if alpha <= 0:
                alpha = float(np.mean(b)) / d
            if alpha <= 0:
                alpha = 1.0
        eta = max(1.0, (1.0 + float(np.linalg.norm(problem.objective))) / np.sqrt(d))
        return alpha * np.eye(d), np.zeros(a.shape[0]), eta * np.eye(d)

    def _step(self, x, y, z, a, a_flat, rp, rd):
        d = x.shape[0]
        gamma = self.options.step_fraction
        identity = np.eye(d)

        z_inv = scipy.linalg.cho_solve(scipy.linalg.cho_factor(z, lower=True), identity)
        z_inv = (z_inv + z_inv.T) / 2.0
        g = np.matmul(np.matmul(x, a), z_inv)
        schur = a_flat @ g.reshape(a.shape[0], -1).T
        schur = (schur + schur.T) / 2.0
        factor = _factor_schur(schur)

        xz = x @ z
        mu = float(np.trace(xz)) / d

        # Predictor: affine-scaling direction.
        dx, dy, dz = _direction(-xz, x, z_inv, a, a_flat, factor, rp, rd)
        alpha_p = min(1.0, _max_step(x, dx))
        alpha_d = min(1.0, _max_step(z, dz))
        predicted = float(np.sum((x + alpha_p * dx) * (z + alpha_d * dz)))
        sigma = float(np.clip((predicted / (d * mu)) ** 3, 0.0, 1.0)) if mu > 0 else 0.0

        # Corrector with the second-order term.
        target = sigma * mu * identity - xz - dx @ dz
        dx, dy, dz = _direction(target, x, z_inv, a, a_flat, factor, rp, rd)
        alpha_p = min(1.0, gamma * _max_step(x, dx))
        alpha_d = min(1.0, gamma * _max_step(z, dz))

        x = x + alpha_p * dx
        z = z + alpha_d * dz
        return (x + x.T) / 2.0, y + alpha_d * dy, (z + z.T) / 2.0

    def _remember(self, x, primal_obj, pres, dres, gap, iteration, b_scale) -> None:
        merit = max(pres / b_scale, dres, gap / (1.0 + abs(primal_obj)))
        if merit < self._best_merit:
            self._best_merit = merit
            self._best = self._solution(x, primal_obj, pres, dres, gap, iteration, SdpStatus.MAX_ITERATIONS)

    @staticmethod
    def _solution(x, primal_obj, pres, dres, gap, iteration, status) -> SdpSolution:
        x_star = (x + x.T) / 2.0
        x_star.flags.writeable = False
        return SdpSolution(
            x_star=x_star,
            objective_value=primal_obj,
            primal_residual=pres,
            dual_residual=dres,
            duality_gap=gap,
            min_eig=float(scipy.linalg.eigvalsh(x_star)[0]),
            iterations=iteration,
            status=status,
        )

    @staticmethod
    def _stalled(history: list[float], threshold: float) -> bool:
        if len(history) <= _STALL_WINDOW or history[-1] <= threshold:
            return False
        return history[-1] > 0.99 * min(history[:-_STALL_WINDOW])


def _factor_schur(schur: np.ndarray):
    try:
        return scipy.linalg.cho_factor(schur, lower=True)
    except np.linalg.LinAlgError:
        bump = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(schur)))))
        log.debug("Schur complement not positive definite; regularizing by %.1e", bump)
        try:
            return scipy.linalg.cho_factor(schur + bump * np.eye(schur.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdownError(f"Schur complement is indefinite after regularization: {exc}") from exc


def _direction(target, x, z_inv, a, a_flat, factor, rp, rd):
    """Solve  dX Z + X dZ = target,  A(dX) = rp,  Aᵗ(dy) + dZ = rd."""
    v = (target - x @ rd) @ z_inv
    dy = scipy.linalg.cho_solve(factor, rp - a_flat @ v.ravel())
    dz = rd - np.tensordot(dy, a, axes=1)
    dx = (target - x @ dz) @ z_inv
    return (dx + dx.T) / 2.0, dy, dz


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha*dx ⪰ 0 (x positive definite)."""
    chol = scipy.linalg.cholesky(x, lower=True)
    w = scipy.linalg.solve_triangular(chol, dx, lower=True)
    w = scipy.linalg.solve_triangular(chol, w.T, lower=True)
    smallest = float(scipy.linalg.eigvalsh((w + w.T) / 2.0)[0])
    if smallest >= 0:
        return np.inf
    return -1.0 / smallest


def restrict_to_face(problem: SdpProblem, face: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> SdpProblem:
    """The same program over k x k matrices Y with X = U Y Uᵗ.

    Constraints that become linearly dependent on the face are dropped.
    """
    u = np.asarray(face, dtype=float)
    if u.ndim != 2 or u.shape[0] != problem.dim or u.shape[1] == 0:
        raise ShapeError(f"face basis has shape {u.shape}, problem dimension is {problem.dim}")
    restricted = [(u.T @ c.matrix @ u, c.rhs) for c in problem.constraints]
    keep = rrqr_select([svec((m + m.T) / 2.0) for m, _ in restricted], tol)
    if not keep:
        raise EmptyInputError("every constraint vanishes on the face")
    objective = u.T @ problem.objective @ u
    return build_problem((objective + objective.T) / 2.0, [restricted[i] for i in keep])


def _lift(problem: SdpProblem, u: np.ndarray, solution: SdpSolution) -> SdpSolution:
    x = u @ solution.x_star @ u.T
    x = (x + x.T) / 2.0
    a, b = problem.stacked()
    residual = float(np.max(np.abs(b - a.reshape(a.shape[0], -1) @ x.ravel())))
    x.flags.writeable = False
    return replace(solution, x_star=x, primal_residual=residual, min_eig=float(scipy.linalg.eigvalsh(x)[0]))


def solve_sdp(
    problem: SdpProblem,
    options: Optional[SolverOptions] = None,
    on_iteration: Optional[IterationHook] = None,
    face: Optional[np.ndarray] = None,
) -> SdpSolution:
    return InteriorPointSolver(options, on_iteration).solve(problem, face)


def certify_solution(problem: SdpProblem, solution: SdpSolution, feasibility_tol: float = 1e-7) -> bool:
    """Recompute the primal residual and the spectrum of X⋆ outside the solver."""
    a, b = problem.stacked()
    x = np.asarray(solution.x_star)
    residual = float(np.max(np.abs(b - a.reshape(a.shape[0], -1) @ x.ravel())))
    values = scipy.linalg.eigvalsh(x)
    largest = max(float(values[-1]), 0.0)
    return bool(
        residual <= feasibility_tol * max(1.0, float(np.max(np.abs(b))))
        and float(values[0]) >= -feasibility_tol * largest
    )


def deflate_zeta(m, y, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Largest zeta with zeta*M + (1 - zeta)*Y ⪰ 0, for rank-one Y inside range(M).

    Restrict to range(M) with an orthonormal basis Q, whiten with
    W = (QᵗMQ)^(-1/2) and read the bound off the eigenvalues lambda of
    W QᵗYQ W: every lambda > 1 caps zeta at lambda / (lambda - 1).
    """
    m_sym = as_symmetric(m, tol)
    y_sym = as_symmetric(y, tol)
    if m_sym.shape != y_sym.shape:
        raise ShapeError(f"M has shape {m_sym.shape} but Y has shape {y_sym.shape}")

    q = orth_basis(m_sym, tol)
    if q.shape[1] <= 1:
        raise RankDegenerateError("deflation needs rank(M) >= 2; a rank-one M has nothing left to remove")
    check_psd(scipy.linalg.eigvalsh(y_sym), tol, "Y")

    y_norm = float(np.linalg.norm(y_sym))
    outside = y_sym - q @ (q.T @ y_sym)
    if float(np.linalg.norm(outside)) > 1e-6 * y_norm:
        raise RangeMismatchError("range(Y) is not contained in range(M)")

    m_red = q.T @ m_sym @ q
    y_red = q.T @ y_sym @ q
    values, vectors = scipy.linalg.eigh((m_red + m_red.T) / 2.0)
    if float(values[0]) <= 0:
        raise NotPsdError("restricted M is not positive definite")
    whiten = (vectors / np.sqrt(values)) @ vectors.T
    lam = scipy.linalg.eigvalsh(whiten @ y_red @ whiten)

    above = lam[lam > 1.0 + tol.rank_rel_tol]
    if above.size == 0:
        raise NoFiniteBoundError("no eigenvalue above 1: the ray never leaves the PSD cone")
    return float(np.min(above / (above - 1.0)))
