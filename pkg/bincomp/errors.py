from __future__ import annotations

from typing import Any, Optional


class BincompError(Exception):
    """Base class for every domain failure raised by bincomp."""


class NonFiniteError(BincompError, ValueError):
    pass


class ShapeError(BincompError, ValueError):
    pass


class AsymmetricError(BincompError, ValueError):
    pass


class NotPsdError(BincompError, ValueError):
    pass


class NotOrthonormalError(BincompError, ValueError):
    pass


class EmptyInputError(BincompError, ValueError):
    pass


class NotCorrelationError(BincompError, ValueError):
    pass


class InvalidComponentsError(BincompError, ValueError):
    pass


class RankTooLargeError(BincompError, ValueError):
    pass


class GenerationFailedError(BincompError):
    pass


class SdpError(BincompError):
    """Solver failure; `solution` holds the best iterate seen, when there is one."""

    def __init__(self, message: str, solution: Optional[Any] = None) -> None:
        super().__init__(message)
        self.solution = solution


class SdpInfeasibleError(SdpError):
    pass


class NumericalBreakdownError(SdpError):
    pass


class RangeMismatchError(BincompError):
    pass


class RankDegenerateError(BincompError):
    pass


class NoFiniteBoundError(BincompError):
    pass


class NotRankOneError(BincompError):
    pass


class RoundingFailedError(BincompError):
    pass


class NotInOpenSimplexError(BincompError):
    pass


class LargeResidualError(BincompError):
    pass


class ConstraintSelectionFailedError(BincompError):
    pass


class DeflationFailedError(BincompError):
    pass


class NotPsdAfterReductionError(BincompError):
    pass


class SignResolutionFailedError(BincompError):
    pass


class NotSchurIndependentError(BincompError):
    pass


class NoEigengapError(BincompError):
    pass


class DiagonalNotConstantError(BincompError):
    pass


class UnmatchedComponentError(BincompError):
    def __init__(self, message: str, report: Optional[Any] = None) -> None:
        super().__init__(message)
        self.report = report


class MatrixFileError(BincompError, ValueError):
    pass


class DecompositionFailed(BincompError):
    """A decomposition pipeline stopped; `stage` names where and `cause` says why."""

    def __init__(self, stage: str, cause: Optional[BaseException] = None, message: str = "") -> None:
        detail = message or (str(cause) if cause is not None else "decomposition failed")
        super().__init__(f"{stage}: {detail}")
        self.stage = stage
        self.cause = cause
