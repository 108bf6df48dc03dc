from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from colorama import Fore, Style, init

from bincomp.certificate_checker import CheckResult
from bincomp.scd import IterationRecord


@dataclass
class ReportEntry:
    phase: str
    name: str
    passed: bool
    message: str


class Reporter:
    def __init__(self, use_color: bool = True) -> None:
        init(autoreset=True)
        self.use_color = use_color
        self.entries: List[ReportEntry] = []

    def add_check(self, phase: str, check: CheckResult) -> None:
        self.entries.append(
            ReportEntry(phase=phase, name=f"Check {check.name}", passed=check.passed, message=check.message)
        )

    def add_iteration(self, phase: str, record: IterationRecord) -> None:
        message = (
            f"rank={record.rank}, objective={record.objective:.6g}, zeta={record.zeta:.9g}, "
            f"sdp={record.solver_status}/{record.solver_iterations} it, residual={record.residual:.1e}"
        )
        if record.redraws:
            message += f", redraws={record.redraws}"
        self.entries.append(ReportEntry(phase=phase, name=f"Round {record.iteration}", passed=True, message=message))

    def add_custom(self, phase: str, name: str, passed: bool, message: str) -> None:
        self.entries.append(ReportEntry(phase=phase, name=name, passed=passed, message=message))

    @property
    def has_failures(self) -> bool:
        return any(not entry.passed for entry in self.entries)

    def render(self) -> str:
        lines = ["========== BINCOMP REPORT =========="]

        for entry in self.entries:
            marker = "[PASS]" if entry.passed else "[FAIL]"
            if self.use_color:
                color = Fore.GREEN if entry.passed else Fore.RED
                marker = f"{color}{marker}{Style.RESET_ALL}"
            lines.append(f"{marker} {entry.phase}: {entry.name} - {entry.message}")

        passed_count = sum(1 for entry in self.entries if entry.passed)
        failed_count = len(self.entries) - passed_count
        lines.append("====================================")
        lines.append(f"Summary: passed={passed_count}, failed={failed_count}, total={len(self.entries)}")
        return "\n".join(lines)

    def print(self) -> None:
        print(self.render())

    def write(self, path: str | Path) -> None:
        output_path = Path(path)
        output_path.write_text(self.render(), encoding="utf-8")


def input_hash(array: np.ndarray) -> str:
    """sha256 over the little-endian float64 bytes and the shape."""
    arr = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    digest = hashlib.sha256()
    digest.update(repr(arr.shape).encode("ascii"))
    digest.update(arr.tobytes())
    return digest.hexdigest()


def decomposition_report(
    *,
    matrix: np.ndarray,
    algorithm: str,
    seed: int,
    components: Optional[np.ndarray] = None,
    weights: Optional[np.ndarray] = None,
    residual_fro: Optional[float] = None,
    schur_certificate: bool = False,
    timings_ms: Optional[Dict[str, float]] = None,
    solver_stats: Optional[Dict[str, Any]] = None,
    failure_stage: Optional[str] = None,
    error: Optional[str] = None,
) -> Dict[str, Any]:
    return {
        "input_hash": input_hash(matrix),
        "algorithm": algorithm,
        "components": [] if components is None else [[int(v) for v in col] for col in np.asarray(components).T],
        "weights": [] if weights is None else [float(w) for w in weights],
        "residual_fro": residual_fro,
        "schur_certificate": bool(schur_certificate),
        "seed": seed,
        "timings_ms": dict(timings_ms or {}),
        "solver_stats": dict(solver_stats or {}),
        "status": "ok" if failure_stage is None else "failed",
        "failure_stage": failure_stage,
        "error": error,
    }


def write_json(path: str | Path, payload: Dict[str, Any]) -> None:
    """Sorted keys and fixed indentation: equal payloads give equal bytes."""
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
