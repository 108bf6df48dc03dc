"""Dense CSV matrix files with an optional `# key=value` metadata line."""
from __future__ import annotations

import io
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from bincomp.errors import MatrixFileError

FLOAT_FORMAT = "%.17g"


def write_matrix(path: str | Path, array, metadata: Optional[Mapping[str, object]] = None, integer: bool = False) -> None:
    arr = np.asarray(array)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise MatrixFileError(f"only 2-D arrays can be written, got shape {arr.shape}")

    header = ""
    if metadata:
        header = " ".join(f"{key}={value}" for key, value in metadata.items())
    np.savetxt(
        Path(path),
        arr,
        fmt="%d" if integer else FLOAT_FORMAT,
        delimiter=",",
        header=header,
        comments="# ",
    )


def read_matrix(path: str | Path) -> Tuple[np.ndarray, Dict[str, str]]:
    """Return (array, metadata). Rows must be rectangular and every entry numeric."""
    file_path = Path(path)
    if not file_path.exists():
        raise MatrixFileError(f"Matrix file not found: {file_path}")

    metadata: Dict[str, str] = {}
    rows = []
    for line in file_path.read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            for token in stripped.lstrip("#").split():
                key, sep, value = token.partition("=")
                if sep:
                    metadata[key] = value
            continue
        rows.append(stripped)

    if not rows:
        raise MatrixFileError(f"{file_path} contains no matrix rows")
    try:
        arr = np.loadtxt(io.StringIO("\n".join(rows)), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise MatrixFileError(f"{file_path} is not a rectangular numeric CSV: {exc}") from None
    if not np.all(np.isfinite(arr)):
        raise MatrixFileError(f"{file_path} contains NaN or Inf entries")
    return arr, metadata
