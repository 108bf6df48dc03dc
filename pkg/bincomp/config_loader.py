from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import yaml


ENV_PREFIX = "BINCOMP_"

# Environment variable suffix -> Tolerances field.
_ENV_TOLERANCES = {
    "RANK_TOL": "rank_rel_tol",
    "PSD_TOL": "psd_tol",
    "ROUND_TOL": "round_tol",
}


class ConfigValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    rank_rel_tol: float = 1e-8
    psd_tol: float = 1e-8
    round_tol: float = 1e-4
    asym_tol: float = 1e-6
    rank_one_ratio: float = 1e-4
    extraction_tol: float = 1e-3
    residual_tol: float = 1e-6

    def __post_init__(self) -> None:
        for item in fields(self):
            value = getattr(self, item.name)
            if not isinstance(value, (int, float)) or not 0.0 < float(value) < 1.0:
                raise ConfigValidationError(
                    f"Tolerance `{item.name}` must be a number strictly between 0 and 1, got {value!r}"
                )


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200
    duality_gap_tol: float = 1e-8
    step_fraction: float = 0.98
    feasibility_tol: float = 1e-7
    initial_scale: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.max_iterations, int) or self.max_iterations <= 0:
            raise ConfigValidationError("`max_iterations` must be a positive integer")
        if self.duality_gap_tol <= 0:
            raise ConfigValidationError("`duality_gap_tol` must be positive")
        if self.feasibility_tol <= 0:
            raise ConfigValidationError("`feasibility_tol` must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise ConfigValidationError("`step_fraction` must lie in (0, 1)")
        if self.initial_scale is not None and self.initial_scale <= 0:
            raise ConfigValidationError("`initial_scale` must be positive when provided")


@dataclass(frozen=True)
class DecompositionOptions:
    tolerances: Tolerances = field(default_factory=Tolerances)
    solver: SolverOptions = field(default_factory=SolverOptions)
    max_redraws: int = 20

    def __post_init__(self) -> None:
        if not isinstance(self.max_redraws, int) or self.max_redraws <= 0:
            raise ConfigValidationError("`max_redraws` must be a positive integer")

    def with_tolerances(self, **overrides: float) -> "DecompositionOptions":
        changed = {key: value for key, value in overrides.items() if value is not None}
        if not changed:
            return self
        return replace(self, tolerances=replace(self.tolerances, **changed))


DEFAULT_TOLERANCES = Tolerances()
DEFAULT_OPTIONS = DecompositionOptions()


def load_config(
    path: str | Path | None = None,
    environ: Optional[Mapping[str, str]] = None,
) -> DecompositionOptions:
    """Defaults, then the optional YAML file, then BINCOMP_* environment variables."""
    raw: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.exists():
            raise ConfigValidationError(f"Config file not found: {config_path}")
        loaded = yaml.safe_load(config_path.read_text(encoding="utf-8"))
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigValidationError("Config root must be a YAML mapping")
        raw = loaded

    unknown = set(raw) - {"tolerances", "solver", "max_redraws"}
    if unknown:
        raise ConfigValidationError(f"Unknown config keys: {', '.join(sorted(unknown))}")

    tolerance_values = _parse_section(raw, "tolerances", Tolerances)
    solver_values = _parse_section(raw, "solver", SolverOptions)

    env = os.environ if environ is None else environ
    for suffix, name in _ENV_TOLERANCES.items():
        value = env.get(f"{ENV_PREFIX}{suffix}")
        if value is None or not value.strip():
            continue
        tolerance_values[name] = _as_float(f"{ENV_PREFIX}{suffix}", value)

    max_redraws = raw.get("max_redraws", DecompositionOptions.max_redraws)
    if isinstance(max_redraws, bool) or not isinstance(max_redraws, int):
        raise ConfigValidationError("`max_redraws` must be an integer")

    return DecompositionOptions(
        tolerances=Tolerances(**tolerance_values),
        solver=SolverOptions(**solver_values),
        max_redraws=max_redraws,
    )


def _parse_section(raw: Dict[str, Any], key: str, target: type) -> Dict[str, Any]:
    section = raw.get(key, {})
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigValidationError(f"`{key}` must be a mapping")

    allowed = {item.name: item for item in fields(target)}
    values: Dict[str, Any] = {}
    for name, value in section.items():
        if name not in allowed:
            raise ConfigValidationError(
                f"Unknown `{key}` field `{name}`. Allowed: {', '.join(sorted(allowed))}"
            )
        if name == "max_iterations":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigValidationError(f"`{key}.{name}` must be an integer")
            values[name] = value
        elif value is None and name == "initial_scale":
            values[name] = None
        else:
            values[name] = _as_float(f"{key}.{name}", value)
    return values


def _as_float(label: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigValidationError(f"`{label}` must be numeric, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigValidationError(f"`{label}` must be numeric, got {value!r}") from None
