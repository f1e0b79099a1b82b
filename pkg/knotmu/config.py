"""Tolerances and engine settings.

Precedence, lowest first: defaults, TOML file, environment, explicit overrides.
The TOML file is ``knotmu.toml`` in the working directory unless
``KNOTMU_CONFIG`` points elsewhere. Example::

    [tolerance]
    eq_tol = 1e-9
    sep_tol = 1e-6
    endpoint_tol = 1e-6

    [engine]
    max_retries = 8
    stable_magnitude = 0.001
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import tomlkit

logger = logging.getLogger("knotmu.config")

CONFIG_FILENAME = "knotmu.toml"
CONFIG_ENV = "KNOTMU_CONFIG"

_ENV_TOLERANCE = {
    "KNOTMU_EQ_TOL": "eq_tol",
    "KNOTMU_SEP_TOL": "sep_tol",
    "KNOTMU_ENDPOINT_TOL": "endpoint_tol",
}
_ENV_ENGINE = {
    "KNOTMU_MAX_RETRIES": ("max_retries", int),
    "KNOTMU_STABLE_MAGNITUDE": ("stable_magnitude", float),
    "KNOTMU_GRID_RESOLUTION": ("grid_resolution", int),
}


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by every engine."""

    eq_tol: float = 1e-9
    sep_tol: float = 1e-6
    endpoint_tol: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("eq_tol", "sep_tol", "endpoint_tol"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"Tolerance {name} must be strictly positive, got {value!r}")
        if self.sep_tol < self.eq_tol:
            raise ValueError(f"sep_tol ({self.sep_tol}) must be >= eq_tol ({self.eq_tol})")

    def as_dict(self) -> Dict[str, float]:
        return {"eq_tol": self.eq_tol, "sep_tol": self.sep_tol, "endpoint_tol": self.endpoint_tol}


DEFAULT_TOLERANCE = Tolerance()


@dataclass(frozen=True)
class Settings:
    tolerance: Tolerance = field(default_factory=Tolerance)
    max_retries: int = 8
    stable_magnitude: float = 1e-3
    grid_resolution: int = 1024
    grid_refinement_depth: int = 6
    ray_length_factor: float = 50.0

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not self.stable_magnitude > 0:
            raise ValueError("stable_magnitude must be positive")
        if self.grid_resolution < 256 or self.grid_resolution & (self.grid_resolution - 1):
            raise ValueError(f"grid_resolution must be a power of two >= 256, got {self.grid_resolution}")

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with tolerance fields and engine fields replaced."""
        tol_fields = {k: v for k, v in overrides.items() if k in _tolerance_keys() and v is not None}
        engine_fields = {k: v for k, v in overrides.items() if k not in _tolerance_keys() and v is not None}
        tolerance = replace(self.tolerance, **tol_fields) if tol_fields else self.tolerance
        return replace(self, tolerance=tolerance, **engine_fields)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["tolerance"] = self.tolerance.as_dict()
        return data


def _tolerance_keys() -> set:
    return {"eq_tol", "sep_tol", "endpoint_tol"}


def config_path(explicit: Optional[Path] = None) -> Path:
    if explicit is not None:
        return Path(explicit)
    env_path = os.environ.get(CONFIG_ENV)
    if env_path:
        return Path(env_path).expanduser()
    return Path.cwd() / CONFIG_FILENAME


def _from_document(doc: Mapping[str, Any]) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    tol = doc.get("tolerance") or {}
    for key in _tolerance_keys():
        if key in tol:
            values[key] = float(tol[key])
    engine = doc.get("engine") or {}
    for key, caster in (
        ("max_retries", int),
        ("stable_magnitude", float),
        ("grid_resolution", int),
        ("grid_refinement_depth", int),
        ("ray_length_factor", float),
    ):
        if key in engine:
            values[key] = caster(engine[key])
    return values


def _from_environment(env: Mapping[str, str]) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for var, key in _ENV_TOLERANCE.items():
        raw = env.get(var)
        if raw:
            try:
                values[key] = float(raw)
            except ValueError as exc:
                raise ValueError(f"Invalid {var}={raw!r}: {exc}") from exc
    for var, (key, caster) in _ENV_ENGINE.items():
        raw = env.get(var)
        if raw:
            try:
                values[key] = caster(raw)
            except ValueError as exc:
                raise ValueError(f"Invalid {var}={raw!r}: {exc}") from exc
    return values


def load_settings(
    path: Optional[Path] = None,
    env: Optional[Mapping[str, str]] = None,
    **overrides: Any,
) -> Settings:
    """Resolve settings from defaults, TOML file, environment and overrides."""
    settings = Settings()
    target = config_path(path)
    if target.exists():
        doc = tomlkit.parse(target.read_text(encoding="utf-8"))
        settings = settings.with_overrides(**_from_document(doc))
        logger.debug("Loaded settings from %s", target)
    settings = settings.with_overrides(**_from_environment(os.environ if env is None else env))
    return settings.with_overrides(**overrides)


def ensure_table(doc: tomlkit.TOMLDocument, key: str) -> tomlkit.items.Table:
    """Return an existing table or create a new mutable table."""
    table = doc.get(key)
    if table is None:
        table = tomlkit.table()
        doc[key] = table
    return table


def save_settings(settings: Settings, path: Optional[Path] = None) -> Path:
    """Write settings into a TOML file, keeping any unrelated tables."""
    target = config_path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if target.exists():
        doc = tomlkit.parse(target.read_text(encoding="utf-8"))
    else:
        doc = tomlkit.document()
    tol = ensure_table(doc, "tolerance")
    for key, value in settings.tolerance.as_dict().items():
        tol[key] = value
    engine = ensure_table(doc, "engine")
    engine["max_retries"] = settings.max_retries
    engine["stable_magnitude"] = settings.stable_magnitude
    engine["grid_resolution"] = settings.grid_resolution
    engine["grid_refinement_depth"] = settings.grid_refinement_depth
    engine["ray_length_factor"] = settings.ray_length_factor
    target.write_text(tomlkit.dumps(doc), encoding="utf-8")
    return target


__all__ = [
    "CONFIG_FILENAME",
    "DEFAULT_TOLERANCE",
    "Settings",
    "Tolerance",
    "config_path",
    "load_settings",
    "save_settings",
]
