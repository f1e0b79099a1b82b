"""Machine-readable run reports.

A report names its input by path and sha256 of the content, carries the tool
version and the result payload, and keeps the degeneracy and retry log. JSON
output uses sorted keys and floats rounded to 12 significant digits, so two
runs on the same input with the same version produce the same bytes. Wall
time is only written when asked for.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from . import __version__

FLOAT_DIGITS = 12


class InputIdentity(BaseModel):
    path: str
    sha256: str

    @classmethod
    def of_file(cls, path: Path) -> "InputIdentity":
        data = Path(path).read_bytes()
        return cls(path=str(path), sha256=hashlib.sha256(data).hexdigest())


class RunReport(BaseModel):
    command: str
    input: InputIdentity
    version: str = __version__
    success: bool = True
    result: Dict[str, Any] = Field(default_factory=dict)
    parity: Optional[int] = None
    degeneracies: List[Dict[str, Any]] = Field(default_factory=list)
    retries: List[Dict[str, Any]] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None
    elapsed_seconds: Optional[float] = None

    def to_json(self, include_timing: bool = False) -> str:
        data = self.model_dump()
        if not include_timing:
            data.pop("elapsed_seconds", None)
        if data.get("parity") is None:
            data.pop("parity", None)
        return json.dumps(_normalize(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.model_validate(json.loads(text))


def _normalize(value: Any) -> Any:
    if isinstance(value, float):
        return float(f"{value:.{FLOAT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _normalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_normalize(v) for v in value]
    return value


def success_report(command: str, identity: InputIdentity, result: Dict[str, Any], parity: Optional[int]) -> RunReport:
    """Report for a completed run; degeneracy and retry lists are lifted out of ``result``."""
    body = dict(result)
    return RunReport(
        command=command,
        input=identity,
        result=body,
        parity=parity,
        degeneracies=list(body.pop("degeneracies", [])),
        retries=list(body.pop("retries", [])),
    )


def failure_report(command: str, identity: InputIdentity, exc: BaseException) -> RunReport:
    """Report for a failed run. Parity is absent by construction."""
    events = getattr(exc, "events", None) or []
    retries = getattr(exc, "retries", None) or []
    return RunReport(
        command=command,
        input=identity,
        success=False,
        error={"type": type(exc).__name__, "message": str(exc)},
        degeneracies=[e.to_dict() if hasattr(e, "to_dict") else dict(e) for e in events],
        retries=[r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in retries],
    )


__all__ = ["FLOAT_DIGITS", "InputIdentity", "RunReport", "failure_report", "success_report"]
