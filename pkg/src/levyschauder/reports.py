"""Uniform result containers and deterministic serialisation.

Every verifier returns a :class:`VerificationReport`; every log-log
regression returns a :class:`ScalingFit`.  JSON output uses stable key
order and 17 significant digits, CSV output 10 significant digits, so that
identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DegenerateFit


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of ``log(value) = intercept + slope * log(t)``."""

    slope: float
    intercept: float
    residual: float
    points: tuple[tuple[float, float], ...]

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "points": [list(p) for p in self.points],
        }


def fit_loglog(points: Iterable[tuple[float, float]], min_points: int = 4) -> ScalingFit:
    """Fit a power law through ``(t, value)`` pairs.

    Raises
    ------
    DegenerateFit
        If fewer than ``min_points`` pairs are given or any coordinate is
        non-positive.
    """
    pts = tuple((float(t), float(v)) for t, v in points)
    if len(pts) < min_points:
        raise DegenerateFit(f"need at least {min_points} points, got {len(pts)}")
    arr = np.asarray(pts)
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DegenerateFit("log-log fit needs strictly positive finite values")
    lx, ly = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(lx, ly, 1)
    res = ly - (intercept + slope * lx)
    return ScalingFit(float(slope), float(intercept), float(np.sqrt(np.mean(res**2))), pts)


@dataclass
class VerificationReport:
    """Outcome of one named numerical check."""

    name: str
    inputs: dict[str, Any]
    computed: dict[str, Any]
    tolerance: Any
    passed: bool
    notes: str = ""
    tables: dict[str, list] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.passed)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "inputs": self.inputs,
            "computed": self.computed,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }
        if self.notes:
            out["notes"] = self.notes
        if self.tables:
            out["tables"] = self.tables
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def summary(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}"


def _plain(obj: Any) -> Any:
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _format_float(x: float, digits: int) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = f"{x:.{digits}g}"
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj, 17)
    if isinstance(obj, str):
        import json

        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj)!r}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Serialise to JSON with sorted keys and 17 significant digits."""
    return _encode(_plain(obj), indent, 0) + "\n"


def write_json(path, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(_format_float(float(v), 10))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_csv(header, rows))
