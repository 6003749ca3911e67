"""JSON formats for instances, solutions and reports.

Floats are written with 17 significant digits so that equal inputs give
byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import GausskraftError
from .polytope import ProblemInstance


class FormatError(GausskraftError, ValueError):
    """Input file is not a well-formed instance or density."""


def _reject_constant(name: str):
    raise FormatError(f"non-finite number {name} in input")


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON: {exc}") from exc


def instance_from_dict(d: Any) -> ProblemInstance:
    if not isinstance(d, dict):
        raise FormatError("instance must be a JSON object")
    missing = {"dimension", "points", "mu"} - d.keys()
    if missing:
        raise FormatError(f"instance is missing {sorted(missing)}")
    try:
        dim = int(d["dimension"])
        points = np.asarray(d["points"], dtype=float)
        mu = np.asarray(d["mu"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad instance arrays: {exc}") from exc
    if dim not in (1, 2):
        raise FormatError("dimension must be 1 or 2")
    if points.ndim != 2 or points.shape[1] != dim + 1:
        raise FormatError(f"points must be rows of length {dim + 1}")
    if mu.ndim != 1 or len(mu) != len(points):
        raise FormatError("points and mu lengths differ")
    if not (np.all(np.isfinite(points)) and np.all(np.isfinite(mu))):
        raise FormatError("instance contains non-finite values")
    try:
        return ProblemInstance(dim, points, mu)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def instance_to_dict(instance: ProblemInstance) -> dict:
    return {"dimension": instance.dimension, "points": instance.points.tolist(), "mu": instance.mu.tolist()}


def load_instance(path: str | Path) -> ProblemInstance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return instance_from_dict(loads(text))


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj) + 0.0  # drop the sign of negative zero
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[" + pad + ("," + pad).join(parts) + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become null."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))
