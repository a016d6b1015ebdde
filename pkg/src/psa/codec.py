"""File encodings for the CLI: JSON documents and node-grid CSVs.

JSON floats are written with Python's shortest round-trip repr and NaN or
infinity is refused, so a file read back gives the same doubles. Every write
goes to a temporary file in the target directory and is renamed into place.

Input validation mirrors the cache validators elsewhere in the project: a
missing or malformed field raises ``InputValidationError`` naming the field.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .legendre import gauss_rule
from .models import AngularFunction, CrossSectionCoefficients, PartialWaves, PhaseShifts

LOGGER = logging.getLogger(__name__)

# Nodes in a CSV must match the Gauss rule of the same order to this accuracy.
_NODE_TOL = 1e-12


class InputValidationError(ValueError):
    """Raised when an input document is missing a field or holds bad values."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


# ── Writing ──────────────────────────────────────────────────────────────────


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    LOGGER.debug("Wrote %s", path)
    return path


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def dump_json(document: dict, path: str | Path) -> Path:
    return atomic_write_text(path, dumps(document))


def grid_csv(x: np.ndarray, values: np.ndarray, value_column: str = "value") -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["cos_theta", value_column])
    for xi, vi in zip(np.asarray(x, dtype=float), np.asarray(values, dtype=float)):
        writer.writerow([repr(float(xi)), repr(float(vi))])
    return buffer.getvalue()


def write_grid_csv(
    path: str | Path, x: np.ndarray, values: np.ndarray, value_column: str = "value"
) -> Path:
    return atomic_write_text(path, grid_csv(x, values, value_column))


def write_angular_csv(path: str | Path, func: AngularFunction) -> Path:
    return write_grid_csv(path, func.rule.nodes, func.values)


# ── Reading ──────────────────────────────────────────────────────────────────


def load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputValidationError(str(path), "file not found") from exc
    except json.JSONDecodeError as exc:
        raise InputValidationError(str(path), f"invalid JSON ({exc.msg})") from exc
    if not isinstance(document, dict):
        raise InputValidationError(str(path), "top level must be a JSON object")
    return document


def _require(document: dict, field: str) -> object:
    if field not in document:
        raise InputValidationError(field, "missing required field")
    return document[field]


def _finite(value: object, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InputValidationError(field, f"expected a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        raise InputValidationError(field, "values must be finite")
    return number


def _real_list(value: object, field: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise InputValidationError(field, "expected a non-empty list of numbers")
    return np.array([_finite(v, field) for v in value])


def _complex_entry(value: object, field: str) -> complex:
    if isinstance(value, list):
        if len(value) != 2:
            raise InputValidationError(field, f"expected [re, im], got {value!r}")
        return complex(_finite(value[0], field), _finite(value[1], field))
    return complex(_finite(value, field), 0.0)


def phase_shifts_from_dict(document: dict) -> PhaseShifts:
    return PhaseShifts(_real_list(_require(document, "delta"), "delta"))


def phase_shifts_to_dict(shifts: PhaseShifts) -> dict:
    return {"delta": [float(d) for d in shifts.delta]}


def waves_from_dict(document: dict) -> PartialWaves:
    value = _require(document, "f")
    if not isinstance(value, list) or not value:
        raise InputValidationError("f", "expected a non-empty list of [re, im] pairs")
    return PartialWaves([_complex_entry(v, "f") for v in value])


def waves_to_dict(waves: PartialWaves) -> dict:
    return {"f": [[float(z.real), float(z.imag)] for z in waves.f]}


def coefficients_from_dict(document: dict) -> CrossSectionCoefficients:
    return CrossSectionCoefficients(_real_list(_require(document, "C"), "C"))


def coefficients_to_dict(coeffs: CrossSectionCoefficients) -> dict:
    return {"C": [float(c) for c in coeffs.C]}


def magnitudes_from_dict(document: dict) -> np.ndarray:
    """|a_l| from {"coefficients": [...]} of reals or [re, im] pairs."""
    value = _require(document, "coefficients")
    if not isinstance(value, list) or not value:
        raise InputValidationError("coefficients", "expected a non-empty list")
    return np.abs(np.array([_complex_entry(v, "coefficients") for v in value]))


def read_angular_csv(path: str | Path) -> AngularFunction:
    """Read ``cos_theta,value`` rows taken at the nodes of a Gauss rule.

    The rule order is the row count; nodes must match it in ascending order.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise InputValidationError(str(path), "file not found") from exc
    rows = [row for row in csv.reader(io.StringIO(text)) if row]
    if not rows or [c.strip() for c in rows[0]] != ["cos_theta", "value"]:
        raise InputValidationError("header", "expected 'cos_theta,value'")
    body = rows[1:]
    if not body:
        raise InputValidationError("value", "no data rows")

    x, values = [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != 2:
            raise InputValidationError("row", f"line {lineno}: expected 2 columns")
        try:
            x.append(float(row[0]))
            values.append(float(row[1]))
        except ValueError as exc:
            raise InputValidationError("row", f"line {lineno}: {exc}") from exc
    values_arr = np.array(values)
    if not np.all(np.isfinite(values_arr)):
        raise InputValidationError("value", "values must be finite")

    rule = gauss_rule(len(x))
    if np.max(np.abs(np.array(x) - rule.nodes)) > _NODE_TOL:
        raise InputValidationError(
            "cos_theta", f"nodes do not match the {rule.order}-point Gauss-Legendre rule"
        )
    return AngularFunction(rule=rule, values=values_arr)
