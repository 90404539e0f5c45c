"""CSV, JSON and binary artifacts.

Floats are written with ``repr``, the shortest decimal that reads back to the same double, so repeated runs
of the same configuration produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from flatsteer.heatsim import HeatField

__all__ = [
    "SCHEMA_VERSION",
    "read_field_binary",
    "write_control_csv",
    "write_csv",
    "write_derivative_csv",
    "write_field_binary",
    "write_field_csv",
    "write_json",
    "write_series_csv",
    "write_table_csv",
]

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

_HEADER = np.dtype("<i4")
_VALUES = np.dtype("<f8")


def _cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.debug("wrote %s", path)
    return path


def write_table_csv(path: str | Path, rows: Sequence[Mapping[str, Any]]) -> Path:
    """Rows of dicts sharing the keys of the first row; an empty table writes an empty file."""
    if not rows:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("", encoding="utf-8")
        return path
    header = list(rows[0])
    return write_csv(path, header, ([row[key] for key in header] for row in rows))


def write_control_csv(path: str | Path, control: Any, times: np.ndarray | None = None) -> Path:
    """Columns ``t, value_real, value_imag`` on ``times`` (the control's own grid by default)."""
    times = control.grid if times is None else np.asarray(times, dtype=float)
    values = np.asarray(control(times), dtype=complex)
    return write_csv(path, ("t", "value_real", "value_imag"), zip(times, values.real, values.imag, strict=True))


def write_field_csv(path: str | Path, field: HeatField, stride: int = 1) -> Path:
    """Columns ``x, t, value`` for every ``stride``-th time row; the terminal row is always included."""
    rows = sorted(set(range(0, field.t.size, stride)) | {field.t.size - 1})

    def records():
        for n in rows:
            for xj, v in zip(field.x, field.values[n], strict=True):
                yield xj, field.t[n], v

    return write_csv(path, ("x", "t", "value"), records())


def write_series_csv(path: str | Path, series: Any, x: np.ndarray, t: np.ndarray) -> Path:
    """Columns ``x, t, value`` of a truncated series field; complex values keep their real part."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    values = np.real(series(x, t))

    def records():
        for n, tn in enumerate(t):
            for j, xj in enumerate(x):
                yield xj, tn, values[n, j]

    return write_csv(path, ("x", "t", "value"), records())


def write_derivative_csv(path: str | Path, output: Any, t: np.ndarray, order: int | None = None) -> Path:
    """Columns ``n, t, value, scaled`` of a flat output's derivative table."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    derivs = np.real(output.derivatives(t, order))
    scaled = np.real(output.scaled(t, order))

    def records():
        for n in range(derivs.shape[0]):
            for k, tk in enumerate(t):
                yield n, tk, derivs[n, k], scaled[n, k]

    return write_csv(path, ("n", "t", "value", "scaled"), records())


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def _finite(obj: Any) -> Any:
    """Replace non-finite floats with strings so the report stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {key: _finite(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(value) for value in obj]
    return obj


def write_json(path: str | Path, payload: Mapping[str, Any]) -> Path:
    """JSON report with ``schema_version`` first and sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = json.loads(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, default=_default))
    path.write_text(json.dumps(_finite(data), indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def write_field_binary(path: str | Path, field: HeatField) -> Path:
    """Header ``nx, nt, round(x0 * 1e6), round(x1 * 1e6)`` as little-endian int32, then row-major doubles."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    x0, x1 = field.domain
    header = np.array([field.nx, field.nt, round(x0 * 1e6), round(x1 * 1e6)], dtype=_HEADER)
    with path.open("wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype=_VALUES).tobytes())
    return path


def read_field_binary(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Domain bounds and the ``(nt + 1, nx + 1)`` value array of a binary dump."""
    raw = Path(path).read_bytes()
    nx, nt, x0, x1 = np.frombuffer(raw[:16], dtype=_HEADER)
    values = np.frombuffer(raw[16:], dtype=_VALUES)
    if values.size != (nt + 1) * (nx + 1):
        raise ValueError(f"binary field holds {values.size} values, header announces {(nt + 1) * (nx + 1)}")
    return np.array([x0, x1]) / 1e6, values.reshape(nt + 1, nx + 1)
